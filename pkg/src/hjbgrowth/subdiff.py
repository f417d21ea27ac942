"""One-dimensional concave calculus: one-sided derivatives, subdifferentials, mean value points."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from hjbgrowth.errors import DomainError, NumericError

SINGLETON_RTOL = 1e-6
STEP_LADDER = tuple(10.0 ** -e for e in range(3, 9))


def is_singleton_gap(lo: float, hi: float, rtol: float = SINGLETON_RTOL) -> bool:
    return hi - lo <= rtol * max(1.0, abs(lo) + abs(hi))


@dataclass(frozen=True)
class SubdiffInterval:
    """Closed interval [D+G(x), D-G(x)] of supporting slopes of a concave G at x."""

    lo: float
    hi: float
    x: float = math.nan

    def __post_init__(self):
        if self.lo > self.hi + SINGLETON_RTOL * max(1.0, abs(self.lo) + abs(self.hi)):
            raise ValueError(f"subdifferential with lo={self.lo} > hi={self.hi}: function not concave at {self.x}")

    @property
    def is_singleton(self) -> bool:
        return is_singleton_gap(self.lo, self.hi)

    @property
    def gap(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, p: float, tol: float = 0.0) -> bool:
        return self.lo - tol <= p <= self.hi + tol

    def inflated_contains(self, other: "SubdiffInterval", eps: float) -> bool:
        return self.lo - eps <= other.lo and other.hi <= self.hi + eps


@dataclass(frozen=True)
class ConcaveFunction:
    """Scalar concave function on an open interval, optionally with analytic one-sided slopes."""

    fn: Callable[[float], float]
    d_plus: Optional[Callable[[float], float]] = None
    d_minus: Optional[Callable[[float], float]] = None
    domain: tuple = (-math.inf, math.inf)

    def __call__(self, x):
        return self.fn(x)


def as_concave(G, domain=None) -> ConcaveFunction:
    if isinstance(G, ConcaveFunction):
        return G
    return ConcaveFunction(G, domain=domain or (-math.inf, math.inf))


def _one_sided(G: ConcaveFunction, x: float, side: int) -> float:
    """Difference-quotient ladder with first-order Richardson extrapolation.

    For concave G the forward quotient increases and the backward quotient
    decreases as h shrinks; successive estimates that break this ordering by
    more than rounding level indicate a non-concave input.
    """
    scale = max(1.0, abs(x))
    gx = G(x)
    q, hs = [], []
    for h0 in STEP_LADDER:
        h = h0 * scale
        if not (G.domain[0] <= x + side * h <= G.domain[1]):
            continue
        q.append(side * (G(x + side * h) - gx) / h)
        hs.append(h)
    if len(q) < 2:
        raise DomainError(f"no admissible difference steps at x={x}")
    q, hs = np.asarray(q), np.asarray(hs)
    roundoff = 8 * np.finfo(float).eps * (1.0 + abs(gx)) / hs
    noise = 1e-7 * (1.0 + np.abs(q).max()) + roundoff[1:] + roundoff[:-1]
    # concavity: forward quotients nondecreasing as h shrinks, backward ones nonincreasing
    if np.any(side * np.diff(q) < -noise):
        raise NumericError(f"difference quotients not monotone at x={x}; function may not be concave")
    rich = q[1:] + (q[1:] - q[:-1]) / 9.0
    if len(rich) >= 2:
        # most stable consecutive pair of extrapolated values
        i = int(np.argmin(np.abs(np.diff(rich)))) + 1
        return float(rich[i])
    return float(rich[-1])


def subdiff_at(G, x: float, domain=None) -> SubdiffInterval:
    """[D+G(x), D-G(x)] at an interior point; analytic one-sided slopes are used when supplied."""
    G = as_concave(G, domain)
    lo_dom, hi_dom = G.domain
    if not (lo_dom < x < hi_dom):
        raise DomainError(f"x={x} is not interior to the domain {G.domain}")
    lo = float(G.d_plus(x)) if G.d_plus is not None else _one_sided(G, x, +1)
    hi = float(G.d_minus(x)) if G.d_minus is not None else _one_sided(G, x, -1)
    if G.d_plus is None and G.d_minus is None and is_singleton_gap(lo, hi, 1e-5):
        # finite-difference round-off on a smooth point: collapse to the centred value
        m = 0.5 * (lo + hi)
        lo = hi = m
    if lo > hi:
        snap = SINGLETON_RTOL * max(1.0, abs(lo) + abs(hi))
        if lo - hi <= snap:
            lo = hi = 0.5 * (lo + hi)
    return SubdiffInterval(lo, hi, float(x))


def check_concave_on(G, a: float, b: float, samples: int = 64, rng=None) -> Optional[tuple]:
    """Midpoint test on [a, b]; returns a violating (x1, x2, t) triple or None."""
    G = as_concave(G)
    rng = rng or np.random.default_rng(12345)
    xs = np.linspace(a, b, samples)
    vals = np.array([G(x) for x in xs])
    for i in range(1, samples - 1):
        chord = 0.5 * (vals[i - 1] + vals[i + 1])
        if vals[i] < chord - 1e-10 * (1 + abs(chord)):
            return (xs[i - 1], xs[i + 1], 0.5)
    for _ in range(samples):
        x1, x2 = np.sort(rng.uniform(a, b, 2))
        t = rng.uniform(0.05, 0.95)
        left = G(t * x1 + (1 - t) * x2)
        right = t * G(x1) + (1 - t) * G(x2)
        if left < right - 1e-10 * (1 + abs(right)):
            return (x1, x2, t)
    return None


@dataclass(frozen=True)
class MeanValuePoint:
    k: float
    r: float
    subdiff: SubdiffInterval


def mean_value_point(G, k1: float, k2: float, tol: float = 1e-13) -> MeanValuePoint:
    """Point k in (k1, k2) whose subdifferential contains the secant slope r.

    k is located by bisection on the one-sided slopes of g(x) = G(x) - r x,
    which is concave with g(k1) = g(k2): its maximiser carries 0 in its
    subdifferential, i.e. r in the subdifferential of G.
    """
    if not k1 < k2:
        raise ValueError(f"need k1 < k2, got {k1}, {k2}")
    G = as_concave(G)
    bad = check_concave_on(G, k1, k2)
    if bad is not None:
        raise ValueError(f"function is not concave on [{k1}, {k2}]: violation at {bad}")
    g1, g2 = G(k1), G(k2)
    r = (g2 - g1) / (k2 - k1)
    mid = 0.5 * (k1 + k2)
    # linear pieces: every interior point works
    if abs(G(mid) - 0.5 * (g1 + g2)) <= 1e-13 * (1 + abs(g1) + abs(g2)):
        return MeanValuePoint(mid, r, subdiff_at(G, mid))
    lo, hi = k1, k2
    for _ in range(200):
        x = 0.5 * (lo + hi)
        s = subdiff_at(G, x)
        if s.lo - r > 0:  # g still increasing to the right
            lo = x
        elif s.hi - r < 0:  # g decreasing to the left
            hi = x
        else:
            return MeanValuePoint(x, r, s)
        if hi - lo <= tol * max(1.0, abs(x)):
            break
    x = 0.5 * (lo + hi)
    return MeanValuePoint(x, r, subdiff_at(G, x))


def uhc_probe(G, x: float, radius: float, samples: int = 32, eps: float = 1e-3) -> bool:
    """Every sampled x' in [x - radius, x + radius] has its subdifferential inside the eps-inflated one at x."""
    G = as_concave(G)
    ref = subdiff_at(G, x)
    for xp in np.linspace(x - radius, x + radius, samples):
        if not (G.domain[0] < xp < G.domain[1]):
            continue
        if not ref.inflated_contains(subdiff_at(G, float(xp)), eps):
            return False
    return True


def partial_k(m, k: float, c: float) -> SubdiffInterval:
    t = m.technology
    return SubdiffInterval(float(t.dk_plus(k, c)), float(t.dk_minus(k, c)), float(k))


def partial_c(m, k: float, c: float) -> SubdiffInterval:
    t = m.technology
    return SubdiffInterval(float(t.dc_plus(k, c)), float(t.dc_minus(k, c)), float(c))
