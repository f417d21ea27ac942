"""Maximising consumption c*(p, k) and the Hamiltonian sup_c {F(k, c) p + u(c, k)}."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from hjbgrowth.errors import NumericError

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
C_FLOOR = 1e-12


@dataclass(frozen=True)
class HamiltonianResult:
    c_star: float
    value: float
    branch: str
    foc_residual: float


def _objective(m, k, p):
    def g(c):
        return float(m.technology(k, c)) * p + float(m.utility(c, k))

    return g


def foc_residual(m, k: float, p: float, c: float) -> float:
    """Distance of 0 from p * dF/dc(k, c) + du/dc(c, k), using the one-sided c-partials."""
    t, u = m.technology, m.utility
    uc = float(u.dc(c, k))
    lo = p * float(t.dc_plus(k, c)) + uc
    hi = p * float(t.dc_minus(k, c)) + uc
    if lo <= 0.0 <= hi:
        return 0.0
    return min(abs(lo), abs(hi))


def maximize(m, k: float, p: float) -> HamiltonianResult:
    """sup over c >= 0 of F(k, c) p + u(c, k) for k > 0, p > 0."""
    if not p > 0:
        raise ValueError(f"Hamiltonian maximiser is defined for p > 0 only (got p={p})")
    if not k > 0:
        raise ValueError(f"capital must be positive (got k={k})")
    t, u = m.technology, m.utility
    if u.kind != "custom" and t.kind in ("rck", "ak"):
        c = float(u.inv_dc(p, k))
        branch = "smooth"
    elif u.kind != "custom" and t.kind == "fiscal":
        c, branch = _fiscal_closed_form(m, k, p)
    else:
        c, branch = _line_search(m, k, p)
    val = float(t(k, c)) * p + float(u(c, k))
    return HamiltonianResult(c, val, branch, foc_residual(m, k, p, c))


def _fiscal_closed_form(m, k, p):
    """Three-branch maximiser: above, at, or below the tax threshold c = A f(k)."""
    t, u = m.technology, m.utility
    af = float(t.A * t.production(k))
    c_upper = float(u.inv_dc(p, k))  # untaxed side, -dF/dc = 1
    c_lower = float(u.inv_dc((1.0 - t.B) * p, k))  # taxed side, -dF/dc = 1 - B
    if c_upper > af:
        return c_upper, "upper"
    if c_lower < af:
        return c_lower, "lower"
    return af, "kink"


def _line_search(m, k, p, max_doublings: int = 400):
    g = _objective(m, k, p)
    lo = C_FLOOR
    hi = 1.0
    prev = g(hi)
    n = 0
    # expand until the objective decreases
    while True:
        nxt = g(2.0 * hi)
        if nxt < prev:
            hi = 2.0 * hi
            break
        hi, prev = 2.0 * hi, nxt
        n += 1
        if n > max_doublings or not math.isfinite(hi):
            raise NumericError(f"failed to bracket the Hamiltonian maximiser at k={k}, p={p}")
    a, b = lo, hi
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = g(x1), g(x2)
    for _ in range(300):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = g(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = g(x1)
        if b - a <= 1e-14 * max(1.0, b):
            break
    c = 0.5 * (a + b)
    # refine on the first-order inclusion when the slope sides bracket zero
    t, u = m.technology, m.utility

    def slope(c_, side):
        d = t.dc_plus(k, c_) if side > 0 else t.dc_minus(k, c_)
        return p * float(d) + float(u.dc(c_, k))

    lo_b, hi_b = max(C_FLOOR, 0.5 * c), 2.0 * c
    if slope(lo_b, +1) > 0 and slope(hi_b, -1) < 0:
        for _ in range(200):
            mid = 0.5 * (lo_b + hi_b)
            if slope(mid, +1) > 0:
                lo_b = mid
            elif slope(mid, -1) < 0:
                hi_b = mid
            else:
                lo_b = hi_b = mid
                break
            if hi_b - lo_b <= 1e-15 * max(1.0, hi_b):
                break
        c_ref = 0.5 * (lo_b + hi_b)
        if g(c_ref) >= g(c):
            c = c_ref
    smooth = t.smooth_in_c(k, c)
    return c, "line_search" if smooth else "line_search_kink"


def hamiltonian_value(m, k: float, p: float) -> float:
    return maximize(m, k, p).value


def hamiltonian_sup(m, k: float, p: float) -> float:
    """Hamiltonian extended to p >= 0; p = 0 gives sup_c u(c, k), possibly +inf."""
    if p > 0:
        return hamiltonian_value(m, k, p)
    if p == 0:
        return float(m.utility.sup_over_c(k))
    raise ValueError("p must be >= 0")


# ---------------------------------------------------------------------------
# vectorised policy for the grid solver


def policy(m, k, p):
    """Vectorised c*(p, k) for array inputs; falls back to the scalar maximiser for custom kinds."""
    k = np.asarray(k, dtype=float)
    p = np.asarray(p, dtype=float)
    k, p = np.broadcast_arrays(k, p)
    if np.any(p <= 0):
        raise ValueError("policy requires p > 0")
    t, u = m.technology, m.utility
    if u.kind != "custom" and t.kind in ("rck", "ak"):
        return u.inv_dc(p, k)
    if u.kind != "custom" and t.kind == "fiscal":
        af = t.A * t.production(k)
        c_upper = u.inv_dc(p, k)
        c_lower = u.inv_dc((1.0 - t.B) * p, k)
        return np.where(c_upper > af, c_upper, np.where(c_lower < af, c_lower, af))
    out = np.empty(k.shape)
    for idx in np.ndindex(k.shape):
        out[idx] = maximize(m, float(k[idx]), float(p[idx])).c_star
    return out


def hamiltonian_vec(m, k, p):
    """Vectorised H(k, p) for p > 0."""
    c = policy(m, k, p)
    return m.technology(k, c) * p + m.utility(c, k), c


# ---------------------------------------------------------------------------
# monotonicity probe


@dataclass(frozen=True)
class MonotonicityReport:
    passed: bool
    c_values: tuple
    violations: tuple

    def __bool__(self):
        return self.passed


def c_star_monotonicity_check(
    m, k: float, p_grid, maximizer: Optional[Callable] = None, tol: float = 1e-12
) -> MonotonicityReport:
    """c*(p, k) nonincreasing along an ascending p grid."""
    p_grid = np.asarray(p_grid, dtype=float)
    if np.any(np.diff(p_grid) <= 0):
        raise ValueError("p grid must be strictly ascending")
    maximizer = maximizer or (lambda m_, k_, p_: maximize(m_, k_, p_).c_star)
    cs = np.array([maximizer(m, k, float(p)) for p in p_grid])
    viol = tuple(int(i) for i in np.nonzero(cs[1:] > cs[:-1] + tol * (1 + np.abs(cs[:-1])))[0])
    return MonotonicityReport(len(viol) == 0, tuple(float(c) for c in cs), viol)
