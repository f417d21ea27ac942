"""Closed-form upper envelopes from a linear majorant of F, and growth-condition certification."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from hjbgrowth.ode import IntegratorSpec, pure_accumulation_path


@dataclass(frozen=True)
class EnvelopeParams:
    """Linear-majorant constants: F(k, c) <= gamma (k - k*) - delta (c - c*) + F(k*, c*).

    ``log_branch`` selects the theta = 1 formulas by flag; it defaults to
    ``theta == 1.0`` exactly, never to a tolerance comparison.
    """

    rho: float
    k_star: float
    c_star: float
    gamma: float
    delta: float
    theta: float
    a: float = 1.0
    b: float = 0.0
    C: float = 0.0
    F_star: float = 0.0
    log_branch: Optional[bool] = None

    def __post_init__(self):
        if self.log_branch is None:
            object.__setattr__(self, "log_branch", self.theta == 1.0)
            if self.theta != 1.0 and abs(self.theta - 1.0) < 1e-12:
                warnings.warn("theta within 1e-12 of 1 evaluated on the theta != 1 branch")
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if not self.delta > 0:
            raise ValueError("envelope needs delta > 0 (F strictly decreasing in c at the witness)")
        if not self.gamma > 0:
            raise ValueError("envelope needs gamma > 0")
        if not self.theta > 0:
            raise ValueError("theta must be positive")
        if self.k_star < 0 or self.c_star < 0:
            raise ValueError("witness point must lie in the nonnegative orthant")
        if self.a < 0 or self.b < 0:
            raise ValueError("a and b must be nonnegative")
        if not self.margin > 0:
            raise ValueError(f"rho - (1 - theta) gamma = {self.margin} must be positive")

    @property
    def margin(self) -> float:
        return self.rho - (1.0 - self.theta) * self.gamma

    @property
    def offset(self) -> float:
        """-k* + (delta c* + F(k*, c*)) / gamma, nonnegative for a genuine supergradient."""
        return -self.k_star + (self.delta * self.c_star + self.F_star) / self.gamma

    def k_hat(self, k_bar):
        return np.asarray(k_bar, dtype=float) + self.offset

    def c_star_level(self, k_bar):
        return self.margin / (self.theta * self.delta) * self.k_hat(k_bar)

    @classmethod
    def from_model(cls, m) -> "EnvelopeParams":
        w = m.assumption5
        if w is None:
            raise ValueError("model has no envelope witness")
        F_star = float(m.technology(w.k_star, w.c_star))
        return cls(
            m.rho, w.k_star, w.c_star, w.gamma, w.delta, w.theta, w.a, w.b, w.C, F_star, log_branch=w.is_log
        )


def _checked_k_hat(params: EnvelopeParams, k_bar):
    kh = params.k_hat(k_bar)
    if np.any(kh <= 0):
        raise ValueError("k_hat must be positive; witness is not a supergradient of F")
    return kh


def v3(params: EnvelopeParams, k_bar):
    """Value of the linear-majorant problem for the consumption term u_theta(c)."""
    cs = params.margin / (params.theta * params.delta) * _checked_k_hat(params, k_bar)
    rho, th, g = params.rho, params.theta, params.gamma
    if params.log_branch:
        out = np.log(cs) / rho + (g - rho) / rho**2
    else:
        out = cs ** (1.0 - th) * th / ((1.0 - th) * params.margin) - 1.0 / (rho * (1.0 - th))
    return float(out) if np.ndim(out) == 0 else out


def v4(params: EnvelopeParams, k_bar):
    """Value of the linear-majorant problem for the capital term u_theta(k)."""
    kh = _checked_k_hat(params, k_bar)
    rho, th, g = params.rho, params.theta, params.gamma
    if params.log_branch:
        out = np.log(kh) / rho + g / rho**2
    else:
        out = kh ** (1.0 - th) / ((1.0 - th) * params.margin) - 1.0 / (rho * (1.0 - th))
    return float(out) if np.ndim(out) == 0 else out


def envelope_value(params: EnvelopeParams, k_bar):
    out = params.a * np.asarray(v3(params, k_bar)) + params.C / params.rho
    if params.b != 0.0:
        out = out + params.b * np.asarray(v4(params, k_bar))
    return float(out) if np.ndim(out) == 0 else out


def upper_envelope(m, k_bar):
    """a V3 + b V4 + C / rho from the model's envelope witness."""
    if m.assumption5 is None:
        raise ValueError("upper_envelope requires an envelope witness on the model")
    return envelope_value(EnvelopeParams.from_model(m), k_bar)


# ---------------------------------------------------------------------------
# growth condition


@dataclass
class GrowthReport:
    passed: bool
    tail: float
    tolerance: float
    trace: list = field(repr=False)
    shortcut: bool = False
    shortcut_gamma: Optional[float] = None
    shortcut_k: Optional[float] = None
    increasing: Optional[bool] = None
    concave: Optional[bool] = None

    @property
    def member(self) -> bool:
        """In the candidate class: trace certified, or the slope shortcut applies to an increasing concave V."""
        return self.passed or (self.shortcut and bool(self.increasing) and bool(self.concave))

    def __bool__(self):
        return self.passed

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["T", "k_plus", "discounted_value"])
            for row in self.trace:
                w.writerow([f"{x:.17g}" for x in row])


def slope_shortcut(m, k_probe=None):
    """Search for gamma in the k-subdifferential of F(., 0) with gamma < rho."""
    k_probe = np.logspace(-4, 6, 201) if k_probe is None else np.asarray(k_probe, dtype=float)
    t = m.technology
    lo = np.asarray(t.dk_plus(k_probe, 0.0), dtype=float)
    hit = np.nonzero(lo < m.rho)[0]
    if hit.size:
        i = int(hit[0])
        return float(lo[i]), float(k_probe[i])
    return None, None


def _evaluator(V):
    if hasattr(V, "evaluate"):
        return V.evaluate
    return V


def _shape_flags(V, k_bar, k_hi):
    if hasattr(V, "nodes"):
        vals = np.asarray(V.values)
        sec = np.diff(vals) / np.diff(np.asarray(V.nodes))
    else:
        ks = np.geomspace(max(1e-3, 1e-2 * k_bar), max(k_hi, 2 * k_bar), 200)
        vals = np.asarray([float(V(k)) for k in ks])
        sec = np.diff(vals) / np.diff(ks)
    tol = 1e-9 * (1.0 + np.abs(sec).max())
    return bool(np.all(sec > 0)), bool(np.all(np.diff(sec) <= tol))


def growth_condition_check(
    V,
    m,
    k_bar: float,
    T_max: Optional[float] = None,
    n_ladder: int = 12,
    spec: Optional[IntegratorSpec] = None,
) -> GrowthReport:
    """Trace e^{-rho T} V(k+(T, k_bar)) on a T ladder up to T_max (default 20/rho).

    Grid-valued V is extrapolated linearly beyond its last node; concavity
    makes the extrapolation an upper bound.
    """
    T_max = 20.0 / m.rho if T_max is None else float(T_max)
    ev = _evaluator(V)
    path = pure_accumulation_path(m, k_bar, T_max, spec, n_out=2, bound_point=None)
    Ts = T_max * np.geomspace(2.0 ** -(n_ladder - 1), 1.0, n_ladder)
    trace = []
    for T in Ts:
        kp = float(path(T))
        trace.append((float(T), kp, math.exp(-m.rho * T) * float(ev(kp))))
    v0 = float(ev(k_bar))
    tol = 1e-6 * (1.0 + abs(v0))
    tail = abs(trace[-1][2])
    gamma, k_at = slope_shortcut(m)
    inc, conc = _shape_flags(V, k_bar, trace[-1][1])
    return GrowthReport(tail <= tol, tail, tol, trace, gamma is not None, gamma, k_at, inc, conc)


@dataclass
class EnvelopeReport:
    passed: bool
    max_excess: float  # max over nodes of V - envelope - margin
    max_tight_gap: float  # max |V - envelope| / |envelope| over the middle 80% of nodes
    envelope: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {"passed": self.passed, "max_excess": self.max_excess, "max_tight_gap": self.max_tight_gap}


def envelope_check(V, m, residual=None, factor: float = 10.0) -> EnvelopeReport:
    """V(k) <= a V3 + b V4 + C / rho + factor * residual(k) at every node."""
    env = np.asarray(upper_envelope(m, V.nodes), dtype=float)
    if residual is None:
        res = np.zeros(V.n)
    else:
        res = np.asarray(residual, dtype=float)
        fill = float(np.nanmax(res)) if np.any(np.isfinite(res)) else 0.0
        res = np.where(np.isfinite(res), res, fill)
    excess = np.asarray(V.values) - env - factor * res
    n = V.n
    mid = slice(int(0.1 * n), int(0.9 * n))
    tight = np.abs(np.asarray(V.values)[mid] - env[mid]) / np.maximum(np.abs(env[mid]), 1e-300)
    return EnvelopeReport(bool(np.all(excess <= 0)), float(np.max(excess)), float(np.max(tight)), env)
