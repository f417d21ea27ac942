"""ODE contracts: the pure accumulation path k' = F(k, 0), its growth bounds, and comparison checks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from hjbgrowth.errors import IntegrationError

POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True)
class IntegratorSpec:
    """Embedded Runge-Kutta 5(4) settings; ``fixed_step`` disables error control."""

    atol: float = 1e-10
    rtol: float = 1e-8
    max_step: float = math.inf
    fixed_step: Optional[float] = None

    def __post_init__(self):
        if not (self.atol > 0 and self.rtol > 0):
            raise ValueError("integrator tolerances must be positive")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ValueError("fixed_step must be positive")


def integrate(rhs, t_span, y0, spec: Optional[IntegratorSpec] = None, events=None, t_eval=None):
    """scipy RK45 (Dormand-Prince) with dense output; failures raise IntegrationError."""
    spec = spec or IntegratorSpec()
    kw = dict(method="RK45", dense_output=True, events=events, t_eval=t_eval)
    if spec.fixed_step is not None:
        # every step accepted at the requested size
        kw.update(first_step=spec.fixed_step, max_step=spec.fixed_step, rtol=1e3, atol=1e3)
    else:
        kw.update(rtol=spec.rtol, atol=spec.atol, max_step=spec.max_step)
    sol = solve_ivp(rhs, t_span, np.atleast_1d(np.asarray(y0, dtype=float)), **kw)
    if sol.status < 0:
        last_t = float(sol.t[-1]) if sol.t.size else float(t_span[0])
        last_y = sol.y[:, -1].copy() if sol.t.size else np.atleast_1d(y0)
        raise IntegrationError(f"integration failed at t={last_t}: {sol.message}", last_t, last_y)
    return sol


@dataclass
class AccumulationPath:
    """Samples (t, k, dk/dt) of the zero-consumption path with post hoc bound checks."""

    t: np.ndarray
    k: np.ndarray
    dkdt: np.ndarray
    k_bar: float
    dense: Optional[Callable] = field(default=None, repr=False)
    floor_ok: Optional[bool] = None
    ceiling_ok: Optional[bool] = None
    bound_point: Optional[tuple] = None

    def __call__(self, t):
        """k+(t) from the continuous extension of the integrator."""
        t = np.asarray(t, dtype=float)
        if self.dense is None:
            return np.interp(t, self.t, self.k)
        return self.dense(t)[0] if t.ndim else float(self.dense(float(t))[0])

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "k", "dkdt"])
            for row in zip(self.t, self.k, self.dkdt):
                w.writerow([f"{x:.17g}" for x in row])


def majorant_ceiling(t, k_bar: float, k: float, gamma: float, F_k0: float):
    """e^{gamma t} (k_bar + (e^{-gamma t} - 1)(gamma k - F(k, 0)) / gamma), the linear-majorant path."""
    t = np.asarray(t, dtype=float)
    if gamma == 0.0:
        return k_bar + F_k0 * t
    return np.exp(gamma * t) * (k_bar + (np.exp(-gamma * t) - 1.0) * (gamma * k - F_k0) / gamma)


def pure_accumulation_path(
    m,
    k_bar: float,
    T: float,
    spec: Optional[IntegratorSpec] = None,
    n_out: int = 401,
    bound_point: Optional[float] = 1.0,
    bound_gamma: Optional[float] = None,
) -> AccumulationPath:
    """Integrate k' = F(k, 0) from k_bar on [0, T] and check the floor/ceiling bounds.

    ``bound_point`` is the capital level k used for floor min{k, k_bar} and the
    linear ceiling with slope ``bound_gamma`` (default D_{k,+}F(k, 0)).
    """
    if not k_bar > 0:
        raise ValueError("the pure accumulation path starts from k_bar > 0")
    if not T > 0:
        raise ValueError("horizon must be positive")
    tech = m.technology
    halt = POSITIVITY_FLOOR * k_bar

    def rhs(t, y):
        return [float(tech(max(y[0], 0.0), 0.0))]

    def floor_event(t, y):
        return y[0] - halt

    floor_event.terminal = True
    floor_event.direction = -1
    t_out = np.linspace(0.0, T, n_out)
    sol = integrate(rhs, (0.0, T), [k_bar], spec, events=[floor_event], t_eval=t_out)
    if sol.t_events[0].size:
        raise IntegrationError(
            f"capital fell below {halt:g} at t={sol.t_events[0][0]:g}", float(sol.t_events[0][0]), sol.y_events[0][0]
        )
    k = sol.y[0]
    if np.any(~np.isfinite(k)):
        bad = int(np.argmax(~np.isfinite(k)))
        raise IntegrationError("path blew up", float(sol.t[bad - 1]), sol.y[:, bad - 1])
    path = AccumulationPath(sol.t, k, np.asarray(tech(k, 0.0)), k_bar, dense=sol.sol)
    if bound_point is not None:
        kk = float(bound_point)
        f0 = float(tech(kk, 0.0))
        gamma = float(tech.dk_plus(kk, 0.0)) if bound_gamma is None else float(bound_gamma)
        tol = 1e-7 * (1.0 + np.abs(k))
        if f0 > 0:
            path.floor_ok = bool(np.all(k >= min(kk, k_bar) - tol))
        path.ceiling_ok = bool(np.all(k <= majorant_ceiling(sol.t, k_bar, kk, gamma, f0) + tol))
        path.bound_point = (kk, gamma)
    return path


# ---------------------------------------------------------------------------
# comparison checks


@dataclass(frozen=True)
class ComparisonReport:
    passed: bool
    max_violation: float
    t: np.ndarray = field(repr=False)
    k1: np.ndarray = field(repr=False)
    k2: np.ndarray = field(repr=False)

    def __bool__(self):
        return self.passed


def _as_field(h):
    """Accept h(t, k) or h(k)."""
    try:
        h(0.0, 1.0)
        return h
    except TypeError:
        return lambda t, k: h(k)


def lipschitz_on(h, t_samples, k_samples, steps=(1e-2, 1e-4, 1e-6, 1e-8), growth: float = 10.0) -> bool:
    """Heuristic local-Lipschitz test: difference quotients must stay bounded as the step shrinks.

    A quotient growing by more than ``growth`` over the step ladder (e.g. sqrt|k|
    at 0, where it scales like step^{-1/2}) marks the field non-Lipschitz.
    """
    ests = []
    for d in steps:
        q = 0.0
        for t in t_samples:
            for k in k_samples:
                q = max(q, abs(float(h(t, k + d)) - float(h(t, k))) / d, abs(float(h(t, k)) - float(h(t, k - d))) / d)
        ests.append(q)
    ests = np.asarray(ests)
    base = max(ests[0], 1.0)
    return bool(ests.max() <= growth * base)


def _tube_samples(paths, n: int = 25):
    """Grid over the hull of the paths plus every path's own samples at t = 0 and t = T."""
    lo = min(float(np.min(p)) for p in paths)
    hi = max(float(np.max(p)) for p in paths)
    pad = 1e-3 * (1.0 + max(abs(lo), abs(hi)))
    ends = [float(p[0]) for p in paths] + [float(p[-1]) for p in paths]
    return np.unique(np.concatenate([np.linspace(lo - pad, hi + pad, n), ends]))


def comparison_check(
    h1,
    h2,
    k1_bar: float,
    k2_bar: float,
    T: float,
    spec: Optional[IntegratorSpec] = None,
    n_out: int = 201,
    tol: float = 1e-7,
) -> ComparisonReport:
    """Paths of k' = h1 and k' = h2 keep the order k1 <= k2 on [0, T].

    Preconditions (h1 <= h2 on the sampled tube, one field locally Lipschitz)
    are tested by sampling; a violation raises ValueError.
    """
    if k1_bar > k2_bar:
        raise ValueError("comparison needs k1_bar <= k2_bar")
    f1, f2 = _as_field(h1), _as_field(h2)
    t_out = np.linspace(0.0, T, n_out)
    s1 = integrate(lambda t, y: [float(f1(t, y[0]))], (0.0, T), [k1_bar], spec, t_eval=t_out)
    s2 = integrate(lambda t, y: [float(f2(t, y[0]))], (0.0, T), [k2_bar], spec, t_eval=t_out)
    tube = _tube_samples([s1.y[0], s2.y[0]])
    ts = np.linspace(0.0, T, 7)
    for t in ts:
        for k in tube:
            a, b = float(f1(t, k)), float(f2(t, k))
            if a > b + tol * (1 + abs(b)):
                raise ValueError(f"precondition h1 <= h2 fails at (t, k) = ({t:g}, {k:g})")
    if not (lipschitz_on(f1, ts, tube) or lipschitz_on(f2, ts, tube)):
        raise ValueError("precondition fails: neither field is locally Lipschitz on the tube")
    gap = s1.y[0] - s2.y[0]
    worst = float(np.max(gap))
    ok = bool(np.all(gap <= tol * (1.0 + np.abs(s2.y[0]))))
    return ComparisonReport(ok, max(worst, 0.0), s1.t, s1.y[0], s2.y[0])


def inclusion_dominance_check(
    t: Sequence[float],
    k: Sequence[float],
    h,
    T: Optional[float] = None,
    gamma_sup: Optional[Callable] = None,
    spec: Optional[IntegratorSpec] = None,
    tol: float = 1e-7,
) -> ComparisonReport:
    """A sampled inclusion path k(t) stays below the solution of k' = h(k) from k(0).

    ``gamma_sup(k)`` is the upper end of the inclusion's right-hand side; when
    supplied, h >= gamma_sup is verified on the tube first.
    """
    t = np.asarray(t, dtype=float)
    k = np.asarray(k, dtype=float)
    T = float(t[-1]) if T is None else float(T)
    fh = _as_field(h)
    sol = integrate(lambda s, y: [float(fh(s, y[0]))], (0.0, T), [k[0]], spec, t_eval=t[t <= T])
    tube = _tube_samples([k, sol.y[0]])
    if gamma_sup is not None:
        for kk in tube:
            if kk <= 0:
                continue
            hv, gv = float(fh(0.0, kk)), float(gamma_sup(kk))
            if hv < gv - tol * (1 + abs(gv)):
                raise ValueError(f"precondition h >= sup Gamma fails at k = {kk:g} ({hv:g} < {gv:g})")
    if not lipschitz_on(fh, [0.0], tube[tube > 0] if np.any(tube > 0) else tube):
        raise ValueError("dominating field is not locally Lipschitz on the tube")
    kin = k[t <= T]
    gap = kin - sol.y[0]
    ok = bool(np.all(gap <= tol * (1.0 + np.abs(sol.y[0]))))
    return ComparisonReport(ok, max(float(np.max(gap)), 0.0), sol.t, kin, sol.y[0])
