"""Optimal paths from a value grid: k' in F(k, c*(dV(k), k)) with the zero-drift selection at kinks."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import simpson

from hjbgrowth import hamiltonian as ham
from hjbgrowth.errors import GridExtensionError, IntegrationError, NumericError
from hjbgrowth.hjb import SINGLETON_RTOL, ValueFunctionGrid, gap_excess, kink_possible, viscosity_certify
from hjbgrowth.ode import POSITIVITY_FLOOR, IntegratorSpec, inclusion_dominance_check, integrate, pure_accumulation_path

MICRO_STEP = 1e-3


@dataclass
class Trajectory:
    t: np.ndarray
    k: np.ndarray
    c: np.ndarray
    drift: np.ndarray
    running: np.ndarray  # int_0^t e^{-rho s} u ds
    subdiff_lo: np.ndarray
    subdiff_hi: np.ndarray
    k_bar: float
    rho: float
    tail_bound: float = math.nan
    grade: str = "A"
    warnings: list = field(default_factory=list)
    events: list = field(default_factory=list)

    @property
    def T(self) -> float:
        return float(self.t[-1])

    @property
    def positivity_floor(self) -> float:
        return float(np.min(self.k))

    @property
    def sticky(self) -> bool:
        return any(e[0] == "sticky" for e in self.events)

    def running_at(self, T: float) -> float:
        return float(np.interp(T, self.t, self.running))

    def k_at(self, T: float) -> float:
        return float(np.interp(T, self.t, self.k))

    def to_csv(self, path) -> None:
        cols = ["t", "k", "c", "drift", "running_objective", "subdiff_lo", "subdiff_hi"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for row in zip(self.t, self.k, self.c, self.drift, self.running, self.subdiff_lo, self.subdiff_hi):
                w.writerow([f"{x:.17g}" for x in row])


class DerivativeField:
    """Slope field of a value grid: second-order node derivatives, one-sided limits at kink nodes.

    On each cell [k_i, k_{i+1}] the derivative is interpolated linearly from the
    right limit at k_i to the left limit at k_{i+1}; at a kink node the two
    limits are the backward and forward secants.
    """

    def __init__(self, V: ValueFunctionGrid, m):
        self.V = V
        k = V.nodes
        sp, sm = V.slope_plus, V.slope_minus
        hp = np.append(np.diff(k), np.nan)
        hm = np.insert(np.diff(k), 0, np.nan)
        d = (hm * sp + hp * sm) / (hp + hm)
        d[0], d[-1] = sp[0], sm[-1]
        ex = gap_excess(V)
        kink = (np.nan_to_num(ex, nan=-1.0) > SINGLETON_RTOL) & kink_possible(m, k)
        self.kink = kink
        self.kink_nodes = k[kink]
        self.left = np.where(kink, sm, d)
        self.right = np.where(kink, sp, d)

    def cell(self, k: float) -> int:
        x = self.V.nodes
        return int(np.clip(np.searchsorted(x, k, side="right") - 1, 0, x.size - 2))

    def __call__(self, k: float) -> float:
        x = self.V.nodes
        i = self.cell(k)
        w = (k - x[i]) / (x[i + 1] - x[i])
        return float((1.0 - w) * self.right[i] + w * self.left[i + 1])

    def interval(self, k: float, tol: float = 1e-12):
        """(lo, hi) of the subdifferential estimate at k; an interval only at kink nodes."""
        x = self.V.nodes
        j = int(np.argmin(np.abs(x - k)))
        if self.kink[j] and abs(x[j] - k) <= tol * max(1.0, abs(k)):
            return float(self.right[j]), float(self.left[j])
        d = self(k)
        return d, d


def _policy_at(m, k, p):
    return ham.maximize(m, k, max(p, 1e-300)).c_star


def corollary_grade(m, k_path: Optional[np.ndarray] = None) -> str:
    """'A' if a sampled sufficient condition holds (u bounded above/below, k bounded, or c* bounded away from 0 as k -> 0)."""
    u = m.utility
    if u.bounded_above or u.bounded_below:
        return "A"
    ks = np.logspace(3, 8, 11)
    if np.all(np.asarray(m.technology(ks, 0.0)) < 0):
        return "A"
    lows = []
    for p in (0.1, 1.0, 10.0):
        cs = [ham.maximize(m, float(k), p).c_star for k in np.logspace(-8, 0, 9)]
        lows.append(min(cs))
    if min(lows) > 1e-6 and all(np.isfinite(lows)):
        return "A"
    return "B"


def _suggest_bounds(V, x):
    return (min(V.nodes[0], 0.5 * x), max(V.nodes[-1], 2.0 * x))


def synthesize(
    V: ValueFunctionGrid,
    m,
    k_bar: float,
    T: Optional[float] = None,
    spec: Optional[IntegratorSpec] = None,
    n_out: int = 2001,
    certify: bool = True,
) -> Trajectory:
    """Integrate k' = F(k, c*(V'(k), k)) from k_bar, holding capital at kinks whose drift set contains 0."""
    if not (V.is_increasing() and V.is_concave()):
        raise ValueError("trajectory synthesis requires an increasing concave value grid")
    if certify:
        rep = viscosity_certify(V, m)
        if not rep.passed:
            raise ValueError(f"value grid not certified (max relative residual {rep.max_relative:.3g})")
    lo_k, hi_k = float(V.nodes[0]), float(V.nodes[-1])
    if not (lo_k <= k_bar <= hi_k):
        raise GridExtensionError(f"k_bar={k_bar} outside the grid [{lo_k}, {hi_k}]", _suggest_bounds(V, k_bar))
    T = 20.0 / m.rho if T is None else float(T)
    spec = spec or IntegratorSpec()
    field_ = DerivativeField(V, m)
    tech, util, rho = m.technology, m.utility, m.rho
    t_out = np.linspace(0.0, T, n_out)
    traj_t, traj_y = [], []
    events_log, warns = [], []

    def rhs(t, y):
        k = min(max(y[0], lo_k), hi_k)
        c = _policy_at(m, k, field_(k))
        return [float(tech(k, c)), math.exp(-rho * t) * float(util(c, k))]

    def make_events(start_k):
        evs = []
        for kk in field_.kink_nodes:
            if abs(kk - start_k) <= 1e-12 * max(1.0, kk):
                continue
            ev = lambda t, y, kk=kk: y[0] - kk
            ev.terminal = True
            evs.append(ev)
        for bound, direction in ((lo_k, -1), (hi_k, 1)):
            ev = lambda t, y, b=bound: y[0] - b
            ev.terminal = True
            ev.direction = direction
            evs.append(ev)
        floor = lambda t, y: y[0] - POSITIVITY_FLOOR * k_bar
        floor.terminal = True
        evs.append(floor)
        return evs

    t0, y0 = 0.0, np.array([k_bar, 0.0])
    last_step = (T / max(n_out - 1, 1)) or 1.0
    guard = 0
    while t0 < T:
        guard += 1
        if guard > 10000:
            raise IntegrationError("too many kink events", t0, y0)
        j = int(np.argmin(np.abs(V.nodes - y0[0])))
        at_kink = field_.kink[j] and abs(V.nodes[j] - y0[0]) <= 1e-12 * max(1.0, y0[0])
        if at_kink:
            k = float(V.nodes[j])
            p_lo, p_hi = float(field_.right[j]), float(field_.left[j])
            s_lo = float(tech(k, _policy_at(m, k, p_lo)))
            s_hi = float(tech(k, _policy_at(m, k, p_hi)))
            if s_lo <= 0.0 <= s_hi:
                c0 = float(tech.zero_drift_consumption(k))
                events_log.append(("sticky", t0, k))
                ts = t_out[t_out > t0]
                u0 = float(util(c0, k))
                J = y0[1] + u0 * (math.exp(-rho * t0) - np.exp(-rho * ts)) / rho
                traj_t.extend(ts.tolist())
                traj_y.extend(np.column_stack([np.full(ts.size, k), J]).tolist())
                t0 = T
                break
            # crossing: one Euler micro-step with the drift of minimal magnitude
            s = s_lo if abs(s_lo) < abs(s_hi) else s_hi
            p = p_lo if s == s_lo else p_hi
            c = _policy_at(m, k, p)
            h = MICRO_STEP * last_step
            warns.append(f"kink crossing at k={k:.6g}, t={t0:.6g}: minimal-drift selection {s:.3g}")
            events_log.append(("cross", t0, k))
            y0 = np.array([k + h * s, y0[1] + h * math.exp(-rho * t0) * float(util(c, k))])
            t0 = t0 + h
            continue
        seg_eval = t_out[(t_out > t0) & (t_out <= T)]
        evs = make_events(y0[0])
        sol = integrate(rhs, (t0, T), y0, spec, events=evs, t_eval=seg_eval if seg_eval.size else None)
        traj_t.extend(sol.t.tolist())
        traj_y.extend(sol.y.T.tolist())
        if sol.status == 1:  # terminal event
            hit = [i for i, te in enumerate(sol.t_events) if te.size]
            i = hit[0]
            te, ye = float(sol.t_events[i][0]), sol.y_events[i][0]
            nk = len(field_.kink_nodes)
            if i == nk + 2:
                raise IntegrationError(f"capital fell below the positivity floor at t={te:g}", te, ye)
            if i >= nk:
                raise GridExtensionError(
                    f"trajectory left the grid at t={te:g}, k={ye[0]:.6g}", _suggest_bounds(V, float(ye[0]))
                )
            kk = float(field_.kink_nodes[i])
            y0 = np.array([kk, ye[1]])
            if len(sol.t) >= 2:
                last_step = float(sol.t[-1] - sol.t[-2]) or last_step
            t0 = te
            continue
        t0 = T
    tt = np.concatenate([[0.0], np.asarray(traj_t)])
    yy = np.vstack([[k_bar, 0.0], np.asarray(traj_y).reshape(-1, 2)])
    # resample onto the output grid
    order = np.argsort(tt, kind="stable")
    tt, yy = tt[order], yy[order]
    keep = np.concatenate([[True], np.diff(tt) > 0])
    tt, yy = tt[keep], yy[keep]
    k_s = np.interp(t_out, tt, yy[:, 0])
    J_s = np.interp(t_out, tt, yy[:, 1])
    c_s = np.empty(n_out)
    lo_s = np.empty(n_out)
    hi_s = np.empty(n_out)
    for i, (kk, ti) in enumerate(zip(k_s, t_out)):
        lo, hi = field_.interval(kk)
        lo_s[i], hi_s[i] = lo, hi
        if lo != hi:
            c_s[i] = float(tech.zero_drift_consumption(kk)) if _sticky_at(events_log, ti, kk) else _policy_at(m, kk, lo)
        else:
            c_s[i] = _policy_at(m, kk, lo)
    drift = np.asarray(tech(k_s, c_s), dtype=float)
    if np.any(c_s <= 0) or np.any(k_s <= 0):
        raise NumericError("synthesised path left the positive orthant")
    tail = math.exp(-rho * T) * float(V.evaluate(k_s[-1]))
    return Trajectory(
        t_out, k_s, c_s, drift, J_s, lo_s, hi_s, float(k_bar), rho, tail, corollary_grade(m), warns, events_log
    )


def _sticky_at(events, t, k):
    return any(e[0] == "sticky" and t >= e[1] and abs(e[2] - k) <= 1e-9 * max(1.0, k) for e in events)


def simulate_policy(m, k_bar: float, T: float, c_fn: Callable, V: Optional[ValueFunctionGrid] = None,
                    spec: Optional[IntegratorSpec] = None, n_out: int = 2001) -> Trajectory:
    """Path under an arbitrary feedback rule c = c_fn(t, k)."""
    tech, util, rho = m.technology, m.utility, m.rho
    t_out = np.linspace(0.0, T, n_out)

    def rhs(t, y):
        k = max(y[0], 1e-300)
        c = float(c_fn(t, k))
        return [float(tech(k, c)), math.exp(-rho * t) * float(util(c, k))]

    floor = lambda t, y: y[0] - POSITIVITY_FLOOR * k_bar
    floor.terminal = True
    sol = integrate(rhs, (0.0, T), [k_bar, 0.0], spec, events=[floor], t_eval=t_out)
    if sol.status == 1:
        raise IntegrationError("capital fell below the positivity floor", float(sol.t_events[0][0]), sol.y_events[0][0])
    k = sol.y[0]
    c = np.array([float(c_fn(t, kk)) for t, kk in zip(t_out, k)])
    tail = math.exp(-rho * T) * float(V.evaluate(k[-1])) if V is not None else math.nan
    return Trajectory(t_out, k, c, np.asarray(tech(k, c)), sol.y[1], c * np.nan, c * np.nan, float(k_bar), rho, tail)


def grid_policy(V: ValueFunctionGrid, m, scale: float = 1.0) -> Callable:
    """Feedback rule c = scale * c*(V'(k), k) from the grid's derivative field."""
    f = DerivativeField(V, m)
    return lambda t, k: scale * _policy_at(m, k, f(k))


# ---------------------------------------------------------------------------
# objective evaluation


@dataclass
class ObjectiveValue:
    integral: float
    tail: float
    tail_bracket: tuple
    total: float


def evaluate_objective(traj: Trajectory, m, V: Optional[ValueFunctionGrid] = None) -> ObjectiveValue:
    """Simpson quadrature of e^{-rho t} u along the samples plus the tail e^{-rho T} V(k(T))."""
    if not traj.positivity_floor > 0:
        raise ValueError("trajectory must stay strictly positive")
    u = np.asarray(m.utility(traj.c, traj.k), dtype=float)
    if np.any(np.isneginf(u)):
        raise NumericError("utility is -inf along the trajectory")
    integrand = np.exp(-m.rho * traj.t) * u
    integral = float(simpson(integrand, x=traj.t))
    disc = math.exp(-m.rho * traj.T)
    if V is None:
        return ObjectiveValue(integral, 0.0, (0.0, 0.0), integral)
    tail = disc * float(V.evaluate(traj.k[-1]))
    lo = disc * float(V.evaluate(traj.positivity_floor))
    try:
        kplus = float(pure_accumulation_path(m, traj.k_bar, traj.T, bound_point=None, n_out=2).k[-1])
        hi = disc * float(V.evaluate(kplus))
    except IntegrationError:
        hi = math.inf
    return ObjectiveValue(integral, tail, (lo, hi), integral + tail)


def bellman_defects(traj: Trajectory, V: ValueFunctionGrid, m, times: Sequence[float]) -> np.ndarray:
    v0 = float(V.evaluate(traj.k_bar))
    out = []
    for T in times:
        if T == 0:
            out.append(0.0)
            continue
        J = traj.running_at(T)
        tail = math.exp(-m.rho * T) * float(V.evaluate(traj.k_at(T)))
        out.append(abs(v0 - (J + tail)))
    return np.asarray(out)


def bellman_consistency_check(traj: Trajectory, V: ValueFunctionGrid, m, times: Sequence[float]) -> float:
    """max over T of |V(k_bar) - (int_0^T e^{-rho t} u dt + e^{-rho T} V(k(T)))|."""
    return float(np.max(bellman_defects(traj, V, m, times)))


# ---------------------------------------------------------------------------
# cross checks


@dataclass
class OptimalityVerdict:
    optimal: bool
    violation_fraction: float
    violating_times: np.ndarray
    partial: bool

    def __bool__(self):
        return self.optimal


def optimality_cross_check(
    t, k, c, V: ValueFunctionGrid, m, rtol: float = 1e-2, null_fraction: float = 0.01
) -> OptimalityVerdict:
    """c(t) must lie in c*(dV(k(t)), k(t)) except on a fraction below ``null_fraction`` of samples."""
    t, k, c = (np.asarray(a, dtype=float) for a in (t, k, c))
    f = DerivativeField(V, m)
    lo_k, hi_k = V.nodes[0], V.nodes[-1]
    inside = (k >= lo_k) & (k <= hi_k)
    bad = np.zeros(t.size, dtype=bool)
    for i in np.nonzero(inside)[0]:
        p_lo, p_hi = f.interval(float(k[i]))
        c_min = _policy_at(m, float(k[i]), p_hi)
        c_max = _policy_at(m, float(k[i]), p_lo)
        tol = rtol * max(c_max, 1e-12)
        bad[i] = not (c_min - tol <= c[i] <= c_max + tol)
    n_in = int(inside.sum())
    frac = float(bad.sum() / n_in) if n_in else 1.0
    return OptimalityVerdict(frac < null_fraction, frac, t[bad], bool(n_in < t.size))


def dominance_check(traj: Trajectory, m, V: ValueFunctionGrid, tol: float = 1e-7):
    """Trajectory stays below the pure accumulation path k' = F(k, 0)."""
    f = DerivativeField(V, m)
    tech = m.technology

    def gamma_sup(k):
        lo, hi = f.interval(k)
        return float(tech(k, _policy_at(m, k, hi)))

    return inclusion_dominance_check(traj.t, traj.k, lambda k: float(tech(max(k, 0.0), 0.0)),
                                     gamma_sup=gamma_sup, tol=tol)
