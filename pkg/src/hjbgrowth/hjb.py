"""Monotone upwind finite differences with Howard policy iteration for rho V = sup_c {F V' + u}.

The upwind rule at node i compares the drifts implied by the forward and
backward secants p_F <= p_B.  For concave V it reproduces the monotone
numerical Hamiltonian rho V_i = min_{p in [p_F, p_B]} H(k_i, p): forward
secant when that drift is positive, backward when it is negative, and the
zero-drift consumption c0 (F(k, c0) = 0) in between.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.sparse import csr_matrix, identity
from scipy.sparse.linalg import spsolve

from hjbgrowth import hamiltonian as ham
from hjbgrowth.errors import CertificationError, ConvergenceError
from hjbgrowth.subdiff import SINGLETON_RTOL

P_FLOOR = 1e-14


@dataclass(frozen=True)
class GridSpec:
    k_min: float
    k_max: float
    n: int = 500
    spacing: str = "log"
    pinned: tuple = ()

    def __post_init__(self):
        if not (0 < self.k_min < self.k_max):
            raise ValueError("grid needs 0 < k_min < k_max")
        if self.n < 16:
            raise ValueError("grid needs n >= 16")
        if self.spacing not in ("log", "uniform"):
            raise ValueError("spacing must be 'log' or 'uniform'")
        for k in self.pinned:
            if not (self.k_min < k < self.k_max):
                raise ValueError(f"pinned node {k} outside ({self.k_min}, {self.k_max})")

    def nodes(self) -> np.ndarray:
        if self.spacing == "log":
            k = np.geomspace(self.k_min, self.k_max, self.n)
        else:
            k = np.linspace(self.k_min, self.k_max, self.n)
        for kp in self.pinned:
            j = int(np.argmin(np.abs(k - kp)))
            j = min(max(j, 1), self.n - 2)
            k[j] = kp
        if np.any(np.diff(k) <= 0):
            raise ValueError("pinned nodes collide with neighbouring nodes; refine the grid")
        return k

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.k_min, self.k_max, self.n * factor, self.spacing, self.pinned)


@dataclass(frozen=True)
class SolverSpec:
    tol: float = 1e-10
    max_iter: int = 500
    damping: float = 1.0

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")


@dataclass
class ValueFunctionGrid:
    nodes: np.ndarray
    values: np.ndarray
    slope_plus: np.ndarray  # forward secant, NaN at the last node
    slope_minus: np.ndarray  # backward secant, NaN at the first node
    policy: np.ndarray
    drift: np.ndarray
    mode: np.ndarray  # "F", "B" or "S" per node
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_values(cls, nodes, values, m=None, metadata=None) -> "ValueFunctionGrid":
        """Wrap externally produced (k, V) columns; policy and drift follow from the upwind rule when m is given."""
        nodes = np.asarray(nodes, dtype=float)
        values = np.asarray(values, dtype=float)
        if nodes.ndim != 1 or nodes.shape != values.shape or nodes.size < 3:
            raise ValueError("nodes and values must be equal-length 1-D arrays with at least 3 entries")
        if np.any(np.diff(nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        sp, sm = secants(nodes, values)
        if m is not None:
            c, s, mode = upwind_policy(m, nodes, sp, sm)
        else:
            c = np.full(nodes.shape, np.nan)
            s = np.full(nodes.shape, np.nan)
            mode = np.full(nodes.shape, "?")
        return cls(nodes, values, sp, sm, c, s, mode, dict(metadata or {}))

    @property
    def n(self) -> int:
        return self.nodes.size

    def evaluate(self, k):
        """Piecewise-linear interpolant with linear extrapolation by the end secants."""
        k = np.asarray(k, dtype=float)
        x, v = self.nodes, self.values
        out = np.interp(k, x, v)
        lo_slope = (v[1] - v[0]) / (x[1] - x[0])
        hi_slope = (v[-1] - v[-2]) / (x[-1] - x[-2])
        out = np.where(k < x[0], v[0] + lo_slope * (k - x[0]), out)
        out = np.where(k > x[-1], v[-1] + hi_slope * (k - x[-1]), out)
        return float(out) if out.ndim == 0 else out

    def subdiff(self, i: int):
        """[slope_plus, slope_minus] at node i (one-sided at the ends)."""
        lo, hi = self.slope_plus[i], self.slope_minus[i]
        if np.isnan(lo):
            lo = hi
        if np.isnan(hi):
            hi = lo
        return float(lo), float(hi)

    def is_increasing(self) -> bool:
        return bool(np.all(np.diff(self.values) > 0))

    def is_concave(self, rtol: float = 1e-9) -> bool:
        sec = np.diff(self.values) / np.diff(self.nodes)
        return bool(np.all(np.diff(sec) <= rtol * (1.0 + np.abs(sec[1:]))))

    def concavity_violations(self, rtol: float = 1e-9) -> np.ndarray:
        sec = np.diff(self.values) / np.diff(self.nodes)
        return np.nonzero(np.diff(sec) > rtol * (1.0 + np.abs(sec[1:])))[0] + 1


def secants(nodes, values):
    h = np.diff(nodes)
    sec = np.diff(values) / h
    sp = np.append(sec, np.nan)
    sm = np.insert(sec, 0, np.nan)
    return sp, sm


def zero_drift(m, k):
    return m.technology.zero_drift_consumption(k)


def _branch(m, k, p):
    """(c, drift, H) for secant slopes p; non-positive or NaN slopes give c = inf, drift -inf."""
    ok = np.isfinite(p) & (p > 0)
    pp = np.where(ok, p, 1.0)
    c = ham.policy(m, k, pp)
    s = m.technology(k, c)
    Hv = s * pp + m.utility(c, k)
    c = np.where(ok, c, np.inf)
    s = np.where(ok, s, -np.inf)
    Hv = np.where(ok, Hv, np.inf)
    return c, s, Hv


def upwind_policy(m, k, sp, sm):
    """Upwind selection per node: returns (c, drift, mode) with mode in {F, B, S}."""
    n = k.size
    cF, sF, HF = _branch(m, k, sp)
    cB, sB, HB = _branch(m, k, sm)
    has_F = ~np.isnan(sp)
    has_B = ~np.isnan(sm)
    fwd = has_F & (sF > 0)
    bwd = has_B & (sB < 0)
    both = fwd & bwd  # only possible where the secants are locally non-concave
    fwd = fwd & (~both | (HF >= HB))
    bwd = bwd & ~fwd
    c0 = zero_drift(m, k)
    sticky = ~fwd & ~bwd
    no_c0 = sticky & np.isnan(c0)
    # without a zero-drift consumption the only feasible direction is downward
    if np.any(no_c0):
        bwd = bwd | (no_c0 & has_B)
        sticky = ~fwd & ~bwd
    mode = np.full(n, "S", dtype="<U1")
    mode[fwd] = "F"
    mode[bwd] = "B"
    c = np.where(fwd, cF, np.where(bwd, cB, c0))
    s = np.where(fwd, sF, np.where(bwd, sB, 0.0))
    return c, s, mode


def _evaluate_policy(m, k, c, s, mode):
    """Solve rho V - s (upwind difference) = u(c) for V (tridiagonal M-matrix)."""
    n = k.size
    hp = np.append(np.diff(k), np.inf)
    hm = np.insert(np.diff(k), 0, np.inf)
    sF = np.where(mode == "F", s, 0.0)
    sB = np.where(mode == "B", s, 0.0)
    diag = m.rho + sF / hp - sB / hm
    upper = -sF / hp  # coefficient of V_{i+1}
    lower = sB / hm  # coefficient of V_{i-1}
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    rhs = m.utility(c, k)
    if np.any(~np.isfinite(rhs)):
        raise ConvergenceError("policy produced non-finite utility; consumption left (0, inf)")
    return solve_banded((1, 1), ab, rhs)


def _initial_policy(m, k):
    c0 = zero_drift(m, k)
    mode = np.where(np.isnan(c0), "B", "S").astype("<U1")
    mode[0] = "S" if not np.isnan(c0[0]) else "F"
    c = np.where(np.isnan(c0), 1e-8 * np.maximum(k, 1.0), c0)
    s = np.where(mode == "B", m.technology(k, c), 0.0)
    if mode[0] == "F":
        raise ValueError("grid start has F(k_min, 0) <= 0: no feasible stationary policy at k_min")
    return c, s, mode


def solve(
    m,
    grid: GridSpec,
    solver: Optional[SolverSpec] = None,
    V0: Optional[np.ndarray] = None,
    certify: bool = True,
) -> ValueFunctionGrid:
    """Howard policy iteration for the upwind discretisation on the grid."""
    if not m.rho > 0:
        raise ValueError(f"rho = {m.rho}: the discount rate must be positive (assumption A1: rho > 0)")
    solver = solver or SolverSpec()
    t0 = time.perf_counter()
    k = grid.nodes()
    if V0 is None:
        c, s, mode = _initial_policy(m, k)
        V = _evaluate_policy(m, k, c, s, mode)
    else:
        V = np.asarray(V0, dtype=float).copy()
    history = []
    damping = solver.damping
    grow = 0
    converged = False
    it = 0
    for it in range(1, solver.max_iter + 1):
        sp, sm = secants(k, V)
        sp = np.where(np.isnan(sp), np.nan, np.maximum(sp, P_FLOOR))
        sm = np.where(np.isnan(sm), np.nan, np.maximum(sm, P_FLOOR))
        c, s, mode = upwind_policy(m, k, sp, sm)
        V_new = _evaluate_policy(m, k, c, s, mode)
        step = V_new - V
        err = float(np.max(np.abs(step)))
        history.append(err)
        V = V + damping * step
        if err <= solver.tol * (1.0 + float(np.max(np.abs(V)))):
            converged = True
            break
        if len(history) >= 2 and history[-1] > history[-2]:
            grow += 1
            if grow >= 2 and damping > 0.5:
                damping = 0.5
        else:
            grow = 0
    if not converged:
        raise ConvergenceError(f"policy iteration did not converge in {solver.max_iter} iterations", V, history)
    sp, sm = secants(k, V)
    c, s, mode = upwind_policy(m, k, sp, sm)
    out = ValueFunctionGrid(
        nodes=k,
        values=V,
        slope_plus=sp,
        slope_minus=sm,
        policy=c,
        drift=s,
        mode=mode,
        metadata={
            "iterations": it,
            "residual_history": history,
            "final_update": history[-1],
            "tol": solver.tol,
            "damping": damping,
            "grid": {"k_min": grid.k_min, "k_max": grid.k_max, "n": grid.n, "spacing": grid.spacing,
                     "pinned": list(grid.pinned)},
            "runtime_s": time.perf_counter() - t0,
            "model": m.name,
        },
    )
    out.metadata["increasing"] = out.is_increasing()
    out.metadata["concave"] = out.is_concave()
    if certify and not out.metadata["increasing"]:
        bad = np.nonzero(np.diff(V) <= 0)[0]
        raise CertificationError(f"converged V is not increasing at nodes {bad[:10].tolist()}")
    if certify and not out.metadata["concave"]:
        bad = out.concavity_violations()
        raise CertificationError(f"converged V is not concave at nodes {bad[:10].tolist()}")
    return out


# ---------------------------------------------------------------------------
# certification


@dataclass
class ViscosityReport:
    nodes: np.ndarray
    residual: np.ndarray  # certified residual per node (smooth: scheme slope; kink: all three slopes)
    literal: np.ndarray  # max over {slope_plus, slope_minus, midpoint} at every node
    scheme: np.ndarray  # |min_{p in [p_F, p_B]} H - rho V|
    kink: np.ndarray
    scale: np.ndarray  # 1 + |rho V|
    max_residual: float
    max_relative: float
    max_literal_relative: float
    passed: bool
    tolerance: float = 1e-6

    def to_dict(self) -> dict:
        return {
            "max_residual": self.max_residual,
            "max_relative_residual": self.max_relative,
            "max_literal_relative_residual": self.max_literal_relative,
            "tolerance": self.tolerance,
            "passed": self.passed,
            "kink_nodes": [float(x) for x in self.nodes[self.kink]],
        }


def _H_at(m, k, p):
    """H(k, p) on arrays with p <= 0 mapped to the extended value (sup u or +inf)."""
    p = np.asarray(p, dtype=float)
    out = np.empty(p.shape)
    pos = p > 0
    if np.any(pos):
        Hv, _ = ham.hamiltonian_vec(m, k[pos], p[pos])
        out[pos] = Hv
    for i in np.nonzero(~pos)[0]:
        out[i] = ham.hamiltonian_sup(m, float(k[i]), 0.0) if p[i] == 0 else math.inf
    return out


def kink_possible(m, k) -> np.ndarray:
    """Nodes where c0 sits at a non-smooth point of c -> F(k, c); elsewhere V must be differentiable."""
    c0 = zero_drift(m, k)
    t = m.technology
    out = np.zeros(k.shape, dtype=bool)
    for i, (ki, ci) in enumerate(zip(k, c0)):
        if np.isfinite(ci):
            out[i] = not t.smooth_in_c(float(ki), float(ci), tol=1e-9)
    return out


def gap_excess(V: ValueFunctionGrid) -> np.ndarray:
    """Relative slope gap at a node minus the larger neighbouring gap (interior nodes; NaN at the ends)."""
    gap = V.slope_minus - V.slope_plus
    scale = np.maximum(1.0, np.abs(V.slope_plus) + np.abs(V.slope_minus))
    rel = gap / scale
    ex = np.full(V.n, np.nan)
    neigh = np.maximum(np.roll(rel, 1), np.roll(rel, -1))
    ex[2:-2] = (rel - neigh)[2:-2]
    return ex


def viscosity_certify(V: ValueFunctionGrid, m, strict: bool = True, tol: float = 1e-6) -> ViscosityReport:
    """Subdifferential residuals of rho V = H(k, p) at interior nodes."""
    if strict and not (V.is_increasing() and V.is_concave()):
        raise ValueError("viscosity certification requires an increasing concave V")
    k, v = V.nodes, V.values
    sp, sm = V.slope_plus, V.slope_minus
    rhoV = m.rho * v
    inner = slice(1, V.n - 1)
    ki = k[inner]
    pF, pB = sp[inner], sm[inner]
    HF = _H_at(m, ki, pF)
    HB = _H_at(m, ki, pB)
    HM = _H_at(m, ki, 0.5 * (pF + pB))
    with np.errstate(invalid="ignore"):
        lit = np.maximum.reduce([np.abs(HF - rhoV[inner]), np.abs(HB - rhoV[inner]), np.abs(HM - rhoV[inner])])
    # scheme residual: the monotone Hamiltonian uses the minimising slope in [p_F, p_B]
    c, s, mode = upwind_policy(m, ki, pF, pB)
    Hs = np.where(mode == "F", HF, np.where(mode == "B", HB, m.utility(c, ki)))
    sch = np.abs(Hs - rhoV[inner])
    ex = gap_excess(V)[inner]
    thr = SINGLETON_RTOL
    kink = np.nan_to_num(ex, nan=-1.0) > thr
    kink &= kink_possible(m, ki)
    res = np.where(kink, lit, sch)
    scale = 1.0 + np.abs(rhoV[inner])

    def pad(a, fill):
        out = np.full(V.n, fill, dtype=a.dtype)
        out[inner] = a
        return out

    rel = res / scale
    max_rel = float(np.max(rel)) if rel.size else 0.0
    return ViscosityReport(
        nodes=k,
        residual=pad(res, np.nan),
        literal=pad(lit, np.nan),
        scheme=pad(sch, np.nan),
        kink=pad(kink, False),
        scale=pad(scale, np.nan),
        max_residual=float(np.max(res)),
        max_relative=max_rel,
        max_literal_relative=float(np.max(lit / scale)),
        passed=bool(max_rel <= tol),
        tolerance=tol,
    )


def classical_residual(m, k, V, dV) -> np.ndarray:
    """|H(k, V'(k)) - rho V(k)| for a differentiable candidate given with its derivative."""
    k = np.asarray(k, dtype=float)
    vals = np.asarray([float(V(x)) for x in k])
    slopes = np.asarray([float(dV(x)) for x in k])
    Hv = _H_at(m, k, slopes)
    return np.abs(Hv - m.rho * vals)


@dataclass
class CandidateReport:
    classical_pass: bool
    max_classical_residual: float
    increasing: bool
    concave: bool
    growth_ok: Optional[bool]
    in_class: bool
    reason: str

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def candidate_check(m, V, dV, nodes, tol: float = 1e-10) -> CandidateReport:
    """Classical residual test plus membership in {increasing, concave, growth condition}."""
    from hjbgrowth.bounds import growth_condition_check

    nodes = np.asarray(nodes, dtype=float)
    r = classical_residual(m, nodes, V, dV)
    vals = np.asarray([float(V(x)) for x in nodes])
    scale = 1.0 + np.abs(m.rho * vals)
    classical = bool(np.all(r <= tol * scale))
    inc = bool(np.all(np.diff(vals) > 0))
    sec = np.diff(vals) / np.diff(nodes)
    conc = bool(np.all(np.diff(sec) <= 1e-9 * (1 + np.abs(sec[1:]))))
    reasons = []
    if not inc:
        reasons.append("fails increasing")
    if not conc:
        reasons.append("fails concave")
    growth = None
    try:
        growth = growth_condition_check(V, m, float(nodes[len(nodes) // 2])).passed
        if not growth:
            reasons.append("fails growth condition")
    except Exception as exc:  # pragma: no cover - diagnostic only
        reasons.append(f"growth check error: {exc}")
    in_class = inc and conc and bool(growth)
    return CandidateReport(classical, float(np.max(r)), inc, conc, growth, in_class, "; ".join(reasons) or "member")


# ---------------------------------------------------------------------------
# differentiability scan


@dataclass
class KinkCandidate:
    k: float
    index: int
    gap: float
    relative_gap: float
    classification: str  # "candidate" | "artifact" | "persistent"
    refined_relative_gap: Optional[float] = None


def differentiability_scan(
    V: ValueFunctionGrid, m, grid: Optional[GridSpec] = None, solver=None, include_artifacts: bool = False
) -> list:
    """Nodes whose slope gap stands out from their neighbours and survives grid refinement.

    Every flagged node is re-tested on a grid of double resolution.  Where the
    zero-drift consumption is a smooth point of c -> F(k, c) the model forces
    differentiability, so a gap that shrinks by 1.5x under refinement is an
    "artifact" (dropped unless ``include_artifacts``) and one that does not is
    "persistent".  Where c0 sits at a kink of F the node stays an unclassified
    "candidate" with both gaps recorded.
    """
    ex = gap_excess(V)
    flagged = np.nonzero(np.nan_to_num(ex, nan=-1.0) > SINGLETON_RTOL)[0]
    if flagged.size == 0:
        return []
    if grid is None:
        g = V.metadata.get("grid")
        if g is None:
            raise ValueError("grid spec needed to re-test flagged nodes")
        grid = GridSpec(g["k_min"], g["k_max"], g["n"], g["spacing"], tuple(g.get("pinned", ())))
    refined = solve(m, grid.refined(2), solver, certify=False)
    possible = kink_possible(m, V.nodes)
    out = []
    for i in flagged:
        gap = float(V.slope_minus[i] - V.slope_plus[i])
        rel = gap / max(1.0, abs(V.slope_plus[i]) + abs(V.slope_minus[i]))
        j = int(np.argmin(np.abs(refined.nodes - V.nodes[i])))
        j = min(max(j, 1), refined.n - 2)
        g2 = float(refined.slope_minus[j] - refined.slope_plus[j])
        rel2 = g2 / max(1.0, abs(refined.slope_plus[j]) + abs(refined.slope_minus[j]))
        if possible[i]:
            cls = "candidate"
        else:
            cls = "artifact" if rel2 <= rel / 1.5 else "persistent"
        if cls != "artifact" or include_artifacts:
            out.append(KinkCandidate(float(V.nodes[i]), int(i), gap, rel, cls, rel2))
    return out


def kink_report(V: ValueFunctionGrid, m, k_target: float) -> dict:
    """Slope gap and drift set at the node nearest k_target (reported, not asserted)."""
    i = int(np.argmin(np.abs(V.nodes - k_target)))
    i = min(max(i, 1), V.n - 2)
    lo, hi = V.subdiff(i)
    possible = bool(kink_possible(m, V.nodes[i : i + 1])[0])
    ex = float(gap_excess(V)[i]) if 2 <= i < V.n - 2 else float("nan")
    _, s_lo, _ = _branch(m, V.nodes[i : i + 1], np.array([hi]))
    _, s_hi, _ = _branch(m, V.nodes[i : i + 1], np.array([lo]))
    return {
        "k_target": float(k_target),
        "node": float(V.nodes[i]),
        "index": i,
        "slope_plus": lo,
        "slope_minus": hi,
        "relative_gap": (hi - lo) / max(1.0, abs(lo) + abs(hi)),
        "gap_excess": ex,
        "kink_flag": bool(ex > SINGLETON_RTOL) and possible,
        "kink_possible": possible,
        "drift_set": [float(s_lo[0]), float(s_hi[0])],
        "sticky": bool(s_lo[0] <= 0.0 <= s_hi[0]),
        "mode": str(V.mode[i]),
    }


# ---------------------------------------------------------------------------
# discrete-time dynamic-programming oracle


@dataclass
class OracleResult:
    nodes: np.ndarray
    values: np.ndarray
    policy: np.ndarray
    iterations: int
    dt: float


def _interp_matrix(k, x):
    """Sparse rows evaluating the piecewise-linear interpolant on nodes k at points x (clipped)."""
    n = k.size
    x = np.clip(x, k[0], k[-1])
    j = np.clip(np.searchsorted(k, x, side="right") - 1, 0, n - 2)
    w = (x - k[j]) / (k[j + 1] - k[j])
    rows = np.repeat(np.arange(x.size), 2)
    cols = np.stack([j, j + 1], axis=1).ravel()
    vals = np.stack([1.0 - w, w], axis=1).ravel()
    return csr_matrix((vals, (rows, cols)), shape=(x.size, n))


def _consumption_bounds(m, k, dt, k_lo, k_hi):
    """c-range keeping k + dt F(k, c) inside [k_lo, k_hi]; F is decreasing in c."""
    t = m.technology
    c_hi = np.empty(k.size)
    c_lo = np.zeros(k.size)
    for i, ki in enumerate(k):
        target_lo = (k_lo - ki) / dt  # F(k, c) >= target_lo
        target_hi = (k_hi - ki) / dt  # F(k, c) <= target_hi
        c_hi[i] = _solve_F(t, ki, target_lo)
        if float(t(ki, 0.0)) > target_hi:
            c_lo[i] = _solve_F(t, ki, target_hi)
    return c_lo, c_hi


def _solve_F(t, k, target):
    """c >= 0 with F(k, c) = target (bisection, F decreasing in c)."""
    if float(t(k, 0.0)) <= target:
        return 0.0
    lo, hi = 0.0, 1.0
    while float(t(k, hi)) > target:
        hi *= 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if float(t(k, mid)) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return lo


def dp_oracle(
    m,
    grid: GridSpec,
    dt: float = 1e-3,
    horizon: Optional[float] = None,
    tol: float = 1e-9,
    max_iter: int = 500,
    n_search: int = 200,
) -> OracleResult:
    """Discrete-time Bellman fixed point V(k) = max_c {dt u(c, k) + e^{-rho dt} V(k + dt F(k, c))}.

    Linear interpolation between nodes; the maximisation is a brute-force log
    grid over the feasible consumption range followed by golden-section
    refinement, and each policy is evaluated by a sparse linear solve.
    ``horizon`` truncates the iteration count to horizon / dt when given.
    """
    k = grid.nodes()
    n = k.size
    beta = math.exp(-m.rho * dt)
    c_lo, c_hi = _consumption_bounds(m, k, dt, k[0], k[-1])
    c_lo = np.maximum(c_lo, 1e-12)
    c0 = zero_drift(m, k)
    c = np.where(np.isfinite(c0), np.clip(c0, c_lo, c_hi), 0.5 * (c_lo + c_hi))
    if horizon is not None:
        max_iter = min(max_iter, max(1, int(round(horizon / dt))))
    eye = identity(n, format="csr")

    def evaluate(cc):
        P = _interp_matrix(k, k + dt * m.technology(k, cc))
        return spsolve((eye - beta * P).tocsc(), dt * m.utility(cc, k))

    V = evaluate(c)
    it = 0
    for it in range(1, max_iter + 1):
        c = _maximise_dp(m, k, V, dt, beta, c_lo, c_hi, n_search)
        V_new = evaluate(c)
        err = float(np.max(np.abs(V_new - V)))
        V = V_new
        if err <= tol * (1.0 + float(np.max(np.abs(V)))):
            break
    return OracleResult(k, V, c, it, dt)


def _maximise_dp(m, k, V, dt, beta, c_lo, c_hi, n_search):
    def obj(cc):
        nxt = np.clip(k[:, None] + dt * m.technology(k[:, None], cc), k[0], k[-1])
        return dt * m.utility(cc, k[:, None]) + beta * np.interp(nxt, k, V)

    frac = np.linspace(0.0, 1.0, n_search)
    ratio = c_hi / c_lo
    cand = c_lo[:, None] * np.power(ratio[:, None], frac[None, :])
    vals = obj(cand)
    j = np.argmax(vals, axis=1)
    rows = np.arange(k.size)
    a = cand[rows, np.maximum(j - 1, 0)]
    b = cand[rows, np.minimum(j + 1, n_search - 1)]
    g = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - g * (b - a)
    x2 = a + g * (b - a)
    f1 = obj(x1[:, None])[:, 0]
    f2 = obj(x2[:, None])[:, 0]
    for _ in range(80):
        left = f1 < f2
        a = np.where(left, x1, a)
        b = np.where(left, b, x2)
        nx1 = np.where(left, x2, b - g * (b - a))
        nx2 = np.where(left, a + g * (b - a), x1)
        nf = obj(np.where(left, nx2, nx1)[:, None])[:, 0]
        f1, f2 = np.where(left, f2, nf), np.where(left, nf, f1)
        x1, x2 = nx1, nx2
    best = 0.5 * (a + b)
    # keep the better of the refined point and the best sample
    fb = obj(best[:, None])[:, 0]
    sample_best = cand[rows, j]
    return np.where(fb >= vals[rows, j], best, sample_best)
