"""Growth-model primitives: utility u(c, k), technology F(k, c), and assumption spot checks.

All evaluators accept scalars or numpy arrays.  Minus infinity is a legitimate
utility value on the boundary (log utility at c = 0); it is produced explicitly
and callers are expected to test for it with ``np.isneginf`` rather than let it
propagate through arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from hjbgrowth.errors import DomainError

FD_STEP = 1e-6


def _fd_step(x):
    return np.maximum(FD_STEP, FD_STEP * np.abs(x))


def crra(x, theta: float, log_flag: bool):
    """CRRA felicity u_theta(x), normalised so u(1) = 0 and u'(1) = 1."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        if log_flag:
            return np.log(x)
        return (np.power(x, 1.0 - theta) - 1.0) / (1.0 - theta)


def crra_marginal(x, theta: float):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.power(x, -theta)


# ---------------------------------------------------------------------------
# utility


@dataclass(frozen=True)
class Utility:
    """u(c, k) = scale * u_theta(c) + k_weight * u_theta(k) + shift, or a user function.

    ``kind`` is ``"log"``, ``"crra"`` or ``"custom"``.  For ``"custom"`` supply
    ``fn(c, k)``; ``dc_fn``/``dk_fn`` are optional and replaced by finite
    differences when absent.
    """

    kind: str = "log"
    theta: float = 1.0
    scale: float = 1.0
    shift: float = 0.0
    k_weight: float = 0.0
    fn: Optional[Callable] = field(default=None, compare=False)
    dc_fn: Optional[Callable] = field(default=None, compare=False)
    dk_fn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("log", "crra", "custom"):
            raise ValueError(f"unknown utility kind {self.kind!r}")
        if self.kind == "log" and self.theta != 1.0:
            object.__setattr__(self, "theta", 1.0)
        if self.kind == "crra":
            if not self.theta > 0:
                raise ValueError("CRRA utility needs theta > 0")
            if abs(self.theta - 1.0) < 1e-12 and self.theta != 1.0:
                import warnings

                warnings.warn("theta within 1e-12 of 1; use kind='log' for the logarithmic branch")
        if not self.scale > 0:
            raise ValueError("utility scale must be positive")
        if self.k_weight < 0:
            raise ValueError("k_weight must be nonnegative (u nondecreasing in k)")
        if self.kind == "custom" and self.fn is None:
            raise ValueError("custom utility requires fn(c, k)")

    @property
    def is_log(self) -> bool:
        return self.kind == "log" or (self.kind == "crra" and self.theta == 1.0)

    @property
    def separable(self) -> bool:
        """True when du/dc does not depend on k (closed-form inverse marginal available)."""
        return self.kind != "custom"

    def __call__(self, c, k):
        if self.kind == "custom":
            return _vec(self.fn, c, k)
        out = self.scale * crra(c, self.theta, self.is_log) + self.shift
        if self.k_weight != 0.0:
            out = out + self.k_weight * crra(k, self.theta, self.is_log)
        return out

    def dc(self, c, k):
        if self.kind == "custom":
            if self.dc_fn is not None:
                return _vec(self.dc_fn, c, k)
            c = np.asarray(c, dtype=float)
            h = _fd_step(c)
            lo = np.maximum(c - h, 0.5 * c)
            return (self(c + h, k) - self(lo, k)) / (c + h - lo)
        return self.scale * crra_marginal(c, self.theta)

    def dk(self, c, k):
        if self.kind == "custom":
            if self.dk_fn is not None:
                return _vec(self.dk_fn, c, k)
            k = np.asarray(k, dtype=float)
            h = _fd_step(k)
            lo = np.maximum(k - h, 0.5 * k)
            return (self(c, k + h) - self(c, lo)) / (k + h - lo)
        if self.k_weight == 0.0:
            return np.zeros(np.broadcast(np.asarray(c), np.asarray(k)).shape)
        return self.k_weight * crra_marginal(k, self.theta)

    def inv_dc(self, p, k=None):
        """Consumption c with du/dc(c, k) = p (closed form for the CRRA family)."""
        if self.kind == "custom":
            raise NotImplementedError("custom utilities have no closed-form inverse marginal")
        p = np.asarray(p, dtype=float)
        return np.power(p / self.scale, -1.0 / self.theta)

    def sup_over_c(self, k):
        """lim_{c -> inf} u(c, k): the Hamiltonian at p = 0."""
        if self.kind == "custom":
            c = 1e12
            return float(self(c, k))
        if self.theta > 1.0:
            top = self.scale / (self.theta - 1.0) + self.shift
            if self.k_weight != 0.0:
                top = top + self.k_weight * crra(k, self.theta, False)
            return top
        return math.inf

    @property
    def bounded_above(self) -> Optional[bool]:
        if self.kind == "custom":
            return None
        return self.theta > 1.0

    @property
    def bounded_below(self) -> Optional[bool]:
        if self.kind == "custom":
            return None
        return self.theta < 1.0


# ---------------------------------------------------------------------------
# technology


@dataclass(frozen=True)
class Production:
    """Production function f(k): ``cobb_douglas`` (kappa k^alpha), ``linear`` (gamma k) or ``custom``."""

    kind: str = "cobb_douglas"
    kappa: float = 1.0
    alpha: float = 0.5
    gamma: float = 1.0
    fn: Optional[Callable] = field(default=None, compare=False)
    dfn: Optional[Callable] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind == "cobb_douglas":
            if not (self.kappa > 0 and 0 < self.alpha < 1):
                raise ValueError("Cobb-Douglas needs kappa > 0 and alpha in (0, 1)")
        elif self.kind == "linear":
            if not self.gamma > 0:
                raise ValueError("linear production needs gamma > 0")
        elif self.kind == "custom":
            if self.fn is None:
                raise ValueError("custom production requires fn(k)")
        else:
            raise ValueError(f"unknown production kind {self.kind!r}")

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == "cobb_douglas":
            return self.kappa * np.power(k, self.alpha)
        if self.kind == "linear":
            return self.gamma * k
        return _vec(self.fn, k)

    def deriv(self, k):
        k = np.asarray(k, dtype=float)
        if self.kind == "cobb_douglas":
            with np.errstate(divide="ignore"):
                return self.kappa * self.alpha * np.power(k, self.alpha - 1.0)
        if self.kind == "linear":
            return np.full(k.shape, self.gamma)
        if self.dfn is not None:
            return _vec(self.dfn, k)
        h = _fd_step(k)
        return (self(k + h) - self(np.maximum(k - h, 0.0))) / (k + h - np.maximum(k - h, 0.0))

    def marginal_inverse(self, y: float) -> float:
        """Capital level k with f'(k) = y (Cobb-Douglas closed form)."""
        if self.kind == "cobb_douglas":
            return (y / (self.kappa * self.alpha)) ** (1.0 / (self.alpha - 1.0))
        raise NotImplementedError(self.kind)


@dataclass(frozen=True)
class Technology:
    """Technology F(k, c).

    kinds:
      ``rck``     f(k) - d k - c
      ``ak``      gamma k - c
      ``fiscal``  f(k) - d k - c - max((A f(k) - c) B, 0)
      ``custom``  fn(k, c), with optional one-sided partials
    """

    kind: str = "rck"
    production: Optional[Production] = None
    depreciation: float = 0.0
    gamma: float = 0.04
    A: float = 0.5
    B: float = 0.5
    fn: Optional[Callable] = field(default=None, compare=False)
    partials: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in ("rck", "ak", "fiscal", "custom"):
            raise ValueError(f"unknown technology kind {self.kind!r}")
        if self.kind in ("rck", "fiscal") and self.production is None:
            raise ValueError(f"{self.kind} technology needs a production function")
        if self.depreciation < 0:
            raise ValueError("depreciation rate must be >= 0")
        if self.kind == "ak" and not self.gamma > 0:
            raise ValueError("AK technology needs gamma > 0")
        if self.kind == "fiscal" and not (0 < self.A < 1 and 0 < self.B < 1):
            raise ValueError("fiscal rule needs A, B in (0, 1)")
        if self.kind == "custom" and self.fn is None:
            raise ValueError("custom technology requires fn(k, c)")

    # values ---------------------------------------------------------------

    def __call__(self, k, c):
        k = np.asarray(k, dtype=float)
        c = np.asarray(c, dtype=float)
        if self.kind == "ak":
            return self.gamma * k - c
        if self.kind == "custom":
            return _vec(self.fn, k, c)
        f = self.production(k)
        out = f - self.depreciation * k - c
        if self.kind == "fiscal":
            out = out - np.maximum((self.A * f - c) * self.B, 0.0)
        return out

    def at_zero_consumption(self, k):
        return self(k, 0.0)

    # one-sided partial derivatives -----------------------------------------

    def dk_plus(self, k, c):
        return self._partial("dk_plus", k, c)

    def dk_minus(self, k, c):
        return self._partial("dk_minus", k, c)

    def dc_plus(self, k, c):
        return self._partial("dc_plus", k, c)

    def dc_minus(self, k, c):
        return self._partial("dc_minus", k, c)

    def _partial(self, which, k, c):
        k = np.asarray(k, dtype=float)
        c = np.asarray(c, dtype=float)
        shape = np.broadcast(k, c).shape
        if self.kind == "ak":
            val = self.gamma if which.startswith("dk") else -1.0
            return np.full(shape, val)
        if self.kind == "rck":
            if which.startswith("dc"):
                return np.full(shape, -1.0)
            return np.broadcast_to(self.production.deriv(k) - self.depreciation, shape).copy()
        if self.kind == "fiscal":
            f = self.production(k)
            af = self.A * f
            if which == "dc_plus":
                return np.where(c >= af, -1.0, -(1.0 - self.B)) + np.zeros(shape)
            if which == "dc_minus":
                return np.where(c > af, -1.0, -(1.0 - self.B)) + np.zeros(shape)
            fp = self.production.deriv(k)
            taxed = (1.0 - self.A * self.B) * fp - self.depreciation
            untaxed = fp - self.depreciation
            if which == "dk_plus":
                return np.where(af >= c, taxed, untaxed) + np.zeros(shape)
            return np.where(af > c, taxed, untaxed) + np.zeros(shape)
        if self.partials and which in self.partials:
            return _vec(self.partials[which], k, c)
        return self._fd_partial(which, k, c)

    def _fd_partial(self, which, k, c):
        k, c = np.broadcast_arrays(np.asarray(k, float), np.asarray(c, float))
        if which.startswith("dk"):
            h = _fd_step(k)
            if which == "dk_plus":
                return (self(k + h, c) - self(k, c)) / h
            h = np.minimum(h, k)
            h = np.where(h > 0, h, _fd_step(k))
            back = np.maximum(k - h, 0.0)
            return (self(k, c) - self(back, c)) / np.where(k - back > 0, k - back, 1.0)
        h = _fd_step(c)
        if which == "dc_plus":
            return (self(k, c + h) - self(k, c)) / h
        back = np.maximum(c - h, 0.0)
        width = c - back
        fwd = (self(k, c + h) - self(k, c)) / h
        bwd = (self(k, c) - self(k, back)) / np.where(width > 0, width, 1.0)
        return np.where(width > 0, bwd, fwd)

    # structure ---------------------------------------------------------------

    def c_kinks(self, k):
        """Consumption levels at which c -> F(k, c) is not differentiable."""
        if self.kind == "fiscal":
            return [float(self.A * self.production(k))]
        return []

    def smooth_in_c(self, k: float, c: float, tol: float = 1e-9) -> bool:
        if self.kind in ("rck", "ak"):
            return True
        if self.kind == "fiscal":
            return all(abs(c - ck) > tol * max(1.0, abs(ck)) for ck in self.c_kinks(k))
        lo, hi = float(self.dc_plus(k, c)), float(self.dc_minus(k, c))
        return hi - lo <= 1e-6 * max(1.0, abs(lo) + abs(hi))

    def zero_drift_consumption(self, k):
        """c0(k) with F(k, c0) = 0; NaN where F(k, 0) <= 0 (no zero-drift consumption)."""
        k = np.asarray(k, dtype=float)
        f0 = self.at_zero_consumption(k)
        if self.kind in ("rck", "ak"):
            return np.where(f0 > 0, f0, np.nan)
        if self.kind == "fiscal":
            f = self.production(k)
            net = f - self.depreciation * k
            upper = net
            lower = ((1.0 - self.A * self.B) * f - self.depreciation * k) / (1.0 - self.B)
            c0 = np.where(net >= self.A * f, upper, lower)
            return np.where(f0 > 0, c0, np.nan)
        return np.vectorize(self._c0_bisect, otypes=[float])(k)

    def _c0_bisect(self, k: float) -> float:
        if not float(self(k, 0.0)) > 0:
            return math.nan
        lo, hi = 0.0, max(1.0, abs(float(self(k, 0.0))))
        while float(self(k, hi)) > 0:
            hi *= 2.0
            if hi > 1e300:
                return math.nan
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if float(self(k, mid)) > 0:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-15 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)


def _vec(fn, *args):
    arrays = [np.asarray(a, dtype=float) for a in args]
    if all(a.ndim == 0 for a in arrays):
        return np.float64(fn(*[float(a) for a in arrays]))
    return np.vectorize(fn, otypes=[float])(*arrays)


# ---------------------------------------------------------------------------
# model specification


@dataclass(frozen=True)
class Assumption3Witness:
    """Constants for the lower bound F(k, c) > -d1 k - delta2(c); delta2(c) = d2 c."""

    d1: float
    d2: float = 1.0


@dataclass(frozen=True)
class Assumption5Witness:
    """Supergradient point and CRRA dominance constants for the upper envelope."""

    k_star: float
    c_star: float
    gamma: float
    delta: float
    theta: float
    a: float
    b: float = 0.0
    C: float = 0.0
    log_branch: Optional[bool] = None

    @property
    def is_log(self) -> bool:
        if self.log_branch is not None:
            return self.log_branch
        return self.theta == 1.0


@dataclass(frozen=True)
class Assumption6Witness:
    """k with inf_c D_{k,+}F(k, c) > rho; eps0 and the switching function are recorded only."""

    k: float
    eps0: float = 1.0
    switching: str = ""


@dataclass(frozen=True)
class ModelSpec:
    rho: float
    utility: Utility
    technology: Technology
    w_flag: str = "W1"
    assumption3: Optional[Assumption3Witness] = None
    assumption5: Optional[Assumption5Witness] = None
    assumption6: Optional[Assumption6Witness] = None
    name: str = ""

    def __post_init__(self):
        if self.w_flag not in ("W1", "W2"):
            raise ValueError("w_flag must be 'W1' or 'W2'")

    def u(self, c, k):
        return self.utility(c, k)

    def F(self, k, c):
        return self.technology(k, c)

    def steady_state(self) -> Optional[float]:
        """Modified golden rule f'(k) = rho + d for the smooth Cobb-Douglas RCK model."""
        t = self.technology
        if t.kind == "rck" and t.production.kind == "cobb_douglas":
            return float(t.production.marginal_inverse(self.rho + t.depreciation))
        return None


def eval_utility(m: ModelSpec, c, k):
    """u(c, k); raises DomainError on negative arguments, may return -inf at c = 0."""
    c_arr, k_arr = np.asarray(c, dtype=float), np.asarray(k, dtype=float)
    if np.any(c_arr < 0) or np.any(k_arr < 0):
        raise DomainError("utility is defined on c >= 0, k >= 0")
    out = m.utility(c_arr, k_arr)
    return float(out) if np.ndim(out) == 0 else out


def eval_technology(m: ModelSpec, k, c):
    """F(k, c) exactly as specified by the technology kind."""
    c_arr, k_arr = np.asarray(c, dtype=float), np.asarray(k, dtype=float)
    if np.any(c_arr < 0) or np.any(k_arr < 0):
        raise DomainError("technology is defined on k >= 0, c >= 0")
    out = m.technology(k_arr, c_arr)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# built-in model families


def ak(gamma: float = 0.04, rho: float = 0.05, utility: Optional[Utility] = None, name: str = "ak") -> ModelSpec:
    """F(k, c) = gamma k - c; (gamma, -1) is a global supergradient so the envelope witness is exact."""
    utility = utility or Utility("log")
    w5 = None
    if utility.kind != "custom" and utility.k_weight == 0.0 and rho - (1.0 - utility.theta) * gamma > 0:
        w5 = Assumption5Witness(1.0, 0.0, gamma, 1.0, utility.theta, a=utility.scale, b=0.0, C=utility.shift)
    return ModelSpec(
        rho=rho,
        utility=utility,
        technology=Technology("ak", gamma=gamma),
        assumption3=Assumption3Witness(d1=1.0, d2=1.0),
        assumption5=w5,
        name=name,
    )


def ak_log(gamma: float = 0.04, rho: float = 0.05) -> ModelSpec:
    return ak(gamma, rho, Utility("log"), name="ak_log")


def rck(
    kappa: float = 1.0,
    alpha: float = 0.3,
    d: float = 0.05,
    rho: float = 0.05,
    utility: Optional[Utility] = None,
    name: str = "rck",
) -> ModelSpec:
    utility = utility or Utility("log")
    prod = Production("cobb_douglas", kappa=kappa, alpha=alpha)
    tech = Technology("rck", production=prod, depreciation=d)
    return ModelSpec(
        rho=rho,
        utility=utility,
        technology=tech,
        assumption3=Assumption3Witness(d1=d + 1.0, d2=1.0),
        assumption5=_smooth_witness(rho, utility, tech),
        assumption6=_a6_witness(rho, tech),
        name=name,
    )


def fiscal(
    kappa: float = 1.0,
    alpha: float = 0.3,
    d: float = 0.0,
    A: float = 0.5,
    B: float = 0.5,
    rho: float = 0.05,
    utility: Optional[Utility] = None,
    name: str = "fiscal",
) -> ModelSpec:
    utility = utility or Utility("log")
    prod = Production("cobb_douglas", kappa=kappa, alpha=alpha)
    tech = Technology("fiscal", production=prod, depreciation=d, A=A, B=B)
    return ModelSpec(
        rho=rho,
        utility=utility,
        technology=tech,
        assumption3=Assumption3Witness(d1=d + 1.0, d2=1.0),
        assumption5=_smooth_witness(rho, utility, tech),
        assumption6=_a6_witness(rho, tech),
        name=name,
    )


def counterexample(rho: float = 0.05) -> ModelSpec:
    """u(c) = -1/c, F(k, c) = sqrt(k) - c: V = 0 solves the HJB equation classically."""
    utility = Utility("crra", theta=2.0, shift=-1.0)
    tech = Technology("rck", production=Production("cobb_douglas", kappa=1.0, alpha=0.5), depreciation=0.0)
    return ModelSpec(
        rho=rho,
        utility=utility,
        technology=tech,
        assumption3=Assumption3Witness(d1=1.0, d2=1.0),
        assumption5=_smooth_witness(rho, utility, tech),
        assumption6=_a6_witness(rho, tech),
        name="counterexample",
    )


def fiscal_kink_capital(m: ModelSpec) -> Optional[float]:
    """k* > 0 with f(k*) - d k* = A f(k*) for the fiscal family with d > 0."""
    t = m.technology
    if t.kind != "fiscal" or t.depreciation <= 0:
        return None
    p = t.production
    if p.kind == "cobb_douglas":
        return ((1.0 - t.A) * p.kappa / t.depreciation) ** (1.0 / (1.0 - p.alpha))
    from scipy.optimize import brentq

    g = lambda k: (1.0 - t.A) * float(p(k)) - t.depreciation * k
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
    return brentq(g, 1e-12, hi)


def _smooth_witness(rho, utility, tech) -> Optional[Assumption5Witness]:
    """Witness at (k*, c*) = (1, c) with c above the fiscal threshold, where F is differentiable."""
    if utility.kind == "custom" or utility.k_weight != 0.0:
        return None
    k_star = 1.0
    c_star = 1.0
    if tech.kind == "fiscal":
        c_star = max(1.0, 2.0 * tech.A * float(tech.production(k_star)))
    gamma = float(tech.dk_plus(k_star, c_star))
    delta = -float(tech.dc_plus(k_star, c_star))
    theta = utility.theta
    if not (gamma > 0 and rho - (1.0 - theta) * gamma > 0):
        return None
    return Assumption5Witness(k_star, c_star, gamma, delta, theta, a=utility.scale, b=0.0, C=utility.shift)


def _a6_witness(rho, tech) -> Optional[Assumption6Witness]:
    # inf_c D_{k,+}F(k, c) > rho at small k (Inada); probe a decreasing ladder
    for k in np.logspace(0, -12, 61):
        c_probe = np.concatenate([[0.0], np.logspace(-8, 8, 33)])
        if float(np.min(tech.dk_plus(k, c_probe))) > rho:
            return Assumption6Witness(k=float(k), eps0=1.0, switching="A f(k) - c" if tech.kind == "fiscal" else "k - c")
    return None


def bundled_models() -> dict:
    return {
        "ak_log": ak_log(),
        "rck": rck(),
        "fiscal_d0": fiscal(d=0.0, A=0.5, B=0.5, name="fiscal_d0"),
        "fiscal_d": fiscal(d=0.05, A=0.9, B=0.5, name="fiscal_d"),
    }


# ---------------------------------------------------------------------------
# assumption spot checks


@dataclass(frozen=True)
class ProbePlan:
    """Finite sample sets driving the necessary-condition checks."""

    k_range: tuple = (1e-3, 1e3)
    c_range: tuple = (1e-3, 1e3)
    n_random: int = 2000
    seed: int = 0
    inada_low: float = 1e-6
    inada_high: float = 1e6
    inada_ratio: float = 1e4


@dataclass
class AssumptionCheck:
    status: str  # "pass" | "fail" | "inconclusive"
    detail: str = ""
    witness: Optional[dict] = None

    def __bool__(self):
        return self.status == "pass"


def _combine(parts):
    """Merge sub-checks: any fail -> fail, else any inconclusive -> inconclusive."""
    for p in parts:
        if p.status == "fail":
            return p
    inc = [p for p in parts if p.status == "inconclusive"]
    if inc:
        return AssumptionCheck("inconclusive", "; ".join(p.detail for p in inc))
    return AssumptionCheck("pass", "; ".join(p.detail for p in parts if p.detail))


def _loguniform(rng, lo, hi, n):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), n))


def _midpoint_concavity(fn, xs, ys, label):
    """Check fn(mid) >= average on random pairs (xs[i], ys[i]) -> (xs[j], ys[j])."""
    n = len(xs) // 2
    x1, x2 = xs[:n], xs[n : 2 * n]
    y1, y2 = ys[:n], ys[n : 2 * n]
    t = np.linspace(0.05, 0.95, n)
    v1, v2 = fn(x1, y1), fn(x2, y2)
    vm = fn(t * x1 + (1 - t) * x2, t * y1 + (1 - t) * y2)
    slack = 1e-9 * (1.0 + np.abs(v1) + np.abs(v2))
    bad = np.nonzero(vm < t * v1 + (1 - t) * v2 - slack)[0]
    if bad.size:
        i = int(bad[0])
        return AssumptionCheck(
            "fail",
            f"{label} not concave",
            {"p1": (float(x1[i]), float(y1[i])), "p2": (float(x2[i]), float(y2[i])), "t": float(t[i])},
        )
    return AssumptionCheck("pass", f"{label} concave on {n} sampled pairs")


def verify_assumptions(m: ModelSpec, probes: Optional[ProbePlan] = None) -> dict:
    """Sampling-based necessary-condition checks for the standing assumptions 1-6.

    "pass" means no counterexample was found on the probe set; it is never a proof.
    """
    probes = probes or ProbePlan()
    rng = np.random.default_rng(probes.seed)
    n = probes.n_random
    ks = _loguniform(rng, *probes.k_range, n)
    cs = _loguniform(rng, *probes.c_range, n)
    u, F = m.utility, m.technology
    report = {}

    # 1: discount rate
    if m.rho > 0:
        report["A1"] = AssumptionCheck("pass", f"rho = {m.rho} > 0")
    else:
        report["A1"] = AssumptionCheck("fail", f"rho = {m.rho} must be > 0", {"rho": m.rho})

    # 2: utility
    parts = [_midpoint_concavity(lambda c, k: u(c, k), cs, ks, "u")]
    c2 = cs * (1.0 + rng.uniform(0.01, 1.0, n))
    k2 = ks * (1.0 + rng.uniform(0.01, 1.0, n))
    bad = np.nonzero(~(u(c2, ks) > u(cs, ks)))[0]
    if bad.size:
        i = int(bad[0])
        parts.append(AssumptionCheck("fail", "u not increasing in c", {"c": (cs[i], c2[i]), "k": ks[i]}))
    bad = np.nonzero(u(cs, k2) < u(cs, ks) - 1e-12 * (1 + np.abs(u(cs, ks))))[0]
    if bad.size:
        i = int(bad[0])
        parts.append(AssumptionCheck("fail", "u decreasing in k", {"c": cs[i], "k": (ks[i], k2[i])}))
    if not np.isfinite(u(1.0, 0.0)):
        top = u(probes.c_range[1], 0.0)
        parts.append(
            AssumptionCheck("pass" if np.isfinite(top) else "fail", "u(c, 0) > -inf for some c", {"c": probes.c_range[1]})
        )
    report["A2"] = _combine(parts)

    # 3: technology
    parts = [_midpoint_concavity(lambda k, c: F(k, c), ks, cs, "F")]
    f00 = float(F(0.0, 0.0))
    parts.append(
        AssumptionCheck("pass" if abs(f00) <= 1e-12 else "fail", f"F(0,0) = {f00}", None if abs(f00) <= 1e-12 else {"F00": f00})
    )
    bad = np.nonzero(~(F(ks, c2) < F(ks, cs)))[0]
    if bad.size:
        i = int(bad[0])
        parts.append(AssumptionCheck("fail", "F not decreasing in c", {"k": ks[i], "c": (cs[i], c2[i])}))
    w3 = m.assumption3
    if w3 is not None:
        lhs = F(ks, cs)
        bad = np.nonzero(~(lhs > -w3.d1 * ks - w3.d2 * cs))[0]
        if bad.size:
            i = int(bad[0])
            parts.append(AssumptionCheck("fail", "F <= -d1 k - d2 c", {"k": ks[i], "c": cs[i]}))
    else:
        parts.append(AssumptionCheck("inconclusive", "no (d1, d2) witness supplied"))
    kgrid = np.logspace(-8, 3, 221)
    for c in np.concatenate([[0.0], np.logspace(-3, 2, 11)]):
        if not np.any(F(kgrid, c) > F(0.0, c)):
            parts.append(AssumptionCheck("fail", "no k with F(k, c) > F(0, c)", {"c": float(c)}))
            break
    report["A3"] = _combine(parts)

    # 4: marginal utility
    parts = []
    dc1, dc2 = u.dc(cs, ks), u.dc(c2, ks)
    bad = np.nonzero(~(dc2 < dc1))[0]
    if bad.size:
        i = int(bad[0])
        parts.append(AssumptionCheck("fail", "du/dc not decreasing", {"c": (cs[i], c2[i]), "k": ks[i]}))
    for k in (probes.k_range[0], 1.0, probes.k_range[1]):
        lo = float(u.dc(probes.inada_low, k))
        mid = float(u.dc(1.0, k))
        hi = float(u.dc(probes.inada_high, k))
        r = probes.inada_ratio
        if lo > r * mid and hi < mid / r:
            parts.append(AssumptionCheck("pass", "Inada probes"))
        elif lo > mid > hi:
            parts.append(AssumptionCheck("inconclusive", f"Inada limits not certified at k={k}", {"dc": (lo, mid, hi)}))
        else:
            parts.append(AssumptionCheck("fail", "Inada probe contradicts limits", {"k": k, "dc": (lo, mid, hi)}))
        uk = float(u.dk(probes.inada_low, k))
        if not np.isfinite(uk):
            parts.append(AssumptionCheck("fail", "du/dk unbounded as c -> 0", {"k": k}))
    report["A4"] = _combine(parts)

    # 5: envelope witness
    w5 = m.assumption5
    if w5 is None:
        report["A5"] = AssumptionCheck("inconclusive", "no witness supplied")
    else:
        parts = []
        margin = m.rho - (1.0 - w5.theta) * w5.gamma
        parts.append(AssumptionCheck("pass" if margin > 0 else "fail", f"rho - (1-theta) gamma = {margin}"))
        if not (w5.gamma > 0 and w5.delta > 0 and w5.theta > 0 and w5.a > 0 and w5.b >= 0):
            parts.append(AssumptionCheck("fail", "witness constants out of range"))
        parts.append(_supergradient_check(m, w5, rng, n))
        ut = lambda x: crra(x, w5.theta, w5.is_log)
        with np.errstate(invalid="ignore"):
            rhs = w5.a * ut(cs) + (w5.b * ut(ks) if w5.b else 0.0) + w5.C
        lhs = u(cs, ks)
        bad = np.nonzero(lhs > rhs + 1e-9 * (1 + np.abs(rhs)))[0]
        if bad.size:
            i = int(bad[0])
            parts.append(AssumptionCheck("fail", "u exceeds a u_theta(c) + b u_theta(k) + C", {"c": cs[i], "k": ks[i]}))
        report["A5"] = _combine(parts)

    # 6: strong marginal product at small k
    w6 = m.assumption6
    if w6 is None:
        report["A6"] = AssumptionCheck("inconclusive", "no witness supplied")
    else:
        c_probe = np.concatenate([[0.0], np.logspace(-8, 8, 65)])
        worst = float(np.min(F.dk_plus(w6.k, c_probe)))
        ok = worst > m.rho
        report["A6"] = AssumptionCheck(
            "pass" if ok else "fail", f"min_c D_k+ F({w6.k}, c) = {worst} vs rho = {m.rho}", {"k": w6.k, "inf": worst}
        )
    return report


def _supergradient_check(m, w5, rng, n):
    F = m.technology
    lo_k, hi_k = float(F.dk_plus(w5.k_star, w5.c_star)), float(F.dk_minus(w5.k_star, w5.c_star))
    lo_c, hi_c = float(F.dc_plus(w5.k_star, w5.c_star)), float(F.dc_minus(w5.k_star, w5.c_star))
    tol = 1e-7
    if not (lo_k - tol <= w5.gamma <= hi_k + tol and lo_c - tol <= -w5.delta <= hi_c + tol):
        return AssumptionCheck(
            "fail",
            "(gamma, -delta) outside the partial subdifferentials",
            {"dk": (lo_k, hi_k), "dc": (lo_c, hi_c)},
        )
    ks = _loguniform(rng, 1e-4, 1e4, n)
    cs = _loguniform(rng, 1e-4, 1e4, n)
    f_star = float(F(w5.k_star, w5.c_star))
    affine = f_star + w5.gamma * (ks - w5.k_star) - w5.delta * (cs - w5.c_star)
    bad = np.nonzero(F(ks, cs) > affine + 1e-9 * (1 + np.abs(affine)))[0]
    if bad.size:
        i = int(bad[0])
        return AssumptionCheck("fail", "supergradient inequality violated", {"k": ks[i], "c": cs[i]})
    return AssumptionCheck("pass", "(gamma, -delta) is a supergradient on the probe set")
