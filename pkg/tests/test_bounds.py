import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjbgrowth import model
from hjbgrowth.bounds import (
    EnvelopeParams,
    envelope_check,
    envelope_value,
    growth_condition_check,
    slope_shortcut,
    upper_envelope,
    v3,
    v4,
)
from hjbgrowth.model import ModelSpec, Technology, Utility

RHO = 0.05


def ak_params(**kw):
    base = dict(rho=RHO, k_star=0.0, c_star=0.0, gamma=0.04, delta=1.0, theta=1.0)
    base.update(kw)
    return EnvelopeParams(**base)


def params_with_c_star_one(theta, gamma):
    # C* = margin k_hat / (theta delta) = 1 with k* = c* = 0 and F* = 0
    margin = RHO - (1 - theta) * gamma
    return EnvelopeParams(RHO, 0.0, 0.0, gamma, 1.0, theta), theta / margin


def test_v3_log_branch_ak():
    p = ak_params()
    assert p.c_star_level(1.0) == pytest.approx(0.05)
    assert v3(p, 1.0) == pytest.approx(math.log(0.05) / 0.05 + (0.04 - 0.05) / 0.05**2, rel=1e-14)


def test_v3_log_branch_unit_level():
    p, k_hat = params_with_c_star_one(1.0, 0.04)
    assert p.c_star_level(k_hat) == pytest.approx(1.0, rel=1e-14)
    assert v3(p, k_hat) == pytest.approx((0.04 - 0.05) / 0.05**2, rel=1e-12)


def test_v3_crra_branch():
    p, k_hat = params_with_c_star_one(2.0, 0.02)
    assert v3(p, k_hat) == pytest.approx(2 / (-1 * 0.07) - 1 / (0.05 * -1), rel=1e-12)
    assert v3(p, k_hat) == pytest.approx(-8.5714, abs=1e-4)
    # increasing through neighbouring C* levels
    assert v3(p, 0.99 * k_hat) < v3(p, k_hat) < v3(p, 1.01 * k_hat)


def test_v4_log_branch():
    p = ak_params()
    assert v4(p, 1.0) == pytest.approx(0.04 / 0.05**2, rel=1e-14)
    assert v4(p, math.e) == pytest.approx(1 / 0.05 + 0.04 / 0.05**2, rel=1e-14)


def test_v4_crra_branch():
    p = ak_params(theta=0.5)
    assert v4(p, 4.0) == pytest.approx(2 / 0.015 - 40, rel=1e-12)
    assert v4(p, 4.0) == pytest.approx(93.333, abs=1e-3)


def linear_problem_value(theta, gamma, k_bar, rho=RHO, T=4000.0, n=400_001):
    """Discounted u_theta along the candidate path c = C* e^{(gamma - rho) t / theta} of the linear model."""
    margin = rho - (1 - theta) * gamma
    cs = margin * k_bar / theta
    t = np.linspace(0.0, T, n)
    c = cs * np.exp((gamma - rho) * t / theta)
    u = np.log(c) if theta == 1.0 else (c ** (1 - theta) - 1) / (1 - theta)
    from scipy.integrate import simpson

    return float(simpson(np.exp(-rho * t) * u, x=t)), c, t


@pytest.mark.parametrize("theta,gamma", [(1.0, 0.04), (0.5, 0.04), (2.0, 0.02)])
def test_v3_matches_simulated_candidate_path(theta, gamma):
    p = ak_params(theta=theta, gamma=gamma)
    val, c, t = linear_problem_value(theta, gamma, 1.0)
    assert v3(p, 1.0) == pytest.approx(val, rel=1e-6, abs=1e-6)
    # the candidate path is feasible: its present value at rate gamma exhausts k_hat exactly
    from scipy.integrate import simpson

    assert simpson(np.exp(-gamma * t) * c, x=t) == pytest.approx(1.0, rel=1e-6)


def test_v4_matches_simulated_capital_path():
    # the capital-utility problem is solved by zero consumption: k(t) = k_hat e^{gamma t}
    theta, gamma = 0.5, 0.04
    p = ak_params(theta=theta, gamma=gamma)
    from scipy.integrate import simpson

    t = np.linspace(0.0, 4000.0, 400_001)
    k = 4.0 * np.exp(gamma * t)
    val = simpson(np.exp(-RHO * t) * (k ** (1 - theta) - 1) / (1 - theta), x=t)
    assert v4(p, 4.0) == pytest.approx(val, rel=1e-6)


@settings(max_examples=60)
@given(theta=st.floats(0.2, 5.0), gamma=st.floats(0.005, 0.2), delta=st.floats(0.2, 3.0))
def test_envelopes_increasing_and_concave(theta, gamma, delta):
    if RHO - (1 - theta) * gamma <= 1e-3:
        return
    p = ak_params(theta=theta, gamma=gamma, delta=delta)
    k = np.geomspace(0.05, 50.0, 200)
    for fn in (v3, v4):
        v = fn(p, k)
        s = np.diff(v) / np.diff(k)
        assert np.all(s > 0)
        assert np.all(np.diff(s) <= 1e-9 * np.abs(s[:-1]))


def test_k_hat_and_level_positive():
    p = EnvelopeParams(RHO, 1.0, 1.0, 0.2, 1.0, 1.0, F_star=0.5)
    assert p.k_hat(1e-12) > 0
    assert p.c_star_level(1e-12) > 0


def test_upper_envelope_compositions():
    m = model.ak_log()
    p = EnvelopeParams.from_model(m)
    k = 2.0
    a3, a4 = v3(p, k), v4(p, k)
    for (a, b, C), want in (((1, 0, 0), a3), ((0, 1, 0), a4), ((1, 1, 2), a3 + a4 + 40.0)):
        q = EnvelopeParams(p.rho, p.k_star, p.c_star, p.gamma, p.delta, p.theta, a=a, b=b, C=C, F_star=p.F_star)
        assert envelope_value(q, k) == pytest.approx(want, rel=1e-14)
    assert upper_envelope(m, k) == pytest.approx(a3, rel=1e-14)


def test_invalid_params_rejected():
    with pytest.raises(ValueError, match="delta"):
        ak_params(delta=0.0)
    with pytest.raises(ValueError):
        ak_params(theta=0.1, gamma=0.1)  # margin = 0.05 - 0.09 < 0
    with pytest.raises(ValueError):
        ak_params(theta=-1.0)


def test_missing_witness_is_argument_error():
    tech = Technology("custom", fn=lambda k, c: math.sqrt(k) - c)
    m = ModelSpec(rho=RHO, utility=Utility("log"), technology=tech)
    with pytest.raises(ValueError, match="witness"):
        upper_envelope(m, 1.0)


def test_log_branch_flag_not_float_comparison():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        p = ak_params(theta=1.0 + 1e-13)
    assert not p.log_branch
    assert any("theta" in str(x.message) for x in w)
    q = ak_params(theta=1.0)
    assert q.log_branch


# ---------------------------------------------------------------------------
# growth condition


def test_ak_shortcut_fires():
    m = model.ak_log()
    V = lambda k: float(np.log(0.05 * k) / 0.05 - 4.0)
    rep = growth_condition_check(V, m, 1.0)
    gamma, _ = slope_shortcut(m)
    assert gamma == pytest.approx(0.04)
    assert rep.shortcut and rep.member


def test_constant_function_passes_trace():
    rep = growth_condition_check(lambda k: 3.0, model.rck(), 1.0)
    assert rep.passed
    assert rep.tail <= rep.tolerance


def test_linear_function_with_fast_growth_fails():
    m = model.ak(gamma=0.08, rho=0.05)
    rep = growth_condition_check(lambda k: k, m, 1.0)
    assert not rep.passed
    T, kp, dv = rep.trace[-1]
    assert dv == pytest.approx(math.exp((0.08 - 0.05) * T), rel=1e-6)
    assert rep.shortcut_gamma is None
    assert not rep.member


def test_growth_trace_csv(tmp_path):
    rep = growth_condition_check(lambda k: 3.0, model.rck(), 1.0, n_ladder=5)
    out = tmp_path / "tail.csv"
    rep.to_csv(out)
    rows = list(csv.reader(open(out)))
    assert rows[0] == ["T", "k_plus", "discounted_value"]
    assert len(rows) == 6


def test_envelope_dominates_solved_grids(solved, bundled):
    for name, V in solved.items():
        rep = envelope_check(V, bundled[name])
        assert rep.passed, (name, rep.max_excess)
