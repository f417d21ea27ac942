import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjbgrowth import hamiltonian as ham
from hjbgrowth import model
from hjbgrowth.model import ModelSpec, Technology, Utility

RCK_LOG = model.rck()
RCK_CRRA = model.rck(utility=Utility("crra", theta=2.0))
FISCAL = model.fiscal(kappa=1.0, alpha=0.5, d=0.0, A=0.5, B=0.5)
AK = model.ak_log()
MODELS = [RCK_LOG, RCK_CRRA, FISCAL, AK, model.bundled_models()["fiscal_d"], model.counterexample()]


def dense_sup(m, k, p, c_max=None, n=1_000_000):
    """Brute-force oracle: maximise over a dense c grid, then polish locally."""
    c_max = c_max or 20.0 * max(1.0, ham.maximize(m, k, p).c_star)
    c = np.linspace(c_max / n, c_max, n)
    g = m.F(k, c) * p + m.u(c, k)
    i = int(np.argmax(g))
    lo, hi = c[max(i - 1, 0)], c[min(i + 1, n - 1)]
    cc = np.linspace(lo, hi, 20001)
    gg = m.F(k, cc) * p + m.u(cc, k)
    j = int(np.argmax(gg))
    return float(gg[j]), float(cc[j])


def test_rck_log_foc():
    assert ham.maximize(RCK_LOG, 2.0, 2.0).c_star == pytest.approx(0.5, rel=1e-15)


def test_rck_crra_foc():
    assert ham.maximize(RCK_CRRA, 2.0, 4.0).c_star == pytest.approx(0.5, rel=1e-15)


@pytest.mark.parametrize("p,c,branch", [(0.5, 2.0, "upper"), (1.5, 1.0, "kink"), (4.0, 0.5, "lower")])
def test_fiscal_three_branches(p, c, branch):
    r = ham.maximize(FISCAL, 4.0, p)
    assert r.c_star == pytest.approx(c, rel=1e-15)
    assert r.branch == branch
    assert r.foc_residual == 0.0


def test_ak_hamiltonian_values():
    assert ham.hamiltonian_value(AK, 1.0, 1.0) == pytest.approx(-0.96, abs=1e-14)
    assert ham.hamiltonian_value(AK, 1.0, math.e) == pytest.approx(0.04 * math.e - 1 - 1, abs=1e-14)


def test_ak_brute_force_confirms_maximiser():
    c = np.linspace(1e-5, 10.0, 1_000_000)
    g = (0.04 - c) * 1.0 + np.log(c)
    i = int(np.argmax(g))
    assert c[i] == pytest.approx(1.0, abs=2e-5)
    assert g[i] == pytest.approx(-0.96, abs=1e-9)


@pytest.mark.parametrize("m", MODELS, ids=lambda m: m.name)
@pytest.mark.parametrize("k,p", [(0.5, 0.3), (1.0, 1.0), (4.0, 2.5), (10.0, 0.1)])
def test_value_matches_dense_grid(m, k, p):
    r = ham.maximize(m, k, p)
    ref, _ = dense_sup(m, k, p)
    assert r.value >= ref - 1e-8 * (1 + abs(ref))
    assert r.value - ref <= 1e-8 * (1 + abs(ref))


def test_custom_line_search_matches_closed_form():
    # fiscal technology written as an opaque callable
    tech = Technology(
        "custom",
        fn=lambda k, c: math.sqrt(k) - c - max((0.5 * math.sqrt(k) - c) * 0.5, 0.0),
    )
    mc = ModelSpec(rho=0.05, utility=Utility("log"), technology=tech)
    for p in (0.3, 0.5, 1.2, 1.5, 1.9, 4.0, 9.0):
        a, b = ham.maximize(mc, 4.0, p), ham.maximize(FISCAL, 4.0, p)
        assert a.c_star == pytest.approx(b.c_star, rel=1e-7)
        assert a.value == pytest.approx(b.value, rel=1e-10, abs=1e-10)
        assert a.branch.startswith("line_search")


def test_nonpositive_p_rejected():
    with pytest.raises(ValueError):
        ham.maximize(RCK_LOG, 1.0, 0.0)
    with pytest.raises(ValueError):
        ham.maximize(RCK_LOG, 1.0, -1.0)


@settings(max_examples=100)
@given(k=st.floats(1e-2, 1e2), p=st.floats(1e-2, 1e2))
def test_result_invariants(k, p):
    for m in MODELS:
        r = ham.maximize(m, k, p)
        assert r.c_star > 0
        assert r.foc_residual <= 1e-8 * (1 + p)
        # value dominates probed consumptions
        cs = r.c_star * np.array([0.0, 0.25, 0.5, 0.9, 0.99, 1.01, 1.1, 2.0, 4.0])
        g = m.F(k, cs) * p + m.u(cs, k)
        assert np.all(g <= r.value + 1e-10 * (1 + abs(r.value)))


@settings(max_examples=100)
@given(k=st.floats(1e-2, 1e2), p1=st.floats(1e-2, 1e2), p2=st.floats(1e-2, 1e2), t=st.floats(0.05, 0.95))
def test_hamiltonian_convex_in_p(k, p1, p2, t):
    for m in MODELS:
        mid = ham.hamiltonian_value(m, k, t * p1 + (1 - t) * p2)
        chord = t * ham.hamiltonian_value(m, k, p1) + (1 - t) * ham.hamiltonian_value(m, k, p2)
        assert mid <= chord + 1e-10 * (1 + abs(chord))


@settings(max_examples=60)
@given(k=st.floats(0.1, 20.0), p=st.floats(0.05, 20.0))
def test_c_star_continuity_probe(k, p):
    for m in MODELS:
        c = ham.maximize(m, k, p).c_star
        gaps = []
        for h in (1e-2, 1e-4, 1e-6):
            c2 = ham.maximize(m, k * (1 + h), p * (1 + h)).c_star
            gaps.append(abs(c2 - c))
        assert gaps[-1] <= 1e-4 * (1 + c)
        assert gaps[-1] <= gaps[0] + 1e-12


def test_monotonicity_rck():
    rep = ham.c_star_monotonicity_check(RCK_LOG, 1.0, [0.5, 1, 2, 4])
    assert rep.passed
    assert rep.c_values == pytest.approx((2.0, 1.0, 0.5, 0.25))


def test_monotonicity_fiscal():
    rep = ham.c_star_monotonicity_check(FISCAL, 4.0, [0.5, 1.5, 4.0])
    assert rep.passed
    assert rep.c_values == pytest.approx((2.0, 1.0, 0.5))


def test_monotonicity_negative_control():
    mock = lambda m, k, p: p
    rep = ham.c_star_monotonicity_check(RCK_LOG, 1.0, [0.5, 1, 2, 4], maximizer=mock)
    assert not rep.passed
    assert rep.violations == (0, 1, 2)


def test_vectorised_policy_matches_scalar():
    rng = np.random.default_rng(3)
    k = np.exp(rng.uniform(-3, 3, 200))
    p = np.exp(rng.uniform(-3, 3, 200))
    for m in MODELS:
        H, c = ham.hamiltonian_vec(m, k, p)
        for i in range(0, 200, 17):
            r = ham.maximize(m, float(k[i]), float(p[i]))
            assert c[i] == pytest.approx(r.c_star, rel=1e-12)
            assert H[i] == pytest.approx(r.value, rel=1e-12, abs=1e-12)


def test_sup_at_zero_price_is_sup_u():
    m = model.counterexample()
    assert ham.hamiltonian_sup(m, 1.0, 0.0) == pytest.approx(0.0, abs=1e-15)
    assert ham.hamiltonian_sup(AK, 1.0, 0.0) == math.inf
