import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjbgrowth import model
from hjbgrowth.errors import ConvergenceError
from hjbgrowth.hjb import (
    GridSpec,
    SolverSpec,
    ValueFunctionGrid,
    _H_at,
    candidate_check,
    classical_residual,
    differentiability_scan,
    dp_oracle,
    kink_report,
    secants,
    solve,
    upwind_policy,
    viscosity_certify,
)
from hjbgrowth.model import ModelSpec

from conftest import ak_exact, middle, rel_err


def test_ak_matches_closed_form(ak_grid):
    V = ak_grid
    err = rel_err(V.values, ak_exact(V.nodes))[middle(V.n)]
    assert err.max() <= 1e-3
    # the monotone scheme approaches from below
    assert np.all(V.values <= ak_exact(V.nodes) + 1e-12)


def test_ak_refinement_first_order(ak_model):
    errs = []
    for n in (500, 1000, 2000):
        V = solve(ak_model, GridSpec(0.1, 10.0, n))
        # away from the state-constrained boundary layer at k_min
        sel = (V.nodes >= 1.0) & (V.nodes <= 9.0)
        errs.append(rel_err(V.values, ak_exact(V.nodes))[sel].max())
    assert errs[0] / errs[1] >= 1.5
    assert errs[1] / errs[2] >= 1.5


def test_solutions_increasing_and_concave(solved):
    for name, V in solved.items():
        assert V.is_increasing(), name
        assert V.is_concave(), name
        inner = slice(1, V.n - 1)
        assert np.all(V.slope_plus[inner] <= V.slope_minus[inner]), name


def test_rck_residual_certified(solved, bundled):
    rep = viscosity_certify(solved["rck"], bundled["rck"])
    assert rep.passed
    assert np.all(rep.residual[1:-1] >= 0)


def test_viscosity_report_perturbed_node_spikes(ak_grid, ak_model):
    V = ak_grid
    base = viscosity_certify(V, ak_model)
    i = V.n // 2
    vals = V.values.copy()
    vals[i] += 1.0
    W = ValueFunctionGrid.from_values(V.nodes, vals, ak_model)
    with pytest.raises(ValueError):
        viscosity_certify(W, ak_model)
    rep = viscosity_certify(W, ak_model, strict=False)
    spike = np.nanargmax(rep.literal)
    assert abs(spike - i) <= 1
    assert rep.literal[i] > 1e3 * np.nanmax(base.literal)
    far = np.r_[1 : i - 2, i + 3 : V.n - 1]
    assert np.nanmax(rep.literal[far]) <= 10 * np.nanmax(base.literal)


def test_singleton_slopes_literal_equals_certified(ak_model):
    """With a singleton subdifferential the classical and viscosity residuals are the same number."""
    k = np.geomspace(0.2, 8.0, 64)
    V = lambda x: float(ak_exact(x))
    dV = lambda x: 1.0 / (0.05 * x)
    perturbed = lambda x: V(x) + 0.3 * math.sin(x)
    dP = lambda x: dV(x) + 0.3 * math.cos(x)
    for fn, d in ((V, dV), (perturbed, dP)):
        vals = np.array([fn(x) for x in k])
        slopes = np.array([d(x) for x in k])
        grid = ValueFunctionGrid(k, vals, slopes, slopes, slopes * np.nan, slopes * np.nan, np.full(k.size, "?"))
        rep = viscosity_certify(grid, ak_model, strict=False)
        classical = classical_residual(ak_model, k, fn, d)
        assert np.array_equal(rep.literal[1:-1], classical[1:-1])


def scheme_operator(m, k, v):
    """rho V_i - min over [p_F, p_B] of H(k_i, p), the monotone upwind residual."""
    sp, sm = secants(k, v)
    c, s, mode = upwind_policy(m, k, sp, sm)
    HF = np.where(np.isnan(sp), np.nan, _H_at(m, k, np.nan_to_num(sp, nan=1.0)))
    HB = np.where(np.isnan(sm), np.nan, _H_at(m, k, np.nan_to_num(sm, nan=1.0)))
    Hs = np.where(mode == "F", HF, np.where(mode == "B", HB, m.utility(c, k)))
    return m.rho * v - Hs


@pytest.mark.parametrize("name", ["ak_log", "rck", "fiscal_d0", "fiscal_d"])
def test_scheme_monotone_in_neighbours(name, solved, bundled):
    m, V = bundled[name], solved[name]
    rng = np.random.default_rng(11)
    k, v = V.nodes, V.values
    G0 = scheme_operator(m, k, v)
    for i in rng.integers(2, V.n - 2, 60):
        for j in (i - 1, i + 1):
            bump = rng.uniform(1e-8, 1e-5) * (1 + abs(v[j]))
            w = v.copy()
            w[j] += bump
            G1 = scheme_operator(m, k, w)
            # raising a neighbour never raises the residual at i, so the update never falls
            assert G1[i] <= G0[i] + 1e-9 * (1 + abs(G0[i]))


def test_counterexample_split_verdict():
    m = model.counterexample()
    nodes = np.geomspace(1.0, 400.0, 500)
    rep = candidate_check(m, lambda k: 0.0, lambda k: 0.0, nodes)
    assert rep.classical_pass
    assert rep.max_classical_residual == 0.0
    assert not rep.increasing
    assert not rep.in_class
    assert rep.reason.startswith("fails increasing")


def test_counterexample_solver_differs_from_zero():
    m = model.counterexample()
    V = solve(m, GridSpec(1.0, 400.0, 500))
    assert V.is_increasing() and V.is_concave()
    assert np.max(np.abs(V.values)) > 0.5
    assert np.all(V.values < 0)


def test_fiscal_d_kink_flag_reported(solved, bundled):
    m = bundled["fiscal_d"]
    k_star = model.fiscal_kink_capital(m)
    rep = kink_report(solved["fiscal_d"], m, k_star)
    assert rep["node"] == pytest.approx(k_star, rel=1e-14)
    assert isinstance(rep["kink_flag"], bool)
    assert rep["kink_possible"]
    lo, hi = rep["drift_set"]
    assert lo <= hi


def test_scan_rck_empty(solved, bundled):
    assert differentiability_scan(solved["rck"], bundled["rck"]) == []


def test_scan_fiscal_d0_empty(solved, bundled):
    assert differentiability_scan(solved["fiscal_d0"], bundled["fiscal_d0"]) == []


def test_scan_fiscal_d_single_candidate_near_kink(solved, bundled):
    m = bundled["fiscal_d"]
    out = differentiability_scan(solved["fiscal_d"], m)
    k_star = model.fiscal_kink_capital(m)
    assert len(out) <= 1
    for cand in out:
        assert cand.classification == "candidate"
        assert cand.k == pytest.approx(k_star, rel=1e-2)


def test_dp_oracle_ak_closed_form(ak_model):
    g = GridSpec(0.5, 2.0, 100)
    res = dp_oracle(ak_model, g, dt=1e-3)
    err = rel_err(res.values, ak_exact(res.nodes)).max()
    assert err <= 1e-2
    coarse = dp_oracle(ak_model, g, dt=2e-3)
    assert rel_err(coarse.values, ak_exact(coarse.nodes)).max() > err


def test_dp_oracle_matches_solver(ak_model):
    g = GridSpec(0.5, 2.0, 100)
    V = solve(ak_model, g)
    res = dp_oracle(ak_model, g, dt=1e-3)
    assert rel_err(res.values, V.values).max() <= 1e-2


def test_rejects_nonpositive_rho():
    base = model.ak_log()
    m = ModelSpec(rho=0.0, utility=base.utility, technology=base.technology)
    with pytest.raises(ValueError, match="discount rate"):
        solve(m, GridSpec(0.1, 10.0, 100))


def test_nonconvergence_carries_history(ak_model):
    with pytest.raises(ConvergenceError) as exc:
        solve(ak_model, GridSpec(0.1, 10.0, 400), SolverSpec(tol=1e-14, max_iter=2))
    assert len(exc.value.history) == 2
    assert exc.value.last_values.shape == (400,)


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(1.0, 0.5, 100)
    with pytest.raises(ValueError):
        GridSpec(0.1, 1.0, 8)
    g = GridSpec(0.1, 10.0, 100, pinned=(2.5,))
    assert 2.5 in g.nodes()


def test_metadata_recorded(ak_grid):
    md = ak_grid.metadata
    assert md["iterations"] >= 1
    assert md["final_update"] <= md["tol"] * (1 + np.max(np.abs(ak_grid.values)))
    assert md["grid"]["n"] == 2000


@settings(max_examples=10, deadline=None)
@given(alpha=st.floats(0.2, 0.6), d=st.floats(0.0, 0.1), rho=st.floats(0.02, 0.1))
def test_random_rck_solutions_certified(alpha, d, rho):
    m = model.rck(alpha=alpha, d=d, rho=rho)
    kss = m.steady_state() or 10.0
    V = solve(m, GridSpec(0.05 * kss, 5.0 * kss, 300))
    rep = viscosity_certify(V, m)
    assert rep.passed


def test_central_differences_break_monotonicity(solved, bundled):
    # negative control: the centred slope lets a raised left neighbour increase the residual
    m, V = bundled["rck"], solved["rck"]
    k, v = V.nodes, V.values

    def central(w):
        sp, sm = secants(k, w)
        p = 0.5 * (sp + sm)
        out = np.full(k.size, np.nan)
        out[1:-1] = m.rho * w[1:-1] - _H_at(m, k[1:-1], p[1:-1])
        return out

    i = int(np.argmin(np.abs(k - 1.0)))  # positive drift below the steady state
    w = v.copy()
    w[i - 1] += 1e-6
    assert central(w)[i] > central(v)[i]
