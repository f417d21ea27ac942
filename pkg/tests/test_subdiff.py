import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hjbgrowth import model
from hjbgrowth.errors import DomainError
from hjbgrowth.subdiff import (
    ConcaveFunction,
    SubdiffInterval,
    mean_value_point,
    partial_c,
    partial_k,
    subdiff_at,
    uhc_probe,
)

LOG = ConcaveFunction(math.log, domain=(0.0, math.inf))


def vee(x):
    return -abs(x - 1.0)


def test_kink_of_negative_abs():
    s = subdiff_at(vee, 1.0)
    assert s.lo == pytest.approx(-1.0, abs=1e-8)
    assert s.hi == pytest.approx(1.0, abs=1e-8)
    assert not s.is_singleton


def test_log_smooth_point():
    s = subdiff_at(LOG, 2.0)
    assert s.is_singleton
    assert s.lo == pytest.approx(0.5, rel=1e-8)
    assert s.hi == pytest.approx(0.5, rel=1e-8)


def test_fiscal_kink_in_k_reproduces_branch_slopes():
    m = model.fiscal(alpha=0.5, d=0.05, A=0.9, B=0.5)
    k0 = 2.0
    c0 = 0.9 * math.sqrt(k0)
    G = ConcaveFunction(lambda k: float(m.F(k, c0)), domain=(0.0, math.inf))
    s = subdiff_at(G, k0)
    fp = 0.5 / math.sqrt(k0)
    taxed = (1 - 0.9 * 0.5) * fp - 0.05
    untaxed = fp - 0.05
    assert s.lo == pytest.approx(taxed, rel=1e-7)
    assert s.hi == pytest.approx(untaxed, rel=1e-7)
    assert s.lo < s.hi
    # the analytic partials agree with the numerical interval
    pk = partial_k(m, k0, c0)
    assert (pk.lo, pk.hi) == pytest.approx((s.lo, s.hi), rel=1e-7)


def test_partial_c_at_fiscal_kink():
    m = model.fiscal(alpha=0.5, A=0.5, B=0.5)
    s = partial_c(m, 4.0, 1.0)
    assert (s.lo, s.hi) == (-1.0, -0.5)


def test_boundary_point_is_domain_error():
    with pytest.raises(DomainError):
        subdiff_at(LOG, 0.0)


def test_interval_rejects_inverted_bounds():
    with pytest.raises(ValueError):
        SubdiffInterval(1.0, 0.0)


@settings(max_examples=60)
@given(x=st.floats(0.05, 50.0))
def test_smooth_functions_give_singletons(x):
    for fn, d in ((math.log, lambda x: 1 / x), (math.sqrt, lambda x: 0.5 / math.sqrt(x)), (lambda x: -x * x, lambda x: -2 * x)):
        s = subdiff_at(ConcaveFunction(fn, domain=(0.0, math.inf)), x)
        assert s.is_singleton
        assert s.lo == pytest.approx(d(x), rel=1e-8, abs=1e-12)


@settings(max_examples=60)
@given(x=st.floats(-5.0, 5.0), y=st.floats(-5.0, 5.0))
def test_subdifferential_is_monotone(x, y):
    G = lambda z: -abs(z - 1.0) - 0.5 * abs(z + 2.0) - 0.1 * z * z
    if abs(x - y) < 1e-3:
        return
    x, y = min(x, y), max(x, y)
    sx, sy = subdiff_at(G, x), subdiff_at(G, y)
    # every p in dG(x) dominates every q in dG(y)
    assert sx.lo >= sy.hi - 1e-7


def test_mean_value_point_on_log():
    mv = mean_value_point(math.log, 1.0, math.e)
    assert mv.r == pytest.approx(1 / (math.e - 1), rel=1e-12)
    assert mv.k == pytest.approx(math.e - 1, rel=1e-8)


def test_mean_value_point_at_kink():
    mv = mean_value_point(vee, 0.0, 2.0)
    assert mv.r == 0.0
    assert mv.k == pytest.approx(1.0, abs=1e-9)
    assert mv.subdiff.contains(0.0)


def test_mean_value_rejects_nonconcave():
    with pytest.raises(ValueError, match="not concave"):
        mean_value_point(lambda x: x * x, 0.0, 1.0)


def test_mean_value_rejects_reversed_interval():
    with pytest.raises(ValueError):
        mean_value_point(math.log, 2.0, 1.0)


@settings(max_examples=40)
@given(k1=st.floats(0.1, 10.0), w=st.floats(0.01, 10.0), alpha=st.floats(0.1, 0.9))
def test_mean_value_secant_identity(k1, w, alpha):
    G = lambda x: x**alpha
    k2 = k1 + w
    mv = mean_value_point(G, k1, k2)
    dG = G(k2) - G(k1)
    assert abs(dG - mv.r * (k2 - k1)) <= 1e-10 * (1 + abs(dG))
    assert k1 < mv.k < k2
    assert mv.subdiff.contains(mv.r, tol=1e-6 * (1 + abs(mv.r)))


def test_uhc_log():
    for x in (0.5, 2.0, 10.0):
        assert uhc_probe(LOG, x, radius=1e-4 * x)


def test_uhc_at_kink_passes():
    assert uhc_probe(vee, 1.0, radius=0.01)


def test_uhc_near_kink_fails():
    # negative control: at 0.999 the subdifferential is {1}, but the ball reaches slopes -1
    assert not uhc_probe(vee, 0.999, radius=0.01)
