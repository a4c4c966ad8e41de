import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from morreylab.grid import Domain, GridFunction, TestFunctionSpec, sample_function
from morreylab.operators import (
    OperatorRequest,
    default_ladder,
    frac_integral,
    frac_maximal,
    iterated_commutator_integral,
    iterated_commutator_maximal,
    pointwise_domination_check,
    sublattice,
    sum_commutator_integral,
    sum_commutator_maximal,
)

from .tolerances import (
    I_CHI_CHI_AT_0,
    I_REL,
    INDICATOR_RATIO,
    INDICATOR_RATIO_REL,
    M_CHI_CHI_AT_0,
    M_REL,
)

COMMUTATORS = (
    iterated_commutator_maximal,
    iterated_commutator_integral,
    sum_commutator_maximal,
    sum_commutator_integral,
)


def sample(spec, dom):
    return sample_function(spec, dom)


def test_request_validation(chi_pair):
    dom, fs = chi_pair
    with pytest.raises(ValueError):
        OperatorRequest((), 1.0)
    with pytest.raises(ValueError):
        OperatorRequest(fs, 2.0)  # alpha must be < mn = 2
    with pytest.raises(ValueError):
        OperatorRequest(fs, 1.0, j=3)
    with pytest.raises(ValueError):
        OperatorRequest(fs, 1.0, radii=[dom.h / 4])
    other = sample(TestFunctionSpec.constant(1.0), Domain(1, 2.0, 128))
    with pytest.raises(ValueError):
        OperatorRequest((fs[0], other), 1.0)
    with pytest.raises(ValueError):
        OperatorRequest(fs, 1.0, bs=(fs[0],))
    # commutators need symbols, the sum commutator's components need j
    with pytest.raises(ValueError):
        iterated_commutator_maximal(OperatorRequest(fs, 1.0, points=[[0.0]]))


def test_default_points_and_ladder():
    dom = Domain(1, 2.0, 64)
    pts = sublattice(dom)
    assert pts.shape == (16, 1)
    assert pts[0, 0] == dom.axis_centers[2]
    t = default_ladder(dom)
    assert t[0] == dom.h and t[-1] == 4.0


def test_closed_form_indicator_values(chi_pair):
    _, fs = chi_pair
    req = OperatorRequest(fs, 1.0, points=[[0.0]])
    M = frac_maximal(req)
    assert M.values[0] == pytest.approx(M_CHI_CHI_AT_0, rel=M_REL)
    assert M.info["t_star"][0] == 1.0
    I = frac_integral(req).values[0]
    assert I == pytest.approx(I_CHI_CHI_AT_0, rel=I_REL)


def test_linear_maximal_closed_form():
    # m = 1, n = 1, alpha = 1/2: sup_t (2t)^{-1/2} 2 min(t, 1) = sqrt(2) at t = 1
    dom = Domain(1, 4.0, 256)
    chi = sample(TestFunctionSpec.indicator(0.0, 1.0), dom)
    out = frac_maximal(OperatorRequest((chi,), 0.5, points=[[0.0]]))
    assert out.values[0] == pytest.approx(math.sqrt(2.0), rel=1e-12)


def test_multilinearity_of_the_integral():
    dom = Domain(1, 2.0, 64)
    f = sample(TestFunctionSpec.gaussian(0.2, 0.4), dom)
    g = sample(TestFunctionSpec.power_bump(0.3, 1.0), dom)
    h = sample(TestFunctionSpec.indicator(-0.3, 0.5), dom)
    pts = [[0.0], [0.9], [-1.4]]
    lhs = frac_integral(OperatorRequest((f * 2.0 + g, h), 1.0, points=pts)).values
    a = frac_integral(OperatorRequest((f, h), 1.0, points=pts)).values
    b = frac_integral(OperatorRequest((g, h), 1.0, points=pts)).values
    assert np.allclose(lhs, 2 * a + b, rtol=1e-12, atol=0)


@given(c=st.floats(-20, 20).filter(lambda v: abs(v) > 1e-3), alpha=st.floats(0.1, 1.9))
def test_maximal_homogeneity(c, alpha):
    dom = Domain(1, 2.0, 32)
    f = sample(TestFunctionSpec.gaussian(0.0, 0.5), dom)
    g = sample(TestFunctionSpec.indicator(0.25, 0.5), dom)
    pts = [[0.0], [1.0]]
    base = frac_maximal(OperatorRequest((f, g), alpha, points=pts)).values
    scaled = frac_maximal(OperatorRequest((f * c, g), alpha, points=pts)).values
    assert np.allclose(scaled, abs(c) * base, rtol=1e-12, atol=0)


def test_translation_invariance():
    dom = Domain(1, 4.0, 128)
    k = 8
    shift = k * dom.h
    f = sample(TestFunctionSpec.gaussian(0.0, 0.3), dom)
    g = sample(TestFunctionSpec.gaussian(shift, 0.3), dom)
    a = frac_integral(OperatorRequest((f, f), 1.0, points=[[0.1]])).values[0]
    b = frac_integral(OperatorRequest((g, g), 1.0, points=[[0.1 + shift]])).values[0]
    # the gaussians are not exactly zero at the walls, so allow tail leakage
    assert b == pytest.approx(a, rel=1e-6)


def test_threads_do_not_change_results(chi_pair):
    _, fs = chi_pair
    b = sample(TestFunctionSpec.sign(0, 0.2), fs[0].domain)
    for op in (frac_maximal, frac_integral, iterated_commutator_integral):
        one = op(OperatorRequest(fs, 1.0, bs=(b, b), threads=1)).values
        many = op(OperatorRequest(fs, 1.0, bs=(b, b), threads=4)).values
        assert np.array_equal(one, many)


def test_constant_symbols_give_exact_zero(chi_pair):
    dom, fs = chi_pair
    b = sample(TestFunctionSpec.constant(-2.5), dom)
    pts = [[0.0], [0.6], [-1.7]]
    for op in COMMUTATORS:
        for j in (1, 2, None):
            vals = op(OperatorRequest(fs, 1.0, bs=(b, b), points=pts, j=j)).values
            assert np.all(vals == 0.0), op.__name__


def test_odd_symmetry_of_the_iterated_integral(chi_pair):
    dom, fs = chi_pair
    b = sample(TestFunctionSpec.coordinate(0), dom)
    v = iterated_commutator_integral(OperatorRequest(fs, 1.0, bs=(b, b), points=[[0.0]])).values[0]
    assert abs(v) < 1e-10


def test_negating_a_symbol_negates_the_sum_commutator(chi_pair):
    dom, fs = chi_pair
    b = sample(TestFunctionSpec.sign(0, 0.3), dom)
    pts = [[0.1], [-0.6], [1.2]]
    for j in (1, 2):
        bs = (b, b)
        nbs = tuple(-x if i == j - 1 else x for i, x in enumerate(bs))
        a = sum_commutator_integral(OperatorRequest(fs, 1.0, bs=bs, points=pts, j=j)).values
        c = sum_commutator_integral(OperatorRequest(fs, 1.0, bs=nbs, points=pts, j=j)).values
        assert np.array_equal(a, -c)
        # the maximal version takes absolute values, so it is unchanged
        a = sum_commutator_maximal(OperatorRequest(fs, 1.0, bs=bs, points=pts, j=j)).values
        c = sum_commutator_maximal(OperatorRequest(fs, 1.0, bs=nbs, points=pts, j=j)).values
        assert np.array_equal(a, c)


def test_full_sum_is_sum_of_components(chi_pair):
    dom, fs = chi_pair
    b1 = sample(TestFunctionSpec.sign(0, 0.3), dom)
    b2 = sample(TestFunctionSpec.coordinate(0), dom)
    pts = [[0.1], [-0.6]]
    req = OperatorRequest(fs, 1.0, bs=(b1, b2), points=pts)
    total = sum_commutator_integral(req).values
    parts = [sum_commutator_integral(req.replace(j=j)).values for j in (1, 2)]
    assert np.array_equal(total, parts[0] + parts[1])


def test_single_input_commutators_agree():
    dom = Domain(1, 2.0, 64)
    f = sample(TestFunctionSpec.gaussian(0.0, 0.5), dom)
    b = sample(TestFunctionSpec.sign(0, 0.1), dom)
    pts = [[0.0], [0.5]]
    req = OperatorRequest((f,), 0.5, bs=(b,), points=pts, j=1)
    assert np.array_equal(iterated_commutator_integral(req).values, sum_commutator_integral(req).values)
    assert np.array_equal(iterated_commutator_maximal(req).values, sum_commutator_maximal(req).values)


def test_domination_on_indicators(chi_pair):
    _, fs = chi_pair
    res = pointwise_domination_check(fs, 1.0, [[0.0]])
    assert res.value == pytest.approx(INDICATOR_RATIO, rel=INDICATOR_RATIO_REL)


def test_domination_skips_points_where_both_sides_vanish():
    dom = Domain(1, 2.0, 64)
    z = sample(TestFunctionSpec.zero(), dom)
    res = pointwise_domination_check((z, z), 1.0, [[0.0], [1.0]])
    assert res.value == 0.0 and res.info["skipped"] == 2


def test_full_grid_output_converts():
    dom = Domain(1, 1.0, 8)
    f = sample(TestFunctionSpec.constant(1.0), dom)
    out = frac_maximal(OperatorRequest((f,), 0.5, points=dom.centers))
    g = out.to_grid_function()
    assert isinstance(g, GridFunction) and g.domain == dom
    with pytest.raises(ValueError):
        frac_maximal(OperatorRequest((f,), 0.5, points=[[0.0]])).to_grid_function()
