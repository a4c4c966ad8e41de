import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from morreylab.conditions import (
    CONSISTENT,
    GROWTH,
    INCONCLUSIVE,
    ConditionInput,
    RadialProfile,
    char_quantity,
    commutator_char_quantity,
    condition_value,
    g_class_check,
    hardy_transform,
    supremal_transform,
    verdict_for,
)
from morreylab.grid import Domain, NonFiniteError, SamplingPlan, TestFunctionSpec, sample_function
from morreylab.spaces import PhiSpec
from morreylab.weights import ExponentConfig, WeightSpec, WeightVector

from .tolerances import FLAVOR_B_CLOSED_FORM, RATE_REL, SCALE_INVARIANCE

ONES = WeightVector((WeightSpec.constant(),) * 2)


def power_condition(cfg, eps, plan, **kw):
    phi1 = tuple(PhiSpec.power(-1 / p - eps) for p in cfg.ps)
    phi2 = PhiSpec.power(-1 / cfg.q - cfg.m * eps)
    return ConditionInput(phi1, phi2, ONES, cfg, plan, **kw)


def deep_plan():
    return SamplingPlan.dyadic([(0.0,)], 2.0**-4, 8, 2, eta_max=2.0**6)


# ---------------------------------------------------------------------------
# verdicts and transforms


def test_verdict_bands():
    assert verdict_for(1.0) == CONSISTENT
    assert verdict_for(1.2) == CONSISTENT
    assert verdict_for(1.3) == INCONCLUSIVE
    assert verdict_for(1.5) == GROWTH
    assert verdict_for(math.inf) == GROWTH


def test_radial_profiles():
    t = np.array([1.0, 2.0, 4.0])
    assert list(RadialProfile.power(-1)(t)) == [1.0, 0.5, 0.25]
    assert list(RadialProfile.constant(3.0)(t)) == [3.0, 3.0, 3.0]
    lp = RadialProfile.log_power(1, 0.0, r0=1.0)(t)
    assert lp == pytest.approx(1 + np.log(t), rel=1e-15)
    tab = RadialProfile.tabulated(t, [5.0, 6.0, 7.0])
    assert tab(t) == pytest.approx([5.0, 6.0, 7.0], rel=1e-14)


def test_hardy_examples():
    one, inv = RadialProfile.constant(1), RadialProfile.power(-1)
    assert hardy_transform(one, inv, 1.0, 0, 2.0**20) == pytest.approx(1.0, rel=0.01)
    assert hardy_transform(one, inv, 1.0, 1, 2.0**20) == pytest.approx(2.0, rel=0.01)
    assert hardy_transform(RadialProfile.constant(0), inv, 1.0, 0, 64.0) == 0.0
    # r^{-sigma}/sigma for other exponents and radii
    for sigma, r in ((0.5, 2.0), (2.0, 0.25)):
        v = hardy_transform(one, RadialProfile.power(-sigma), r, 0, r * 2.0**40)
        assert v == pytest.approx(r**-sigma / sigma, rel=0.01)


def test_hardy_rejects_non_finite_profiles():
    bad = RadialProfile.tabulated([1.0, 2.0], [1.0, math.inf])
    with pytest.raises(NonFiniteError):
        hardy_transform(bad, RadialProfile.constant(1), 1.0, 0, 2.0, per_octave=1)


@given(
    a=st.floats(0.0, 5.0),
    b=st.floats(0.0, 5.0),
    sigma=st.floats(0.2, 2.0),
    r=st.floats(0.1, 4.0),
)
def test_hardy_linearity_and_monotonicity(a, b, sigma, r):
    g1, g2 = RadialProfile.power(0.1), RadialProfile.constant(1)
    w = RadialProfile.power(-sigma)
    h1 = hardy_transform(g1, w, r, 0, r * 2**10)
    h2 = hardy_transform(g2, w, r, 0, r * 2**10)
    both = hardy_transform(
        RadialProfile.power(0.1, scale=a), w, r, 0, r * 2**10
    ) + hardy_transform(RadialProfile.constant(b), w, r, 0, r * 2**10)
    assert both == pytest.approx(a * h1 + b * h2, rel=1e-12, abs=1e-300)
    assert hardy_transform(g2, w, r, 0, r * 2**12) >= h2
    assert hardy_transform(g2, w, r, 1, r * 2**10) >= h2
    assert hardy_transform(g2, w, r, 2, r * 2**10) >= hardy_transform(g2, w, r, 1, r * 2**10)


def test_supremal_examples():
    s = supremal_transform(RadialProfile.power(0.5), RadialProfile.power(-1), 1.0, 64.0)
    assert s.value == 1.0 and s.witness == 1.0
    up = supremal_transform(RadialProfile.power(0.5), RadialProfile.constant(1), 1.0, 64.0)
    assert up.value == 8.0 and up.witness == 64.0
    assert supremal_transform(RadialProfile.constant(0), RadialProfile.power(-1), 1.0, 8.0).value == 0.0


# ---------------------------------------------------------------------------
# condition scanner


def test_condition_input_validation():
    cfg = ExponentConfig(1, (2.0, 2.0), (0.25, 0.25))
    plan = deep_plan()
    phi = (PhiSpec.power(-0.5),) * 2
    with pytest.raises(ValueError):
        ConditionInput(phi, PhiSpec.power(0.0), ONES, cfg, plan, flavor="C")
    with pytest.raises(ValueError):
        ConditionInput(phi, PhiSpec.power(0.0), ONES, cfg, plan, k=3)
    with pytest.raises(ValueError):
        ConditionInput(phi[:1], PhiSpec.power(0.0), ONES, cfg, plan)
    with pytest.raises(ValueError):
        ConditionInput(phi, None, ONES, cfg, plan)
    with pytest.raises(ValueError):
        ConditionInput(phi, None, ONES, cfg, plan, normalization="commutator-iterated")
    with pytest.raises(ValueError):
        ConditionInput(phi, None, ONES, cfg, plan, normalization="bogus")


def test_diagnostic_normalization_is_exactly_one():
    cfg = ExponentConfig(1, (2.0, 2.0), (0.45, 0.45))
    for flavor in "AB":
        for k in (0, 1, 2):
            inp = power_condition(cfg, 0.1, deep_plan(), normalization="diagnostic", flavor=flavor, k=k)
            res = condition_value(inp)
            assert res.value == 1.0
            assert all(row[-1] == 1.0 for row in res.rows)


def test_condition_rows_and_witness():
    cfg = ExponentConfig(1, (2.0, 2.0), (0.45, 0.45))
    plan = deep_plan()
    res = condition_value(power_condition(cfg, -0.1, plan))
    assert len(res.rows) == len(plan.radii)
    x, r, t_star, eta_star = res.witness
    assert r <= t_star <= plan.t_max and t_star <= eta_star <= plan.eta_max
    assert max(row[-1] for row in res.rows) == res.value


def test_negative_defect_diverges_at_the_outer_end():
    cfg = ExponentConfig(1, (2.0, 2.0), (0.45, 0.45))
    for flavor in "AB":
        res = condition_value(power_condition(cfg, -0.1, deep_plan(), flavor=flavor))
        assert res.verdict == GROWTH
        assert res.truncation["rate_per_octave"] == pytest.approx(2**0.1, rel=RATE_REL)


def test_positive_defect_stays_bounded():
    cfg = ExponentConfig(1, (2.0, 2.0), (0.45, 0.45))
    res = condition_value(power_condition(cfg, 0.1, deep_plan()))
    assert res.verdict == CONSISTENT and math.isfinite(res.value)


@pytest.mark.parametrize(
    "ps,alphas,eps",
    [((2.0, 2.0), (0.125, 0.125), 0.0), ((2.0, 2.0), (0.125, 0.125), -0.05), ((4.0, 2.0), (0.2, 0.1), 0.0)],
)
def test_flavor_b_matches_the_closed_form(ps, alphas, eps):
    # for eps <= 0 the essinf sits at eta = t, the inner ratio is
    # 2^alpha t^{-s} with s = 1/q + m eps, and the integral is elementary
    cfg = ExponentConfig(1, ps, alphas)
    plan = SamplingPlan.dyadic([(0.0,)], 2.0**-4, 6, 2, eta_max=2.0**4)
    res = condition_value(power_condition(cfg, eps, plan, flavor="B"))
    s = 1 / cfg.q + cfg.m * eps
    T = plan.t_max
    for _, r, _, _, v in res.rows:
        if r >= T:
            continue
        expect = 2**cfg.alpha * (1 - (r / T) ** s) / s
        assert v == pytest.approx(expect, rel=FLAVOR_B_CLOSED_FORM)
    a = condition_value(power_condition(cfg, eps, plan, flavor="A"))
    assert a.value == pytest.approx(2**cfg.alpha, rel=1e-12)


@given(c1=st.floats(0.01, 100.0), c2=st.floats(0.01, 100.0))
def test_condition_scale_invariance(c1, c2):
    cfg = ExponentConfig(1, (2.0, 2.0), (0.25, 0.25))
    plan = SamplingPlan.dyadic([(0.0,)], 2.0**-2, 4, 1, eta_max=2.0**3)
    base = power_condition(cfg, -0.05, plan)
    scaled = base.replace(
        phi1s=(base.phi1s[0].scaled(c1), base.phi1s[1].scaled(c2)),
        phi2=base.phi2.scaled(c1 * c2),
    )
    assert condition_value(scaled).value == pytest.approx(condition_value(base).value, rel=SCALE_INVARIANCE)
    phis = [PhiSpec.power(-0.5), PhiSpec.power(-0.25)]
    a = char_quantity(phis, PhiSpec.power(0.35), 1.0, plan)
    b = char_quantity([phis[0].scaled(c1), phis[1].scaled(c2)], PhiSpec.power(0.35).scaled(c1 * c2), 1.0, plan)
    assert b.value == pytest.approx(a.value, rel=SCALE_INVARIANCE)


def test_non_finite_condition_aborts_with_witness():
    cfg = ExponentConfig(1, (2.0, 2.0), (0.25, 0.25))
    plan = SamplingPlan.dyadic([(0.0,)], 0.25, 2, 1)
    dom = Domain(1, 4.0, 64)
    phi = PhiSpec.from_callable(lambda x, r: math.inf if r > 0.3 else 1.0)
    inp = ConditionInput((phi, phi), PhiSpec.power(0.0), ONES, cfg, plan, dom=dom)
    with pytest.raises(NonFiniteError) as exc:
        condition_value(inp)
    x, r, t = exc.value.witness
    assert x == (0.0,)


# ---------------------------------------------------------------------------
# characterization quantities


def test_char_quantity_cancellation_is_exact():
    plan = deep_plan().with_centers([(0.0,), (1.0,)])
    c = char_quantity([PhiSpec.power(-0.5), PhiSpec.power(-0.25)], PhiSpec.power(0.25), 1.0, plan)
    assert c.value == 1.0 and c.growth == 1.0 and c.verdict == CONSISTENT


@pytest.mark.parametrize("defect", [0.1, -0.1])
def test_char_quantity_defects_grow_at_the_right_end(defect):
    plan = deep_plan()
    c = char_quantity([PhiSpec.power(-0.5), PhiSpec.power(-0.25)], PhiSpec.power(0.25 + defect), 1.0, plan)
    assert c.verdict == GROWTH
    assert c.rate_per_octave == pytest.approx(2**0.1, rel=RATE_REL)
    if defect > 0:
        assert c.growth_low > 1.5 and c.growth_high == 1.0
        assert c.value == pytest.approx(plan.r_min**-0.1, rel=1e-12)
    else:
        assert c.growth_high > 1.5 and c.growth_low == 1.0
        assert c.value == pytest.approx(plan.r_max**0.1, rel=1e-12)


def test_char_quantity_with_mass_phi_uses_the_domain():
    dom = Domain(1, 8.0, 256)
    plan = SamplingPlan.dyadic([(0.0,)], 2 * dom.h, 4, 1)
    leb = PhiSpec.lebesgue(2.0, WeightSpec.constant())
    c = char_quantity([leb, leb], PhiSpec.power(0.0), 1.0, plan, dom)
    # r (2r)^{-1/2} (2r)^{-1/2} = 1/2 on every ball
    assert c.value == pytest.approx(0.5, rel=1e-12)


def test_commutator_char_quantity():
    vals = []
    for N in (128, 256):
        dom = Domain(1, 4.0, N)
        b = sample_function(TestFunctionSpec.sign(0, 0.0), dom)
        plan = SamplingPlan.dyadic([(0.0,), (0.5,)], 0.125, 4, 1)
        res = commutator_char_quantity(
            (b, b), WeightSpec.constant(), 1.0, [PhiSpec.power(-0.5), PhiSpec.power(-0.25)],
            PhiSpec.power(0.25), 1.0, plan,
        )
        assert math.isfinite(res.value) and res.info["plain_char"] == 1.0
        vals.append(res.value)
    assert vals[1] == pytest.approx(vals[0], rel=0.10)
    with pytest.raises(ValueError):
        commutator_char_quantity((b, b), WeightSpec.constant(), 1.0, [PhiSpec.power(0.0)] * 2,
                                 PhiSpec.power(0.0), 1.0, plan, mode="sum")


# ---------------------------------------------------------------------------
# G class


def test_g_class_power_phi():
    dom = Domain(1, 16.0, 1024)
    w = WeightSpec.constant()
    plan = SamplingPlan(((0.0,),), tuple(2.0**k for k in range(-4, 5)))
    good = g_class_check(PhiSpec.power(-0.7), w, 2.0, plan, dom)
    assert good.c1 == 1.0 and good.verdict == "PASS"
    assert good.c2 == pytest.approx(1.0, rel=0.02)
    # beta < n/p: condition (2) grows as (r0 / r_min)^{n/p - beta}
    weak = g_class_check(PhiSpec.power(-0.25), w, 2.0, plan, dom)
    assert weak.c1 == 1.0
    assert weak.c2 == pytest.approx((2.0**8) ** 0.25, rel=0.02)


def test_g_class_constant_phi_fails_on_deep_ladders():
    dom = Domain(1, 16.0, 1024)
    plan = SamplingPlan(((0.0,),), tuple(2.0**k for k in range(-4, 5)))
    g = g_class_check(PhiSpec.power(0.0), WeightSpec.constant(), 1.0, plan, dom)
    assert g.c2 == pytest.approx(2.0**8, rel=0.02) and g.verdict == "FAIL"


def test_g_class_lebesgue_phi_is_exact():
    dom = Domain(1, 4.0, 64)
    w = WeightSpec.power(0.3)
    plan = SamplingPlan.dyadic([(0.0,), (0.5,)], 2 * dom.h, 3, 1)
    g = g_class_check(PhiSpec.lebesgue(2.0, w.pow(2.0)), w, 2.0, plan, dom)
    assert g.c2 == 1.0
