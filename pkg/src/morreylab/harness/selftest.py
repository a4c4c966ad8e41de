"""Registry of closed-form and definitional checks run by ``morreylab selftest``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from ..conditions import (
    GROWTH,
    ConditionInput,
    RadialProfile,
    char_quantity,
    commutator_char_quantity,
    condition_value,
    g_class_check,
    hardy_transform,
    supremal_transform,
)
from ..grid import (
    Ball,
    Domain,
    SamplingPlan,
    TestFunctionSpec,
    integrate,
    sample_function,
)
from ..operators import (
    OperatorRequest,
    frac_integral,
    frac_maximal,
    iterated_commutator_integral,
    iterated_commutator_maximal,
    sum_commutator_integral,
    sum_commutator_maximal,
)
from ..spaces import PhiSpec, lp_norm, morrey_norm, weak_lp_quasinorm, weak_morrey_norm
from ..weights import ExponentConfig, WeightSpec, WeightVector, ap_constant


@dataclass(frozen=True)
class Check:
    name: str
    tag: str
    fn: Callable[[], str]


REGISTRY: list[Check] = []


def check(name: str, tag: str = "TRIVIAL"):
    def deco(fn):
        REGISTRY.append(Check(name, tag, fn))
        return fn

    return deco


def _close(a: float, b: float, rel: float) -> bool:
    return abs(a - b) <= rel * abs(b)


def _indicator_pair(N: int):
    dom = Domain(1, 4.0, N)
    chi = sample_function(TestFunctionSpec.indicator((0.0,), 1.0), dom)
    return dom, (chi, chi)


# ---------------------------------------------------------------------------
# grid and spaces


@check("integrate(chi_B) over B equals |B| to first order", "DERIVED")
def _():
    dom = Domain(1, 4.0, 256)
    chi = sample_function(TestFunctionSpec.indicator((0.0,), 1.0), dom)
    v = integrate(chi, Ball((0.0,), 1.0))
    assert _close(v, 2.0, 2 * dom.h), v
    return f"{v!r}"


@check("Chebyshev: weak L^p <= L^p and weak Morrey <= Morrey")
def _():
    dom = Domain(1, 4.0, 128)
    f = sample_function(TestFunctionSpec.power_bump(0.3, 1.0), dom)
    B = Ball((0.0,), 2.0)
    assert weak_lp_quasinorm(f, 2, None, B) <= lp_norm(f, 2, None, B)
    plan = SamplingPlan.dyadic([(0.0,), (0.5,)], 2 * dom.h, 4, 1)
    phi = PhiSpec.power(-0.5)
    assert weak_morrey_norm(f, 2, phi, None, plan).value <= morrey_norm(f, 2, phi, None, plan).value
    return "ok"


@check("A_p constant of w = 1 is exactly 1")
def _():
    dom = Domain(1, 4.0, 64)
    plan = SamplingPlan.dyadic([(0.0,), (0.5,)], 2 * dom.h, 4, 1)
    v = ap_constant(WeightSpec.constant(), 2.0, plan, dom).value
    assert v == 1.0, v
    return f"{v!r}"


@check("A_2 constant of |x|^{1/2} on centered balls is 4/3", "DERIVED")
def _():
    dom = Domain(1, 4.0, 128)
    plan = SamplingPlan.dyadic([(0.0,)], 2 * dom.h, 5, 1)
    v = ap_constant(WeightSpec.power(0.5), 2.0, plan, dom).value
    assert _close(v, 4 / 3, 0.02), v
    return f"{v!r}"


# ---------------------------------------------------------------------------
# operators


@check("frac_maximal(chi, chi)(0) = 2 (m=2, n=1, alpha=1)", "DERIVED")
def _():
    _, fs = _indicator_pair(256)
    v = frac_maximal(OperatorRequest(fs, 1.0, points=[[0.0]])).values[0]
    assert _close(v, 2.0, 0.03), v
    return f"{v!r}"


@check("frac_integral(chi, chi)(0) = 8 ln 2 (m=2, n=1, alpha=1)", "DERIVED")
def _():
    _, fs = _indicator_pair(256)
    v = frac_integral(OperatorRequest(fs, 1.0, points=[[0.0]])).values[0]
    assert _close(v, 8 * math.log(2), 0.02), v
    return f"{v!r}"


@check("constant symbols annihilate all four commutators")
def _():
    dom, fs = _indicator_pair(64)
    b = sample_function(TestFunctionSpec.constant(3.0), dom)
    pts = [[0.0], [0.75], [-1.5]]
    for op in (iterated_commutator_maximal, iterated_commutator_integral,
               sum_commutator_maximal, sum_commutator_integral):
        req = OperatorRequest(fs, 1.0, bs=(b, b), points=pts, j=1)
        vals = op(req).values
        assert np.all(vals == 0.0), (op.__name__, vals)
    return "ok"


@check("odd symmetry: iterated commutator integral with b = x vanishes at 0", "DERIVED")
def _():
    dom, fs = _indicator_pair(128)
    b = sample_function(TestFunctionSpec.coordinate(0), dom)
    v = iterated_commutator_integral(
        OperatorRequest(fs, 1.0, bs=(b, b), points=[[0.0]])
    ).values[0]
    assert abs(v) < 1e-10, v
    return f"{v!r}"


@check("negating b_j negates the sum commutator exactly")
def _():
    dom, fs = _indicator_pair(64)
    b = sample_function(TestFunctionSpec.sign(0, 0.3), dom)
    nb = -b
    pts = [[0.1], [-0.6]]
    a = sum_commutator_integral(OperatorRequest(fs, 1.0, bs=(b, b), points=pts, j=2)).values
    c = sum_commutator_integral(OperatorRequest(fs, 1.0, bs=(b, nb), points=pts, j=2)).values
    assert np.array_equal(a, -c), (a, c)
    return "ok"


# ---------------------------------------------------------------------------
# conditions


@check("hardy_transform of t^{-1} on [1, 2^20] is 1", "DERIVED")
def _():
    v = hardy_transform(RadialProfile.constant(1), RadialProfile.power(-1), 1.0, 0, 2.0**20)
    assert _close(v, 1.0, 0.01), v
    return f"{v!r}"


@check("log-Hardy transform with k=1 of t^{-1} is 2", "DERIVED")
def _():
    v = hardy_transform(RadialProfile.constant(1), RadialProfile.power(-1), 1.0, 1, 2.0**20)
    assert _close(v, 2.0, 0.01), v
    return f"{v!r}"


@check("hardy_transform of g = 0 is 0")
def _():
    v = hardy_transform(RadialProfile.constant(0), RadialProfile.power(-1), 1.0, 0, 64.0)
    assert v == 0.0, v
    return "ok"


@check("supremal_transform of t^{1/2} * t^{-1} is attained at t = r", "DERIVED")
def _():
    s = supremal_transform(RadialProfile.power(0.5), RadialProfile.power(-1), 1.0, 64.0)
    assert s.value == 1.0 and s.witness == 1.0, s
    return "ok"


def _power_condition(eps: float, **kw) -> ConditionInput:
    cfg = ExponentConfig(1, (2.0, 2.0), (0.45, 0.45))
    plan = SamplingPlan.dyadic([(0.0,)], 2.0**-4, 8, 2, eta_max=2.0**6)
    phi1 = tuple(PhiSpec.power(-1 / p - eps) for p in cfg.ps)
    phi2 = PhiSpec.power(-1 / cfg.q - 2 * eps)
    wv = WeightVector((WeightSpec.constant(),) * 2)
    return ConditionInput(phi1, phi2, wv, cfg, plan, **kw)


@check("condition in diagnostic normalization is exactly 1")
def _():
    v = condition_value(_power_condition(0.1, normalization="diagnostic")).value
    assert v == 1.0, v
    return "ok"


@check("condition with eps = -0.1 shows truncation growth", "DERIVED")
def _():
    r = condition_value(_power_condition(-0.1))
    assert r.verdict == GROWTH, r.truncation
    return f"growth={r.truncation['depth_growth']!r}"


@check("char_quantity with cancelling exponents is exactly 1")
def _():
    plan = SamplingPlan.dyadic([(0.0,)], 2.0**-4, 8, 2)
    c = char_quantity([PhiSpec.power(-0.5), PhiSpec.power(-0.25)], PhiSpec.power(0.25), 1.0, plan)
    assert c.value == 1.0, c.value
    return "ok"


@check("char_quantity with a +0.1 defect grows at 2^{0.1} per octave", "DERIVED")
def _():
    plan = SamplingPlan.dyadic([(0.0,)], 2.0**-4, 8, 2)
    c = char_quantity([PhiSpec.power(-0.5), PhiSpec.power(-0.25)], PhiSpec.power(0.35), 1.0, plan)
    assert c.verdict == GROWTH and _close(c.rate_per_octave, 2**0.1, 0.2), c
    return f"rate={c.rate_per_octave!r}"


@check("commutator char quantity: iterated and sum modes agree for m = 1")
def _():
    dom = Domain(1, 4.0, 64)
    b = sample_function(TestFunctionSpec.sign(0, 0.3), dom)
    plan = SamplingPlan.dyadic([(0.0,)], 2 * dom.h, 3, 1)
    args = ((b,), WeightSpec.constant(), 2.0, [PhiSpec.power(-0.5)], PhiSpec.power(0.0), 0.5, plan)
    a = commutator_char_quantity(*args, mode="iterated")
    c = commutator_char_quantity(*args, mode="sum", j=1)
    assert a.value == c.value, (a.value, c.value)
    return "ok"


@check("commutator char quantity rejects constant symbols")
def _():
    dom = Domain(1, 4.0, 64)
    b = sample_function(TestFunctionSpec.constant(1.0), dom)
    plan = SamplingPlan.dyadic([(0.0,)], 2 * dom.h, 3, 1)
    try:
        commutator_char_quantity(
            (b, b), WeightSpec.constant(), 2.0, [PhiSpec.power(-0.5)] * 2,
            PhiSpec.power(0.0), 1.0, plan,
        )
    except ValueError:
        return "ok"
    raise AssertionError("constant symbol accepted")


@check("G class: lebesgue phi gives condition (2) ratio exactly 1")
def _():
    dom = Domain(1, 4.0, 64)
    w = WeightSpec.constant()
    plan = SamplingPlan.dyadic([(0.0,), (0.5,)], 2 * dom.h, 3, 1)
    g = g_class_check(PhiSpec.lebesgue(2.0, w), w, 2.0, plan, dom)
    assert g.c2 == 1.0, g.c2
    return "ok"


@check("G class: r^{-beta} has condition (1) constant exactly 1")
def _():
    dom = Domain(1, 4.0, 64)
    w = WeightSpec.constant()
    plan = SamplingPlan.dyadic([(0.0,), (0.5,)], 2 * dom.h, 3, 1)
    g = g_class_check(PhiSpec.power(-0.7), w, 2.0, plan, dom)
    assert g.c1 == 1.0, g.c1
    return "ok"


def run_all(stream=None) -> list:
    """Run every check; returns ``(name, ok, detail)`` triples."""
    out = []
    for c in REGISTRY:
        try:
            detail = c.fn()
            ok = True
        except Exception as exc:  # report, never abort the run
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        out.append((c.name, ok, detail))
        if stream is not None:
            print(f"[{'PASS' if ok else 'FAIL'}] ({c.tag}) {c.name}: {detail}", file=stream)
    return out
