"""Experiment specs, results and the probes that run them."""

from __future__ import annotations

import dataclasses
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..conditions import (
    CONSISTENT,
    GROWTH,
    INCONCLUSIVE,
    ConditionInput,
    char_quantity,
    commutator_char_quantity,
    condition_value,
)
from ..grid import (
    Domain,
    SamplingPlan,
    TestFunctionSpec,
    offset_centers,
    sample_function,
)
from ..operators import (
    OperatorRequest,
    frac_integral,
    frac_maximal,
    iterated_commutator_integral,
    iterated_commutator_maximal,
    sublattice,
    sum_commutator_integral,
    sum_commutator_maximal,
)
from ..spaces import PhiSpec, bmo_norm, morrey_norm, weak_morrey_norm
from ..weights import (
    ExponentConfig,
    WeightVector,
    a1_constant,
    ap_constant,
    apq_constant,
    doubling_ratio,
    norm_equivalence_ratio,
)
from .config import (
    OPERATORS,
    PROBES,
    ConfigError,
    RawConfig,
    build_exponents,
    build_function,
    build_phi,
    build_weight,
)

FLAT_BAND = 4.0
GROWTH_BAND = 1.5


@dataclass(frozen=True, eq=False)
class ExperimentSpec:
    """Everything one probe run needs. ``echo`` is the provenance dict."""

    n: int
    L: float
    N: int
    cfg: ExponentConfig
    weights: WeightVector
    phi1s: tuple
    phi2: PhiSpec
    symbols: tuple | None = None
    operator: str = "maximal"
    base: str = "maximal"
    j: int | None = None
    probe: str = "boundedness"
    # condition functional
    flavor: str = "A"
    k: int = 0
    normalization: str = "plain"
    # sampling plan
    plan_centers: str = "offsets"
    plan_spread: float = 0.5
    plan_count: int = 8
    plan_r_min: float | None = None
    plan_octaves: int | None = None
    plan_per_octave: int = 2
    t_max: float | None = None
    eta_max: float | None = None
    outer_per_octave: int = 8
    # test family
    family_centers: int = 3
    family_spread: float | None = None
    family_r_min: float | None = None
    family_octaves: int = 5
    family_per_octave: int = 1
    family_extras: bool = True
    zero_member: bool = False
    inputs: tuple = ()
    eval_stride: int = 1
    jitter: float = 0.0
    # refinement
    levels: int = 3
    refine_probe: str = "boundedness"
    seed: int = 0
    threads: int = 1
    echo: dict = field(default_factory=dict)

    def __post_init__(self):
        m = self.cfg.m
        if len(self.weights) != m or len(self.phi1s) != m:
            raise ValueError(f"m={m} must match the weights and phi1 counts")
        if self.operator not in OPERATORS:
            raise ValueError(f"unknown operator {self.operator!r}")
        if self.base not in ("maximal", "integral"):
            raise ValueError(f"commutator base must be maximal or integral, got {self.base!r}")
        if self.probe not in PROBES:
            raise ValueError(f"unknown probe {self.probe!r}")
        if self.operator.startswith("commutator"):
            if self.symbols is None or len(self.symbols) != m:
                raise ValueError(f"commutator operator needs {m} symbols")
        if self.operator == "commutator-sum" and self.j is None:
            raise ValueError("commutator-sum needs j")
        if self.inputs and len(self.inputs) != m:
            raise ValueError(f"need {m} eval inputs, got {len(self.inputs)}")
        self.plan(self.domain()).check(self.domain())

    def replace(self, **kw) -> "ExperimentSpec":
        return dataclasses.replace(self, **kw)

    @property
    def m(self) -> int:
        return self.cfg.m

    def domain(self) -> Domain:
        return Domain(self.n, self.L, self.N)

    def plan(self, dom: Domain) -> SamplingPlan:
        if self.plan_centers == "origin":
            centers = ((0.0,) * self.n,)
        else:
            centers = offset_centers(self.n, self.plan_spread * self.L, self.plan_count)
        r_min = self.plan_r_min or 2 * dom.h
        octaves = self.plan_octaves or max(1, int(math.floor(math.log2(self.L / r_min))))
        return SamplingPlan.dyadic(
            centers,
            r_min,
            octaves,
            self.plan_per_octave,
            self.t_max,
            self.eta_max,
            self.outer_per_octave,
        )

    def family_radii(self, dom: Domain) -> np.ndarray:
        r0 = self.family_r_min or 4 * dom.h
        k = np.arange(self.family_octaves * self.family_per_octave + 1)
        return r0 * 2.0 ** (k / self.family_per_octave)

    def family(self, dom: Domain) -> list:
        """Members: tuples of m TestFunctionSpecs, with a label each."""
        rng = np.random.default_rng(self.seed)
        spread = self.family_spread if self.family_spread is not None else self.L / 8
        offs = [0.0] + [s * spread * k for k in range(1, self.family_centers) for s in (1, -1)]
        offs = offs[: self.family_centers]

        def jit(c):
            if self.jitter == 0:
                return c
            return tuple(v + self.jitter * dom.h * rng.uniform(-1, 1) for v in c)

        out = []
        for o in offs:
            c = (o,) + (0.0,) * (self.n - 1)
            for r in self.family_radii(dom):
                f = TestFunctionSpec.indicator(jit(c), float(r))
                out.append((f"indicator(c={o:g}, r={r:g})", (f,) * self.m))
        if self.family_extras:
            origin = (0.0,) * self.n
            for s in (0.25, 0.5, 1.0):
                f = TestFunctionSpec.gaussian(jit(origin), s * self.L / 4)
                out.append((f"gaussian(s={s * self.L / 4:g})", (f,) * self.m))
            for g in (0.25, 0.5, 0.75):
                gamma = g * self.n / max(self.cfg.ps)
                f = TestFunctionSpec.power_bump(gamma, self.L / 4, jit(origin))
                out.append((f"power-bump(gamma={gamma:g})", (f,) * self.m))
        if self.zero_member:
            z = TestFunctionSpec.zero()
            out.append(("zero", (z,) + (TestFunctionSpec.indicator(),) * (self.m - 1)))
        return out


@dataclass
class ExperimentResult:
    kind: str
    header: tuple
    rows: list
    summary: dict
    diagnostics: dict = field(default_factory=dict)
    spec: dict = field(default_factory=dict)
    wall_time: float = 0.0


# ---------------------------------------------------------------------------
# building specs from config


def spec_from_config(raw: RawConfig) -> ExperimentSpec:
    n = raw.convert("domain", "n", int, required=True)
    L = raw.convert("domain", "L", float, required=True)
    N = raw.convert("domain", "N", int, required=True)
    cfg = build_exponents(raw, n)
    m = cfg.m

    ws = []
    for i in range(1, m + 1):
        ws.append(raw.convert("weights", f"w{i}", lambda s: build_weight(s, n), None))
    default_w = raw.convert("weights", "w", lambda s: build_weight(s, n), None)
    ws = [w or default_w or build_weight("constant()", n) for w in ws]
    wv = WeightVector(tuple(ws))

    def phi(key, phi1s=()):
        return raw.convert("phi", key, lambda s: build_phi(s, n, cfg, wv, phi1s), None)

    phi1s = []
    shared = phi("phi1")
    for i in range(1, m + 1):
        p = phi(f"phi1_{i}") or shared
        if p is None:
            raise ConfigError(f"[phi] phi1_{i}", "missing required field", raw.line("phi"))
        phi1s.append(p)
    phi2 = phi("phi2", tuple(phi1s))
    if phi2 is None:
        raise ConfigError("[phi] phi2", "missing required field", raw.line("phi"))

    symbols = None
    if raw.keys("symbols"):
        shared_b = raw.convert("symbols", "b", lambda s: build_function(s, n), None)
        symbols = tuple(
            raw.convert("symbols", f"b{i}", lambda s: build_function(s, n), shared_b)
            for i in range(1, m + 1)
        )
        if any(b is None for b in symbols):
            raise ConfigError("[symbols] b1", "need b or b1..bm", raw.line("symbols"))

    inputs = ()
    if any(raw.has("probe", f"f{i}") for i in range(1, m + 1)):
        inputs = tuple(
            raw.convert("probe", f"f{i}", lambda s: build_function(s, n), required=True)
            for i in range(1, m + 1)
        )

    def opt(section, key, fn, default=None):
        return raw.convert(section, key, fn, default)

    def yes(s):
        v = s.lower()
        if v not in ("yes", "no", "true", "false", "1", "0"):
            raise ValueError(f"expected yes/no, got {s!r}")
        return v in ("yes", "true", "1")

    kw = dict(
        n=n,
        L=L,
        N=N,
        cfg=cfg,
        weights=wv,
        phi1s=tuple(phi1s),
        phi2=phi2,
        symbols=symbols,
        operator=opt("probe", "operator", str, "maximal"),
        base=opt("probe", "base", str, "maximal"),
        j=opt("probe", "j", int),
        probe=opt("probe", "kind", str, "boundedness"),
        flavor=opt("probe", "flavor", str, "A"),
        k=opt("probe", "k", int, 0),
        normalization=opt("probe", "normalization", str, "plain"),
        plan_centers=opt("plan", "centers", str, "offsets"),
        plan_spread=opt("plan", "spread", float, 0.5),
        plan_count=opt("plan", "count", int, 8),
        plan_r_min=opt("plan", "r_min", float),
        plan_octaves=opt("plan", "octaves", int),
        plan_per_octave=opt("plan", "per_octave", int, 2),
        t_max=opt("plan", "t_max", float),
        eta_max=opt("plan", "eta_max", float),
        outer_per_octave=opt("plan", "outer_per_octave", int, 8),
        family_centers=opt("probe", "family_centers", int, 3),
        family_spread=opt("probe", "family_spread", float),
        family_r_min=opt("probe", "family_r_min", float),
        family_octaves=opt("probe", "family_octaves", int, 5),
        family_per_octave=opt("probe", "family_per_octave", int, 1),
        family_extras=opt("probe", "family_extras", yes, True),
        zero_member=opt("probe", "zero_member", yes, False),
        inputs=inputs,
        eval_stride=opt("probe", "eval_stride", int, 1),
        jitter=opt("probe", "jitter", float, 0.0),
        levels=opt("probe", "levels", int, 3),
        refine_probe=opt("probe", "refine_probe", str, "boundedness"),
    )
    echo = {
        s: dict(raw.parser[s]) for s in raw.parser.sections()
    }
    try:
        return ExperimentSpec(echo=echo, **kw)
    except ValueError as exc:
        raise ConfigError("[probe]", str(exc), raw.line("probe")) from None


# ---------------------------------------------------------------------------
# shared pieces


_OPS = {
    "maximal": frac_maximal,
    "integral": frac_integral,
    ("commutator-iterated", "maximal"): iterated_commutator_maximal,
    ("commutator-sum", "maximal"): sum_commutator_maximal,
    ("commutator-iterated", "integral"): iterated_commutator_integral,
    ("commutator-sum", "integral"): sum_commutator_integral,
}


def _operator_fn(spec: ExperimentSpec):
    if spec.operator in ("maximal", "integral"):
        return _OPS[spec.operator]
    return _OPS[(spec.operator, spec.base)]


def _symbols(spec: ExperimentSpec, dom: Domain):
    if spec.symbols is None:
        return None
    return tuple(sample_function(b, dom) for b in spec.symbols)


def _target_is_weak(spec: ExperimentSpec) -> bool:
    return min(spec.cfg.ps) == 1


class _Context:
    """Per-run shared, read-only state."""

    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.dom = spec.domain()
        self.plan = spec.plan(self.dom)
        self.u = spec.weights.product(self.dom)
        self.uq = self.u.pow(spec.cfg.q)
        self.wp = tuple(w.pow(p) for w, p in zip(spec.weights, spec.cfg.ps))
        self.bs = _symbols(spec, self.dom)
        self.op = _operator_fn(spec)
        self.bmo = None
        if self.bs is not None and spec.operator.startswith("commutator"):
            self.bmo = [bmo_norm(b, self.plan).value for b in self.bs]

    def bmo_factor(self) -> float:
        s = self.spec
        if not s.operator.startswith("commutator"):
            return 1.0
        if s.operator == "commutator-sum":
            return self.bmo[s.j - 1]
        return math.prod(self.bmo)

    def ratio(self, fs) -> dict:
        """Numerator, denominator and ratio for one input tuple."""
        s, dom = self.spec, self.dom
        den = 1.0
        for f, p, phi, w in zip(fs, s.cfg.ps, s.phi1s, self.wp):
            den *= morrey_norm(f, p, phi, w, self.plan).value
        den *= self.bmo_factor()
        if den == 0:
            return {"numerator": 0.0, "denominator": 0.0, "ratio": math.nan,
                    "weak_ratio": math.nan, "witness": None, "skipped": True}
        req = OperatorRequest(fs, s.cfg.alpha, bs=self.bs, points=dom.centers, j=s.j)
        F = self.op(req).to_grid_function()
        if _target_is_weak(s):
            strong = morrey_norm(F, s.cfg.q, s.phi2, self.uq, self.plan)
            weak = weak_morrey_norm(F, s.cfg.q, s.phi2, self.uq, self.plan)
            num = weak
            weak_ratio = weak.value / den
            strong_ratio = strong.value / den
        else:
            num = morrey_norm(F, s.cfg.q, s.phi2, self.uq, self.plan)
            strong_ratio = num.value / den
            weak_ratio = math.nan
        return {
            "numerator": num.value,
            "denominator": den,
            "ratio": num.value / den,
            "weak_ratio": weak_ratio,
            "strong_ratio": strong_ratio,
            "witness": num.witness,
            "skipped": False,
        }


def _map_members(spec: ExperimentSpec, fn, items) -> list:
    if spec.threads > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as ex:
            return list(ex.map(fn, items))
    return [fn(it) for it in items]


def _condition_input(spec: ExperimentSpec, ctx: _Context, **kw) -> ConditionInput:
    args = dict(
        phi1s=spec.phi1s,
        phi2=spec.phi2,
        weights=spec.weights,
        cfg=spec.cfg,
        plan=ctx.plan,
        k=spec.k,
        flavor=spec.flavor,
        normalization=spec.normalization,
        dom=ctx.dom,
        bs=ctx.bs,
        j=spec.j,
    )
    args.update(kw)
    return ConditionInput(**args)


def _default_condition(spec: ExperimentSpec, ctx: _Context) -> ConditionInput:
    """The sufficient condition matching the selected operator."""
    integral = spec.operator == "integral" or (
        spec.operator.startswith("commutator") and spec.base == "integral"
    )
    flavor = "B" if integral else "A"
    k = 0
    if spec.operator == "commutator-iterated":
        k = spec.m
    elif spec.operator == "commutator-sum":
        k = 1
    return _condition_input(spec, ctx, flavor=flavor, k=k, normalization="plain")


def _char(spec: ExperimentSpec, ctx: _Context):
    if spec.operator.startswith("commutator"):
        mode = "iterated" if spec.operator == "commutator-iterated" else "sum"
        return commutator_char_quantity(
            ctx.bs, ctx.u, spec.cfg.q, spec.phi1s, spec.phi2, spec.cfg.alpha,
            ctx.plan, mode, spec.j, ctx.bmo,
        )
    return char_quantity(spec.phi1s, spec.phi2, spec.cfg.alpha, ctx.plan, ctx.dom)


def _provenance(spec: ExperimentSpec) -> dict:
    return {
        "config": spec.echo,
        "probe": spec.probe,
        "operator": spec.operator,
        "N": spec.N,
        "seed": spec.seed,
        "threads": spec.threads,
    }


def _finish(kind, header, rows, summary, spec, t0, diagnostics=None):
    return ExperimentResult(
        kind, tuple(header), rows, summary, diagnostics or {}, _provenance(spec),
        time.perf_counter() - t0,
    )


# ---------------------------------------------------------------------------
# probes


BOUNDEDNESS_HEADER = (
    "member", "label", "numerator", "denominator", "ratio", "weak_ratio", "skipped",
)


def boundedness_probe(spec: ExperimentSpec) -> ExperimentResult:
    """``max_f |op(f)|_target / prod |f_i|`` over the test family.

    The target is the weak Morrey norm when ``min p_i = 1``. The probe first
    evaluates the matching sufficient condition; if that is not finite the
    run is labelled ``diagnostic-only``.
    """
    t0 = time.perf_counter()
    ctx = _Context(spec)
    cond = condition_value(_default_condition(spec, ctx))
    members = spec.family(ctx.dom)

    def one(item):
        label, funcs = item
        fs = tuple(sample_function(f, ctx.dom) for f in funcs)
        return ctx.ratio(fs)

    results = _map_members(spec, one, members)
    rows = []
    best, best_k = -math.inf, None
    skipped = 0
    for k, ((label, _), r) in enumerate(zip(members, results)):
        rows.append((k, label, r["numerator"], r["denominator"], r["ratio"],
                     r["weak_ratio"], int(r["skipped"])))
        if r["skipped"]:
            skipped += 1
            continue
        if r["ratio"] > best:
            best, best_k = r["ratio"], k
    summary = {
        "max_ratio": best if best_k is not None else 0.0,
        "witness_member": best_k,
        "witness_label": members[best_k][0] if best_k is not None else None,
        "witness_ball": results[best_k]["witness"] if best_k is not None else None,
        "skipped": skipped,
        "target": "weak" if _target_is_weak(spec) else "strong",
        "mode": "bounded-check" if cond.verdict == CONSISTENT else "diagnostic-only",
        "condition_value": cond.value,
        "condition_verdict": cond.verdict,
        "condition_witness": cond.witness,
    }
    diag = {"condition_truncation": cond.truncation}
    return _finish("boundedness", BOUNDEDNESS_HEADER, rows, summary, spec, t0, diag)


SHARPNESS_HEADER = ("r", "numerator", "denominator", "ratio", "char_profile")


def trajectory_stats(radii, values) -> dict:
    """Flatness / growth summary of ``r -> R(r)``."""
    v = np.asarray(values, dtype=float)
    r = np.asarray(radii, dtype=float)
    d = np.diff(v)
    increasing = bool(np.all(d >= -1e-12 * np.abs(v[1:])))
    decreasing = bool(np.all(d <= 1e-12 * np.abs(v[1:])))
    slope = float(np.polyfit(np.log2(r), np.log2(v), 1)[0]) if len(v) > 1 else 0.0
    return {
        "max_over_min": float(v.max() / v.min()),
        "monotone": increasing or decreasing,
        "direction": "increasing" if increasing and not decreasing else (
            "decreasing" if decreasing and not increasing else "flat"),
        "slope_per_octave": slope,
        "rate_per_octave": 2.0 ** abs(slope),
        "octaves": float(math.log2(r[-1] / r[0])) if len(r) > 1 else 0.0,
    }


def sharpness_probe(spec: ExperimentSpec) -> ExperimentResult:
    """Run the ``chi_B`` family over the radius ladder at the first plan center.

    The trajectory ``r -> R(chi_B(x0, r))`` is compared with the growth
    verdict of the characterization quantity. A finite quantity should give a
    flat trajectory (max/min <= 4). An infinite one should give monotone
    growth of at least 1.5x across the ladder.
    """
    t0 = time.perf_counter()
    ctx = _Context(spec)
    x0 = ctx.plan.centers[0]
    radii = spec.family_radii(ctx.dom)
    char = _char(spec, ctx)

    def one(r):
        f = sample_function(TestFunctionSpec.indicator(x0, float(r)), ctx.dom)
        return ctx.ratio((f,) * spec.m)

    results = _map_members(spec, one, list(radii))
    alpha = spec.cfg.alpha
    rows = []
    for r, res in zip(radii, results):
        prof = r**alpha * math.prod(p(x0, r, ctx.dom) for p in spec.phi1s) / spec.phi2(
            x0, r, ctx.dom
        )
        rows.append((float(r), res["numerator"], res["denominator"], res["ratio"], prof))
    vals = [row[3] for row in rows]
    stats = trajectory_stats(radii, vals)
    if char.verdict == CONSISTENT:
        ok = stats["max_over_min"] <= FLAT_BAND
    elif char.verdict == GROWTH:
        ok = stats["monotone"] and stats["max_over_min"] >= GROWTH_BAND
    else:
        ok = False
    summary = {
        "verdict": CONSISTENT if ok else INCONCLUSIVE,
        "trajectory_verdict": GROWTH if stats["max_over_min"] >= GROWTH_BAND and stats["monotone"] else CONSISTENT,
        "char_value": char.value,
        "char_verdict": char.verdict,
        "char_witness": char.witness,
        "char_growth_low": char.growth_low,
        "char_growth_high": char.growth_high,
        "char_rate_per_octave": char.rate_per_octave,
        "center": x0,
        **stats,
    }
    return _finish("sharpness", SHARPNESS_HEADER, rows, summary, spec, t0)


CONDITION_HEADER = ("x", "r", "t_star", "eta_star", "value")


def condition_probe(spec: ExperimentSpec) -> ExperimentResult:
    t0 = time.perf_counter()
    ctx = _Context(spec)
    res = condition_value(_condition_input(spec, ctx))
    char = _char(spec, ctx)
    summary = {
        "value": res.value,
        "witness": res.witness,
        "verdict": res.verdict,
        "char_value": char.value,
        "char_witness": char.witness,
        "char_verdict": char.verdict,
        "char_growth_low": char.growth_low,
        "char_growth_high": char.growth_high,
        "char_rate_per_octave": char.rate_per_octave,
    }
    return _finish("condition", CONDITION_HEADER, res.rows, summary, spec, t0,
                   {"truncation": res.truncation})


WEIGHTS_HEADER = ("quantity", "index", "value", "witness_center", "witness_radius")


def weights_probe(spec: ExperimentSpec) -> ExperimentResult:
    t0 = time.perf_counter()
    dom = spec.domain()
    plan = spec.plan(dom)
    rows = []
    summary = {}

    def add(name, idx, scan):
        ball = scan.witness
        c = ball.center if ball is not None else None
        r = ball.radius if ball is not None else math.nan
        rows.append((name, idx, scan.value, c, r))
        summary[f"{name}_{idx}" if idx else name] = scan.value

    for i, (w, p) in enumerate(zip(spec.weights, spec.cfg.ps), 1):
        add("a1" if p == 1 else "ap", i,
            a1_constant(w, plan, dom) if p == 1 else ap_constant(w, p, plan, dom))
        add("doubling", i, doubling_ratio(w, 2.0, plan, dom))
    add("apq", 0, apq_constant(spec.weights, spec.cfg, plan, dom))
    lo, hi = norm_equivalence_ratio(spec.weights, spec.cfg, plan, dom)
    add("equivalence_min", 0, lo)
    add("equivalence_max", 0, hi)
    summary["equivalence_band"] = hi.value / lo.value
    return _finish("weights", WEIGHTS_HEADER, rows, summary, spec, t0)


EVAL_HEADER = ("index", "x", "value", "t_star")


def eval_probe(spec: ExperimentSpec) -> ExperimentResult:
    t0 = time.perf_counter()
    ctx = _Context(spec)
    funcs = spec.inputs or (TestFunctionSpec.indicator((0.0,) * spec.n, 1.0),) * spec.m
    fs = tuple(sample_function(f, ctx.dom) for f in funcs)
    pts = ctx.dom.centers if spec.eval_stride == 1 else sublattice(ctx.dom, spec.eval_stride)
    req = OperatorRequest(
        fs, spec.cfg.alpha, bs=ctx.bs, points=pts, j=spec.j, threads=spec.threads
    )
    out = ctx.op(req)
    t_star = out.info.get("t_star")
    rows = []
    for k, (x, v) in enumerate(zip(out.points, out.values)):
        ts = float(t_star[k]) if t_star is not None else math.nan
        rows.append((k, tuple(x), float(v), ts))
    k = int(np.argmax(np.abs(out.values)))
    summary = {"max_abs": float(np.abs(out.values[k])), "witness": tuple(out.points[k]),
               "points": len(out.points)}
    return _finish("eval", EVAL_HEADER, rows, summary, spec, t0)


REFINE_HEADER = ("level", "N", "quantity", "value", "richardson")

_RUNNERS = {
    "boundedness": boundedness_probe,
    "sharpness": sharpness_probe,
    "condition": condition_probe,
    "weights": weights_probe,
    "eval": eval_probe,
}


def run_probe(spec: ExperimentSpec) -> ExperimentResult:
    if spec.probe == "refinement":
        return refinement_study(spec, spec.levels)
    return _RUNNERS[spec.probe](spec)


def scalar_summary(res: ExperimentResult) -> dict:
    return {
        k: float(v)
        for k, v in res.summary.items()
        if isinstance(v, (int, float)) and not isinstance(v, bool)
    }


def refinement_study(spec: ExperimentSpec, levels: int = 3) -> ExperimentResult:
    """Rerun ``spec.refine_probe`` at ``N, 2N, 4N, ...``.

    For every scalar summary the ``richardson`` column holds
    ``(v[k-2] - v[k-1]) / (v[k-1] - v[k])``. It is about 2 for a first-order
    error and is blank before level 2 or when the differences vanish.
    """
    t0 = time.perf_counter()
    if levels < 2:
        raise ValueError("refinement needs at least 2 levels")
    runner = _RUNNERS[spec.refine_probe]
    history = []
    for lev in range(levels):
        history.append(scalar_summary(runner(spec.replace(N=spec.N * 2**lev))))
    keys = sorted(set.intersection(*(set(h) for h in history)))
    rows = []
    summary = {}
    for q in keys:
        vals = [h[q] for h in history]
        for lev, v in enumerate(vals):
            rich = math.nan
            if lev >= 2:
                d1, d2 = vals[lev - 2] - vals[lev - 1], vals[lev - 1] - v
                if d2 != 0:
                    rich = d1 / d2
            rows.append((lev, spec.N * 2**lev, q, v, rich))
        summary[q] = vals[-1]
        diffs = [abs(b - a) for a, b in zip(vals, vals[1:])]
        summary[f"{q}__changes"] = diffs
    return _finish("refinement", REFINE_HEADER, rows, summary, spec, t0,
                   {"levels": levels, "probe": spec.refine_probe})
