"""Hardy-type transforms, the [.]_A / [.]_B condition scans and the
characterization quantities.

Every unbounded range is a finite log ladder. A truncated scan cannot tell
"finite" from "slowly divergent", so each scan also reports how the value
moves when the relevant ladder end is pushed out. The verdict is one of
``CONSISTENT`` / ``GROWTH`` / ``INCONCLUSIVE``:

- ``GROWTH``: the value grows by at least 1.5x when the ladder depth is
  doubled.
- ``CONSISTENT``: it moves by at most 1.2x.
- ``INCONCLUSIVE``: anything in between.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import (
    Ball,
    Domain,
    GridFunction,
    NonFiniteError,
    SamplingPlan,
    ScanResult,
    in_ball,
    log_ladder,
)
from .spaces import PhiSpec, bmo_norm
from .weights import ExponentConfig, WeightSpec, WeightVector, lq_norm_on_ball, weight_mass

CONSISTENT = "CONSISTENT"
GROWTH = "GROWTH"
INCONCLUSIVE = "INCONCLUSIVE"

GROWTH_FACTOR = 1.5
FLAT_FACTOR = 1.2


def verdict_for(growth: float) -> str:
    if not math.isfinite(growth) or growth >= GROWTH_FACTOR:
        return GROWTH
    if growth <= FLAT_FACTOR:
        return CONSISTENT
    return INCONCLUSIVE


# ---------------------------------------------------------------------------
# radial profiles and 1-D transforms


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Scalar function of ``t > 0``.

    ``power``: ``scale * t**sigma``; ``log_power``: ``scale * (1 + log(t/r0))**k * t**sigma``;
    ``tabulated``: log-log interpolation of ``values`` on ``ladder``.
    """

    kind: str = "power"
    sigma: float = 0.0
    scale: float = 1.0
    k: float = 0.0
    r0: float = 1.0
    ladder: tuple = ()
    values: tuple = ()

    @classmethod
    def power(cls, sigma: float, scale: float = 1.0) -> "RadialProfile":
        return cls("power", sigma=sigma, scale=scale)

    @classmethod
    def constant(cls, c: float) -> "RadialProfile":
        return cls("power", sigma=0.0, scale=c)

    @classmethod
    def log_power(cls, k, sigma, r0=1.0, scale=1.0) -> "RadialProfile":
        return cls("log_power", sigma=sigma, scale=scale, k=k, r0=r0)

    @classmethod
    def tabulated(cls, ladder, values) -> "RadialProfile":
        return cls("tabulated", ladder=tuple(ladder), values=tuple(values))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "power":
            return self.scale * t**self.sigma
        if self.kind == "log_power":
            return self.scale * (1 + np.log(t / self.r0)) ** self.k * t**self.sigma
        lt = np.log(np.asarray(self.ladder))
        v = np.asarray(self.values, dtype=float)
        if np.all(v > 0):
            return np.exp(np.interp(np.log(t), lt, np.log(v)))
        return np.interp(np.log(t), lt, v)


# numpy 2 renamed trapz
_trapezoid = getattr(np, "trapezoid", None) or np.trapz


def _finite_profile(name: str, vals: np.ndarray, ts: np.ndarray) -> np.ndarray:
    bad = np.flatnonzero(~np.isfinite(vals))
    if bad.size:
        t = float(ts[bad[0]])
        raise NonFiniteError(f"{name} is not finite at t={t}", witness=t)
    return vals


def hardy_transform(
    g: RadialProfile,
    w: RadialProfile,
    r: float,
    k: float = 0,
    t_max: float = 2.0**20,
    per_octave: int = 16,
) -> float:
    """``int_r^{t_max} (1 + log(t/r))^k g(t) w(t) dt/t`` (trapezoid in ``log t``)."""
    ts = log_ladder(r, t_max, per_octave)
    gv = _finite_profile("g", np.broadcast_to(g(ts), ts.shape), ts)
    wv = _finite_profile("w", np.broadcast_to(w(ts), ts.shape), ts)
    F = (1.0 + np.log(ts / r)) ** k * gv * wv
    if not np.any(F):
        return 0.0
    return float(_trapezoid(F, np.log(ts)))


def supremal_transform(
    g: RadialProfile, u: RadialProfile, r: float, t_max: float, per_octave: int = 16
) -> ScanResult:
    """``max_{r <= t <= t_max} u(t) g(t)`` on the ladder, with the arg-max ``t``."""
    ts = log_ladder(r, t_max, per_octave)
    F = np.broadcast_to(u(ts), ts.shape) * np.broadcast_to(g(ts), ts.shape)
    k = int(np.argmax(F))
    return ScanResult(float(F[k]), float(ts[k]))


# ---------------------------------------------------------------------------
# weight norms as functions of the radius


def norm_profile(
    w: WeightSpec, s: float, x, radii: np.ndarray, dom: Domain | None
) -> np.ndarray:
    """``||w||_{L^s(B(x, t))}`` for every ``t`` in ``radii``."""
    radii = np.asarray(radii, dtype=float)
    probe = Ball(x, float(radii[0]))
    if w.centered_on(probe):
        return np.array([lq_norm_on_ball(w, s, Ball(x, t)) for t in radii])
    if dom is None:
        raise ValueError("quadrature path needs a domain")
    d = dom.distances(x)
    order = np.argsort(d, kind="stable")
    cs = np.concatenate(([0.0], np.cumsum(w.evaluate(dom)[order] ** s)))
    idx = np.searchsorted(d[order], radii * (1 + 1e-12), side="right")
    return (cs[idx] * dom.cell_volume) ** (1.0 / s)


def _phi_profile(phi: PhiSpec, x, radii, dom) -> np.ndarray:
    e = phi.power_exponent
    if e is not None:
        return phi.power_scale * np.asarray(radii) ** e
    return np.array([phi(x, float(t), dom) for t in radii])


# ---------------------------------------------------------------------------
# the condition family


_NORMALIZATIONS = (
    "plain",
    "characterization",
    "commutator-iterated",
    "commutator-sum",
    "diagnostic",
)


@dataclass(frozen=True, eq=False)
class ConditionInput:
    """One member of the condition family.

    ``flavor`` ``"A"`` takes ``sup_{t > r}``, ``"B"`` takes ``int_r^inf dt/t``.
    ``k`` is the power of ``(1 + log(t/r))``. ``normalization`` selects the
    prefactor:

    - ``plain``: ``phi2(x, r)^{-1}``
    - ``characterization``: ``(r^alpha prod phi1_i(x, r))^{-1}``
    - ``commutator-iterated`` / ``commutator-sum``: the same times the inverse
      symbol oscillation factor
    - ``diagnostic``: the inner bracket itself, so the value is identically 1
    """

    phi1s: tuple
    phi2: PhiSpec | None
    weights: WeightVector
    cfg: ExponentConfig
    plan: SamplingPlan
    k: float = 0
    flavor: str = "A"
    normalization: str = "plain"
    dom: Domain | None = None
    bs: tuple | None = None
    j: int | None = None

    def __post_init__(self):
        if self.flavor not in ("A", "B"):
            raise ValueError(f"flavor must be A or B, got {self.flavor!r}")
        if self.normalization not in _NORMALIZATIONS:
            raise ValueError(f"unknown normalization {self.normalization!r}")
        m = self.cfg.m
        if len(self.phi1s) != m or len(self.weights) != m:
            raise ValueError(f"need m={m} phi1 functions and weights")
        if self.k not in (0, 1, m):
            raise ValueError(f"log power k must be 0, 1 or m={m}")
        if self.normalization == "plain" and self.phi2 is None:
            raise ValueError("plain normalization needs phi2")
        if self.normalization.startswith("commutator") and self.bs is None:
            raise ValueError("commutator normalization needs symbols")
        if self.normalization == "commutator-sum" and self.j is None:
            raise ValueError("commutator-sum normalization needs j")

    def replace(self, **kw) -> "ConditionInput":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return ConditionInput(**d)


@dataclass
class ConditionResult:
    value: float
    witness: tuple
    rows: list
    verdict: str = CONSISTENT
    truncation: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _oscillation_factor(bs, u: WeightSpec, q, x, r, dom, mode, j, bmo) -> float:
    """``||prod |b_i - (b_i)_B| ||_{L^q(B, u^q)} / (||u||_{L^q(B)} prod ||b_i||_BMO)``.

    ``mode="sum"`` keeps only component ``j``.
    """
    m = in_ball(dom.distances(x), r)
    if not m.any():
        return 0.0
    uq = u.evaluate(dom)[m] ** q
    idx = range(len(bs)) if mode == "iterated" else [j - 1]
    F = np.ones(int(m.sum()))
    norm = 1.0
    for i in idx:
        sel = bs[i].values[m]
        F = F * np.abs(sel - np.mean(sel))
        norm *= bmo[i]
    num = float(np.sum(F**q * uq)) ** (1 / q)
    den = float(np.sum(uq)) ** (1 / q)
    return num / (den * norm)


def _bmo_norms(bs, plan):
    out = []
    for i, b in enumerate(bs, 1):
        v = bmo_norm(b, plan).value
        if v == 0:
            raise ValueError(f"symbol b_{i} has zero BMO norm on the plan")
        out.append(v)
    return out


def _scan_condition(inp: ConditionInput, t_max: float, eta_max: float):
    cfg, plan, dom = inp.cfg, inp.plan, inp.dom
    ws = inp.weights
    u = ws.product(dom) if inp.normalization.startswith("commutator") else None
    bmo = _bmo_norms(inp.bs, plan) if u is not None else None
    rows = []
    best = (-math.inf, None)
    for x in plan.centers:
        for r in plan.radii:
            ts = log_ladder(r, max(eta_max, r), plan.outer_per_octave)
            P = np.ones_like(ts)
            for phi, w, p in zip(inp.phi1s, ws, cfg.ps):
                P = P * _phi_profile(phi, x, ts, dom) * norm_profile(w, p, x, ts, dom)
            # essinf over eta >= t: suffix minimum, with its position
            E = np.minimum.accumulate(P[::-1])[::-1]
            arg = np.empty(len(P), dtype=int)
            best_j = len(P) - 1
            for jj in range(len(P) - 1, -1, -1):
                if P[jj] <= P[best_j]:
                    best_j = jj
                arg[jj] = best_j
            # t = r always stays in the ladder, even when t_max < r
            tmask = ts <= max(t_max, r) * (1 + 1e-12)
            tt = ts[tmask]
            den = np.ones_like(tt)
            for w, qi in zip(ws, cfg.qs):
                den = den * norm_profile(w, qi, x, tt, dom)
            # inf / inf is caught just below, with its witness
            with np.errstate(invalid="ignore", divide="ignore"):
                F = (1 + np.log(tt / r)) ** inp.k * E[tmask] / den
            bad = np.flatnonzero(~np.isfinite(F))
            if bad.size:
                raise NonFiniteError(
                    "condition integrand is not finite",
                    witness=(x, r, float(tt[bad[0]])),
                )
            kt = int(np.argmax(F))
            if inp.flavor == "A":
                inner = float(F[kt])
            else:
                inner = float(_trapezoid(F, np.log(tt))) if len(tt) > 1 else 0.0
            norm_val = _normalizer(inp, x, r, inner, u, bmo)
            if inp.normalization == "diagnostic":
                # definitional: also covers the empty flavor-B integral at t_max
                value = 1.0
            else:
                value = inner / norm_val if norm_val != 0 else math.inf
            if not math.isfinite(value):
                raise NonFiniteError(
                    "condition value is not finite", witness=(x, r, float(tt[kt]))
                )
            t_star, eta_star = float(tt[kt]), float(ts[arg[kt]])
            rows.append((x, r, t_star, eta_star, value))
            if value > best[0]:
                best = (value, (x, r, t_star, eta_star))
    return best[0], best[1], rows


def _normalizer(inp: ConditionInput, x, r, inner, u, bmo) -> float:
    if inp.normalization == "diagnostic":
        return inner
    if inp.normalization == "plain":
        return inp.phi2(x, r, inp.dom)
    base = r**inp.cfg.alpha * math.prod(phi(x, r, inp.dom) for phi in inp.phi1s)
    if inp.normalization == "characterization":
        return base
    mode = "iterated" if inp.normalization == "commutator-iterated" else "sum"
    osc = _oscillation_factor(
        inp.bs, u, inp.cfg.q, x, r, inp.dom, mode, inp.j, bmo
    )
    return osc * base


def condition_value(inp: ConditionInput) -> ConditionResult:
    """Scan one condition functional over the plan.

    Returns the max with witness ``(x, r, t*, eta*)``, one CSV-ready row
    ``(x, r, t_star, eta_star, value)`` per plan ball, and a truncation report:

    - ``half_ratio``: value at ``eta_max`` over value at ``eta_max / 2``.
    - ``depth_growth``: value after doubling the outer ladder depth, over the
      value at the configured depth.
    """
    plan = inp.plan
    value, witness, rows = _scan_condition(inp, plan.t_max, plan.eta_max)
    half_eta = plan.eta_max / 2
    half_t = min(plan.t_max, half_eta)
    v_half, _, _ = _scan_condition(inp, half_t, half_eta)
    depth = math.log2(plan.eta_max / plan.r_min)
    ext = 2.0**depth
    v_ext, _, _ = _scan_condition(inp, plan.t_max * ext, plan.eta_max * ext)
    half_ratio = _ratio(value, v_half)
    growth = _ratio(v_ext, value)
    trunc = {
        "half_ratio": half_ratio,
        "depth_growth": growth,
        "depth_octaves": depth,
        "rate_per_octave": growth ** (1 / depth) if math.isfinite(growth) else math.inf,
    }
    return ConditionResult(value, witness, rows, verdict_for(growth), trunc)


def _ratio(a: float, b: float) -> float:
    if b == 0:
        return 1.0 if a == 0 else math.inf
    return a / b


# ---------------------------------------------------------------------------
# characterization quantities


@dataclass
class CharResult:
    value: float
    witness: tuple
    growth_low: float
    growth_high: float
    depth: float
    verdict: str
    info: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)

    @property
    def growth(self) -> float:
        return max(self.growth_low, self.growth_high)

    @property
    def rate_per_octave(self) -> float:
        """Per-octave growth rate at whichever ladder end grows."""
        return self.growth ** (1 / self.depth)


def _char_scan(profile_fn, centers, radii):
    best = (-math.inf, None)
    for x in centers:
        vals = profile_fn(x, radii)
        k = int(np.argmax(vals))
        if vals[k] > best[0]:
            best = (float(vals[k]), (x, float(radii[k])))
    return best


def _with_growth(profile_fn, plan: SamplingPlan, info=None) -> CharResult:
    radii = np.asarray(plan.radii)
    value, witness = _char_scan(profile_fn, plan.centers, radii)
    depth = plan.octaves
    lo = radii * 2.0 ** (-depth)
    hi = radii * 2.0 ** depth
    v_lo, _ = _char_scan(profile_fn, plan.centers, np.concatenate((lo, radii)))
    v_hi, _ = _char_scan(profile_fn, plan.centers, np.concatenate((radii, hi)))
    g_lo, g_hi = _ratio(v_lo, value), _ratio(v_hi, value)
    return CharResult(
        value, witness, g_lo, g_hi, depth, verdict_for(max(g_lo, g_hi)), info or {}
    )


def char_quantity(
    phi1s: Sequence[PhiSpec],
    phi2: PhiSpec,
    alpha: float,
    plan: SamplingPlan,
    dom: Domain | None = None,
) -> CharResult:
    """``max_{(x, r)} r^alpha phi2(x,r)^{-1} prod_i phi1_i(x, r)``.

    ``growth_low`` / ``growth_high`` are the factors by which the max grows
    when the radius ladder is extended by its own depth below ``r_min`` /
    above ``r_max``.
    """
    exps = [p.power_exponent for p in (*phi1s, phi2)]
    if all(e is not None for e in exps):
        # fold the exponents first so exact cancellation stays exact
        e = alpha + sum(exps[:-1]) - exps[-1]
        c = math.prod(p.power_scale for p in phi1s) / phi2.power_scale

        def profile(x, radii):
            return c * np.asarray(radii) ** e

    else:

        def profile(x, radii):
            out = np.asarray(radii) ** alpha / _phi_profile(phi2, x, radii, dom)
            for p in phi1s:
                out = out * _phi_profile(p, x, radii, dom)
            return out

    return _with_growth(profile, plan)


def commutator_char_quantity(
    bs: Sequence[GridFunction],
    u: WeightSpec,
    q: float,
    phi1s: Sequence[PhiSpec],
    phi2: PhiSpec,
    alpha: float,
    plan: SamplingPlan,
    mode: str = "iterated",
    j: int | None = None,
    bmo: Sequence[float] | None = None,
) -> CharResult:
    """Characterization quantity with the symbol oscillation factor.

    The factor is the ``L^q(B, u^q)`` mean of ``prod_i |b_i - (b_i)_B|``
    (``mode="iterated"``) or of ``|b_j - (b_j)_B|`` (``mode="sum"``). It is
    normalized by ``||u||_{L^q(B)}`` and the BMO norms.
    """
    if mode not in ("iterated", "sum"):
        raise ValueError(f"mode must be iterated or sum, got {mode!r}")
    if mode == "sum" and j is None:
        raise ValueError("sum mode needs j")
    dom = bs[0].domain
    bmo = list(bmo) if bmo is not None else _bmo_norms(bs, plan)
    if any(v == 0 for v in bmo):
        raise ValueError("zero BMO norm: normalization undefined")
    base = char_quantity(phi1s, phi2, alpha, plan, dom)

    def profile(x, radii):
        osc = np.array(
            [_oscillation_factor(bs, u, q, x, r, dom, mode, j, bmo) for r in radii]
        )
        core = np.asarray(radii) ** alpha / _phi_profile(phi2, x, radii, dom)
        for p in phi1s:
            core = core * _phi_profile(p, x, radii, dom)
        return osc * core

    res = _with_growth(profile, plan)
    res.info["plain_char"] = base.value
    res.info["bmo"] = bmo
    return res


# ---------------------------------------------------------------------------
# the G class


@dataclass
class GClassResult:
    c1: float
    c2: float
    constant: float
    witness1: tuple
    witness2: tuple

    @property
    def passed(self) -> bool:
        return self.c1 <= self.constant and self.c2 <= self.constant

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"


def g_class_check(
    phi: PhiSpec,
    w: WeightSpec,
    p: float,
    plan: SamplingPlan,
    dom: Domain,
    constant: float = 8.0,
) -> GClassResult:
    """Worst constants in the two almost-decreasing conditions.

    For every plan ball ``(x0, r0)`` the scan runs over plan balls with
    ``r <= r0``. Condition (1) compares ``phi(x0, r0)`` with ``phi(x, r)``.
    Condition (2) compares ``phi(x0, r0) w^p(B0)^{1/p}`` with
    ``phi(x, r) w^p(B(x, r))^{1/p}``.
    """
    wp = w.pow(p)
    balls = [(x, r) for x in plan.centers for r in plan.radii]
    phis = np.array([phi(x, r, dom) for x, r in balls])
    masses = np.array([weight_mass(wp, Ball(x, r), dom) for x, r in balls])
    W = masses ** (1 / p)
    PW = phis * W
    if phi.kind == "mass":
        own = np.array([weight_mass(phi.weight, Ball(x, r), dom) for x, r in balls])
        if np.array_equal(own, masses):
            # same measure: fold the exponents so exact cancellation stays exact
            PW = phi.scale * masses ** (phi.exponent + 1 / p)
    radii = np.array([r for _, r in balls])
    c1 = c2 = -math.inf
    w1 = w2 = None
    for k, (x0, r0) in enumerate(balls):
        sub = radii <= r0 * (1 + 1e-12)
        r1 = phis[k] / phis[sub]
        r2 = PW[k] / PW[sub]
        i1, i2 = int(np.argmax(r1)), int(np.argmax(r2))
        idx = np.flatnonzero(sub)
        if r1[i1] > c1:
            c1, w1 = float(r1[i1]), ((x0, r0), balls[idx[i1]])
        if r2[i2] > c2:
            c2, w2 = float(r2[i2]), ((x0, r0), balls[idx[i2]])
    return GClassResult(c1, c2, constant, w1, w2)
