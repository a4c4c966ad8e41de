"""Weights, multiple weights and their Muckenhoupt-type constants.

Power weights ``|x - c|^a`` get a semi-analytic treatment on balls centered at
their singular point ``c``; every other (weight, ball) pair goes through the
cell-center rule of :mod:`morreylab.grid`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import (
    Ball,
    Domain,
    GridFunction,
    SamplingPlan,
    ScanResult,
    as_point,
    ball_volume,
    in_ball,
)

_CENTER_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class WeightSpec:
    """A positive weight.

    ``kind`` is ``"constant"`` (``scale``), ``"power"`` (``scale * |x-center|^exponent``)
    or ``"grid"`` (explicit positive samples). Power weights are clamped at
    distance ``h/2`` from ``center`` when sampled.
    """

    kind: str
    scale: float = 1.0
    center: tuple = (0.0,)
    exponent: float = 0.0
    samples: GridFunction | None = None

    def __post_init__(self):
        if self.kind not in ("constant", "power", "grid"):
            raise ValueError(f"unknown weight kind {self.kind!r}")
        if not self.scale > 0:
            raise ValueError(f"weight scale must be positive, got {self.scale}")
        object.__setattr__(
            self, "center", tuple(float(c) for c in np.atleast_1d(self.center))
        )
        if self.kind == "grid":
            if self.samples is None:
                raise ValueError("grid weight needs samples")
            if np.any(self.samples.values <= 0):
                k = int(np.flatnonzero(self.samples.values <= 0)[0])
                raise ValueError(f"grid weight is not positive at cell {k}")

    @classmethod
    def constant(cls, c: float = 1.0) -> "WeightSpec":
        return cls("constant", scale=c)

    @classmethod
    def power(cls, a: float, center=0.0, scale: float = 1.0) -> "WeightSpec":
        return cls("power", scale=scale, center=center, exponent=a)

    @classmethod
    def from_grid(cls, f: GridFunction) -> "WeightSpec":
        return cls("grid", samples=f)

    def __repr__(self):
        if self.kind == "constant":
            return f"constant(c={self.scale:g})"
        if self.kind == "power":
            return f"power(center={self.center}, a={self.exponent:g}, scale={self.scale:g})"
        return f"grid(N={self.samples.domain.N})"

    def evaluate(self, dom: Domain, points: np.ndarray | None = None) -> np.ndarray:
        if self.kind == "constant":
            n = dom.size if points is None else len(points)
            return np.full(n, self.scale)
        if self.kind == "grid":
            if self.samples.domain != dom:
                raise ValueError("grid weight lives on a different domain")
            return self.samples.values
        if points is None:
            d = dom.distances(as_point(self.center, dom.n))
        else:
            diff = np.atleast_2d(points) - as_point(self.center, dom.n)
            d = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        return self.scale * np.maximum(d, 0.5 * dom.h) ** self.exponent

    def pow(self, s: float) -> "WeightSpec":
        if self.kind == "constant":
            return WeightSpec.constant(self.scale**s)
        if self.kind == "power":
            return WeightSpec.power(self.exponent * s, self.center, self.scale**s)
        return WeightSpec.from_grid(self.samples.map(lambda v: v**s))

    def scaled(self, c: float) -> "WeightSpec":
        if self.kind == "grid":
            return WeightSpec.from_grid(self.samples * c)
        return WeightSpec(self.kind, self.scale * c, self.center, self.exponent)

    def centered_on(self, ball: Ball) -> bool:
        """True when the closed form applies: power/constant, ball at the singularity."""
        if self.kind == "constant":
            return True
        if self.kind != "power":
            return False
        c = np.asarray(self.center)
        x = np.asarray(ball.center)
        if c.size == 1 and x.size > 1:
            c = np.full(x.size, c[0])
        return bool(np.all(np.abs(c - x) <= _CENTER_ATOL))


def _power_ball_integral(n: int, b: float, r: float) -> float:
    """``int_{B(0,r)} |x|^b dx``, or inf when ``n + b <= 0``."""
    if n + b <= 0:
        return math.inf
    return n * ball_volume(n, 1.0) * r ** (n + b) / (n + b)


def power_average(n: int, b: float, r: float) -> float:
    """Average of ``|x|^b`` over ``B(0, r)``: ``n/(n+b) r^b``."""
    if n + b <= 0:
        return math.inf
    return n / (n + b) * r**b


def weight_mass(w: WeightSpec, ball: Ball, dom: Domain) -> float:
    """``w(B)`` by the cell-center rule (boxes clip)."""
    vals = w.evaluate(dom)
    return float(np.sum(vals[dom.mask(ball)])) * dom.cell_volume


def lq_norm_on_ball(
    w: WeightSpec, s: float, ball: Ball, dom: Domain | None = None
) -> float:
    """``(int_B w^s)^{1/s}``.

    Constant weights and power weights on balls centered at their singular
    point use the continuum closed form (no box clipping). Returns ``inf`` when
    ``n + s*a <= 0`` for such a power weight.
    """
    if s < 1:
        raise ValueError(f"exponent must be >= 1, got {s}")
    n = len(ball.center) if dom is None else dom.n
    if w.centered_on(ball):
        a = w.exponent if w.kind == "power" else 0.0
        I = _power_ball_integral(n, s * a, ball.radius)
        return w.scale * I ** (1.0 / s)
    if dom is None:
        raise ValueError("quadrature path needs a domain")
    vals = w.evaluate(dom)
    sel = vals[dom.mask(ball)]
    return (float(np.sum(sel**s)) * dom.cell_volume) ** (1.0 / s)


@dataclass(frozen=True, eq=False)
class WeightVector:
    weights: tuple

    def __post_init__(self):
        ws = tuple(self.weights)
        if len(ws) < 1:
            raise ValueError("weight vector needs at least one component")
        object.__setattr__(self, "weights", ws)

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)

    def __getitem__(self, i):
        return self.weights[i]

    def product(self, dom: Domain | None = None) -> WeightSpec:
        """``u = prod w_i``; stays closed-form when all components share a center."""
        ws = self.weights
        if all(w.kind == "constant" for w in ws):
            return WeightSpec.constant(math.prod(w.scale for w in ws))
        powers = [w for w in ws if w.kind == "power"]
        if all(w.kind in ("constant", "power") for w in ws) and all(
            w.center == powers[0].center for w in powers
        ):
            return WeightSpec.power(
                sum(w.exponent for w in powers),
                powers[0].center,
                math.prod(w.scale for w in ws),
            )
        if dom is None:
            raise ValueError("mixed weight product needs a domain")
        vals = np.prod([w.evaluate(dom) for w in ws], axis=0)
        return WeightSpec.from_grid(GridFunction(dom, vals))


@dataclass(frozen=True)
class ExponentConfig:
    """``(p_i, q_i, alpha_i)`` with the Hoelder and fractional relations.

    Construct from ``ps`` and ``alphas``; ``qs``, ``p``, ``q`` and ``alpha`` are
    derived. Use :meth:`from_qs` to go the other way.
    """

    n: int
    ps: tuple
    alphas: tuple

    def __post_init__(self):
        ps = tuple(float(p) for p in self.ps)
        al = tuple(float(a) for a in self.alphas)
        object.__setattr__(self, "ps", ps)
        object.__setattr__(self, "alphas", al)
        if len(ps) < 2:
            raise ValueError(f"need m >= 2 components, got {len(ps)}")
        if len(al) != len(ps):
            raise ValueError("ps and alphas differ in length")
        for i, (p, a) in enumerate(zip(ps, al), 1):
            if not 1 <= p < math.inf:
                raise ValueError(f"p_{i}={p} outside [1, inf)")
            if not 0 < a / self.n < 1:
                raise ValueError(f"alpha_{i}/n={a / self.n} outside (0, 1)")
            if not 1 / p - a / self.n > 0:
                raise ValueError(f"1/q_{i} = 1/p_{i} - alpha_{i}/n must be positive")
        if not 1 / self.q > 0:
            raise ValueError("1/q must be positive")

    @classmethod
    def from_qs(cls, n: int, ps: Sequence[float], qs: Sequence[float]):
        return cls(n, tuple(ps), tuple(n * (1 / p - 1 / q) for p, q in zip(ps, qs)))

    @property
    def m(self) -> int:
        return len(self.ps)

    @property
    def qs(self) -> tuple:
        return tuple(1.0 / (1 / p - a / self.n) for p, a in zip(self.ps, self.alphas))

    @property
    def alpha(self) -> float:
        return sum(self.alphas)

    @property
    def p(self) -> float:
        return 1.0 / sum(1 / p for p in self.ps)

    @property
    def q(self) -> float:
        return 1.0 / sum(1 / q for q in self.qs)

    @property
    def p_primes(self) -> tuple:
        return tuple(math.inf if p == 1 else p / (p - 1) for p in self.ps)


# ---------------------------------------------------------------------------
# constants over plan balls


def _ball_cells(dom: Domain, ball: Ball):
    return dom.mask(ball)


def _grid_average(vals: np.ndarray) -> float:
    # average w.r.t. the grid measure of the ball (count * h^n), so that
    # Jensen-type lower bounds hold exactly at finite h
    return float(np.sum(vals)) / vals.size


def _scan_max(items):
    best = ScanResult(-math.inf)
    for value, witness in items:
        if value > best.value or (math.isnan(value) and not math.isnan(best.value)):
            best = ScanResult(value, witness)
            if not math.isfinite(value):
                break
    return best


def ap_constant(
    w: WeightSpec,
    p: float,
    plan: SamplingPlan,
    dom: Domain,
    method: str = "auto",
) -> ScanResult:
    """``max_B (avg_B w)(avg_B w^{-1/(p-1)})^{p-1}`` over plan balls.

    ``method="auto"`` uses the closed form on balls centered at a power
    weight's singularity (infinite when it is not integrable) and quadrature
    elsewhere. ``method="quadrature"`` forces grid averages everywhere, which
    is what a refinement study of a divergent weight needs.
    """
    if not p > 1:
        raise ValueError(f"A_p needs p > 1, got {p}")
    if method not in ("auto", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    vals = w.evaluate(dom)

    def one(ball):
        if method == "auto" and w.centered_on(ball):
            # the scale cancels; r drops out for power weights
            a = w.exponent if w.kind == "power" else 0.0
            A = power_average(dom.n, a, 1.0)
            D = power_average(dom.n, -a / (p - 1), 1.0)
            return A * D ** (p - 1)
        sel = vals[_ball_cells(dom, ball)]
        if sel.size == 0:
            return -math.inf
        return _grid_average(sel) * _grid_average(sel ** (-1.0 / (p - 1))) ** (p - 1)

    return _scan_max((one(b), b) for b in plan.balls())


def a1_constant(w: WeightSpec, plan: SamplingPlan, dom: Domain) -> ScanResult:
    """``max_B avg_B w / min_{cells in B} w``."""
    vals = w.evaluate(dom)

    def one(ball):
        sel = vals[_ball_cells(dom, ball)]
        if sel.size == 0:
            return -math.inf
        return _grid_average(sel) / float(np.min(sel))

    return _scan_max((one(b), b) for b in plan.balls())


def apq_constant(
    wv: WeightVector, cfg: ExponentConfig, plan: SamplingPlan, dom: Domain
) -> ScanResult:
    """Multiple-weight constant: ``(avg u^q)^{1/q} prod_i (avg w_i^{-p_i'})^{1/p_i'}``.

    A factor with ``p_i = 1`` is ``(min_B w_i)^{-1}``.
    """
    if len(wv) != cfg.m:
        raise ValueError(f"{len(wv)} weights for m={cfg.m}")
    q = cfg.q
    u = wv.product(dom)
    uq = u.evaluate(dom) ** q
    comp = [w.evaluate(dom) for w in wv]
    n = dom.n

    def one(ball):
        closed = u.centered_on(ball) and all(w.centered_on(ball) for w in wv)
        if closed:
            r = ball.radius
            a_u = u.exponent if u.kind == "power" else 0.0
            val = u.scale * power_average(n, q * a_u, r) ** (1 / q)
            for w, pp in zip(wv, cfg.p_primes):
                a = w.exponent if w.kind == "power" else 0.0
                if math.isinf(pp):
                    # min over the ball of |x|^a: 0 at the center if a > 0
                    mn = r**a if a <= 0 else 0.0
                    val *= math.inf if mn == 0 else 1.0 / (w.scale * mn)
                else:
                    val *= power_average(n, -pp * a, r) ** (1 / pp) / w.scale
            return val
        m = _ball_cells(dom, ball)
        if not m.any():
            return -math.inf
        val = _grid_average(uq[m]) ** (1 / q)
        for vals, pp in zip(comp, cfg.p_primes):
            sel = vals[m]
            if math.isinf(pp):
                val /= float(np.min(sel))
            else:
                val *= _grid_average(sel ** (-pp)) ** (1 / pp)
        return val

    return _scan_max((one(b), b) for b in plan.balls())


def doubling_ratio(
    w: WeightSpec, lam: float, plan: SamplingPlan, dom: Domain
) -> ScanResult:
    """``max_B w(lam B) / w(B)`` by quadrature; ``lam B`` is clipped to the box."""
    if not lam > 1:
        raise ValueError(f"dilation factor must exceed 1, got {lam}")
    vals = w.evaluate(dom)
    h_n = dom.cell_volume

    def ratios():
        for c in plan.centers:
            d = dom.distances(c)
            for r in plan.radii:
                small = float(np.sum(vals[in_ball(d, r)])) * h_n
                if small == 0:
                    continue
                big = float(np.sum(vals[in_ball(d, lam * r)])) * h_n
                yield big / small, Ball(c, r)

    return _scan_max(ratios())


def norm_equivalence_ratio(
    wv: WeightVector, cfg: ExponentConfig, plan: SamplingPlan, dom: Domain
) -> tuple[ScanResult, ScanResult]:
    """Extremes of ``prod ||w_i||_{L^{q_i}(B)} / ||u||_{L^q(B)}`` over plan balls."""
    u = wv.product(dom)
    lo = ScanResult(math.inf)
    hi = ScanResult(-math.inf)
    for ball in plan.balls():
        num = math.prod(
            lq_norm_on_ball(w, qi, ball, dom) for w, qi in zip(wv, cfg.qs)
        )
        den = lq_norm_on_ball(u, cfg.q, ball, dom)
        if den == 0:
            continue
        ratio = num / den
        if ratio < lo.value:
            lo = ScanResult(ratio, ball)
        if ratio > hi.value:
            hi = ScanResult(ratio, ball)
    return lo, hi
