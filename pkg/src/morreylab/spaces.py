"""Weighted Lebesgue, weak Lebesgue, generalized weighted Morrey and BMO norms.

All sups over ``(x, r)`` run over a :class:`~morreylab.grid.SamplingPlan`;
all integrals use the cell-center rule, so ``w(B)`` in the Morrey prefactor and
in mass-type :class:`PhiSpec` kinds is the same number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import (
    Ball,
    Domain,
    GridFunction,
    SamplingPlan,
    ScanResult,
    in_ball,
)
from .weights import WeightSpec, weight_mass

__all__ = [
    "PhiSpec",
    "SamplingPlan",
    "lp_norm",
    "weak_lp_quasinorm",
    "morrey_norm",
    "weak_morrey_norm",
    "local_morrey_norm",
    "bmo_norm",
    "bmo_p_oscillation",
    "two_radius_oscillation",
]


@dataclass(frozen=True, eq=False)
class PhiSpec:
    """Positive function ``phi(x, r)``.

    Kinds:

    - ``power``: ``scale * r**beta``
    - ``mass``: ``scale * w(B(x, r))**exponent`` (``weighted_power`` and
      ``lebesgue`` are constructors of this kind)
    - ``product`` / ``ratio`` of two PhiSpecs
    - ``callable``: ``fn(x, r)`` for diagnostics
    """

    kind: str
    beta: float = 0.0
    scale: float = 1.0
    weight: WeightSpec | None = None
    exponent: float = 0.0
    parts: tuple = ()
    fn: Callable | None = None
    label: str = ""

    @classmethod
    def power(cls, beta: float, scale: float = 1.0) -> "PhiSpec":
        return cls("power", beta=float(beta), scale=scale)

    @classmethod
    def weighted_power(cls, kappa: float, p: float, w: WeightSpec) -> "PhiSpec":
        """``w(B)^{(kappa-1)/p}``: the weighted Morrey space ``L^{p,kappa}(w)``."""
        return cls("mass", weight=w, exponent=(kappa - 1.0) / p)

    @classmethod
    def lebesgue(cls, p: float, w: WeightSpec) -> "PhiSpec":
        """``w(B)^{-1/p}``: turns the Morrey norm into ``L^p(w)``."""
        return cls("mass", weight=w, exponent=-1.0 / p)

    @classmethod
    def mass(cls, w: WeightSpec, exponent: float) -> "PhiSpec":
        return cls("mass", weight=w, exponent=exponent)

    @classmethod
    def from_callable(cls, fn, label="callable") -> "PhiSpec":
        return cls("callable", fn=fn, label=label)

    def __mul__(self, other: "PhiSpec") -> "PhiSpec":
        return PhiSpec("product", parts=(self, other))

    def __truediv__(self, other: "PhiSpec") -> "PhiSpec":
        return PhiSpec("ratio", parts=(self, other))

    def scaled(self, c: float) -> "PhiSpec":
        if self.kind in ("power", "mass"):
            return PhiSpec(
                self.kind, self.beta, self.scale * c, self.weight, self.exponent
            )
        return self * PhiSpec.power(0.0, c)

    @property
    def power_exponent(self) -> float | None:
        """``beta`` when this is a pure power (products/ratios folded), else None."""
        if self.kind == "power":
            return self.beta
        if self.kind in ("product", "ratio"):
            a, b = (p.power_exponent for p in self.parts)
            if a is None or b is None:
                return None
            return a + b if self.kind == "product" else a - b
        return None

    @property
    def power_scale(self) -> float | None:
        if self.kind == "power":
            return self.scale
        if self.kind in ("product", "ratio"):
            a, b = (p.power_scale for p in self.parts)
            if a is None or b is None:
                return None
            return a * b if self.kind == "product" else a / b
        return None

    def __call__(self, x, r, dom: Domain | None = None) -> float:
        k = self.kind
        if k == "power":
            return self.scale * float(r) ** self.beta
        if k == "mass":
            if dom is None:
                raise ValueError("mass-type phi needs the domain")
            mass = weight_mass(self.weight, Ball(x, r), dom)
            if mass == 0:
                return math.inf if self.exponent < 0 else 0.0
            return self.scale * mass**self.exponent
        if k == "product":
            return self.parts[0](x, r, dom) * self.parts[1](x, r, dom)
        if k == "ratio":
            return self.parts[0](x, r, dom) / self.parts[1](x, r, dom)
        return float(self.fn(x, r))

    def __repr__(self):
        if self.kind == "power":
            return f"power(beta={self.beta:g})"
        if self.kind == "mass":
            return f"mass({self.weight!r}, e={self.exponent:g})"
        if self.kind in ("product", "ratio"):
            op = "*" if self.kind == "product" else "/"
            return f"({self.parts[0]!r} {op} {self.parts[1]!r})"
        return self.label


# ---------------------------------------------------------------------------
# norms on a single ball


def _weight_values(w: WeightSpec | None, dom: Domain) -> np.ndarray:
    if w is None:
        return np.ones(dom.size)
    return w.evaluate(dom)


def _seq_sum(a: np.ndarray) -> float:
    # sequential, like the cumulative sums of the weak scan, so that the two
    # norms of an indicator are the same floating-point number
    return float(np.cumsum(a)[-1]) if a.size else 0.0


def lp_norm(f: GridFunction, p: float, w: WeightSpec | None, B: Ball) -> float:
    """``(int_B |f|^p w)^{1/p}``."""
    dom = f.domain
    m = dom.mask(B)
    wv = _weight_values(w, dom)[m]
    return (_seq_sum(np.abs(f.values[m]) ** p * wv) * dom.cell_volume) ** (1 / p)


def _weak_from_cells(absf: np.ndarray, wv: np.ndarray, hv: float, p: float) -> float:
    if absf.size == 0:
        return 0.0
    order = np.argsort(-absf, kind="stable")
    v = absf[order]
    cum = np.cumsum(wv[order]) * hv
    # sup over lambda just below each distinct sample value v_k of
    # v_k * w({|f| >= v_k})^{1/p}; use the last index of every tie block
    last = np.r_[v[1:] != v[:-1], True]
    vals = v[last] * cum[last] ** (1 / p)
    return float(np.max(vals))


def weak_lp_quasinorm(
    f: GridFunction, p: float, w: WeightSpec | None, B: Ball
) -> float:
    """``sup_lambda lambda * w({x in B : |f| > lambda})^{1/p}``, exact on the grid."""
    dom = f.domain
    m = dom.mask(B)
    wv = _weight_values(w, dom)[m]
    return _weak_from_cells(np.abs(f.values[m]), wv, dom.cell_volume, p)


# ---------------------------------------------------------------------------
# Morrey scans


def _morrey_scan(f, p, phi, w, plan: SamplingPlan, weak: bool) -> ScanResult:
    dom = f.domain
    absf = np.abs(f.values)
    wv = _weight_values(w, dom)
    hv = dom.cell_volume
    fpw = absf**p * wv
    best = ScanResult(0.0, None)
    for c in plan.centers:
        d = dom.distances(c)
        for r in plan.radii:
            m = in_ball(d, r)
            mass = float(np.sum(wv[m])) * hv
            if mass == 0:
                continue
            if weak:
                inner = _weak_from_cells(absf[m], wv[m], hv, p)
            else:
                inner = (_seq_sum(fpw[m]) * hv) ** (1 / p)
            val = inner / (phi(c, r, dom) * mass ** (1 / p))
            if val > best.value:
                best = ScanResult(val, (c, r))
    return best


def morrey_norm(
    f: GridFunction,
    p: float,
    phi: PhiSpec,
    w: WeightSpec | None,
    plan: SamplingPlan,
) -> ScanResult:
    """``max_{(x,r)} phi(x,r)^{-1} w(B)^{-1/p} ||f||_{L^p(B, w)}`` over the plan."""
    return _morrey_scan(f, p, phi, w, plan, weak=False)


def weak_morrey_norm(f, p, phi, w, plan) -> ScanResult:
    return _morrey_scan(f, p, phi, w, plan, weak=True)


def local_morrey_norm(f, p, phi, w, x0, plan, weak=False) -> ScanResult:
    """Morrey scan with the center pinned at ``x0``."""
    return _morrey_scan(f, p, phi, w, plan.with_centers([x0]), weak=weak)


# ---------------------------------------------------------------------------
# BMO


def _oscillation_scan(b: GridFunction, p: float, plan: SamplingPlan) -> ScanResult:
    dom = b.domain
    best = ScanResult(0.0, None)
    for c in plan.centers:
        d = dom.distances(c)
        for r in plan.radii:
            sel = b.values[in_ball(d, r)]
            if sel.size == 0:
                continue
            dev = np.abs(sel - np.mean(sel))
            if p == 1:
                val = float(np.mean(dev))
            else:
                val = float(np.mean(dev**p)) ** (1 / p)
            if val > best.value:
                best = ScanResult(val, Ball(c, r))
    return best


def bmo_norm(b: GridFunction, plan: SamplingPlan) -> ScanResult:
    """``max_B avg_B |b - b_B|`` (averages w.r.t. the grid measure of B)."""
    return _oscillation_scan(b, 1, plan)


def bmo_p_oscillation(b: GridFunction, p: float, plan: SamplingPlan) -> ScanResult:
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return _oscillation_scan(b, p, plan)


def two_radius_oscillation(
    b: GridFunction, p: float, w: WeightSpec | None, B1: Ball, B2: Ball
) -> float:
    """``(w(B1)^{-1} int_{B1} |b - b_{B2}|^p w)^{1/p}``."""
    dom = b.domain
    avg2 = float(np.mean(b.values[dom.mask(B2)]))
    m1 = dom.mask(B1)
    wv = _weight_values(w, dom)[m1]
    dev = np.abs(b.values[m1] - avg2) ** p
    return (float(np.sum(dev * wv)) / float(np.sum(wv))) ** (1 / p)
