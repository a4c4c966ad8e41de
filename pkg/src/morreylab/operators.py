"""Multilinear fractional maximal and integral operators and their commutators.

Both operators are evaluated pointwise at a set of evaluation points.

The maximal operator scans a log ladder of radii. For every point the cells
are sorted by distance once, so every ball integral on the ladder is a
prefix sum.

The integral operator is the full tuple sum

    h^{mn} sum_{y_1..y_m} prod g_i(y_i) * max(sum |x - y_i|, h/2)^{alpha - mn}.

The kernel depends on the y_i only through their distances to x. So each
factor is first binned by distance value (an exact regrouping of the same
terms), and the m-fold sum runs over distinct distances.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .grid import (
    Domain,
    GridFunction,
    ScanResult,
    _MEMBERSHIP_RTOL,
    ball_volume,
    log_ladder,
)

# cap on kernel-block entries materialized at once
_BLOCK = 1 << 22


def sublattice(dom: Domain, stride: int = 4) -> np.ndarray:
    """Cell centers on every ``stride``-th cell per axis."""
    idx = np.arange(stride // 2, dom.N, stride)
    axes = np.meshgrid(*([dom.axis_centers[idx]] * dom.n), indexing="ij")
    return np.stack([a.ravel() for a in axes], axis=-1)


def default_ladder(dom: Domain, per_octave: int = 8) -> np.ndarray:
    return log_ladder(dom.h, 2 * dom.L * math.sqrt(dom.n), per_octave)


@dataclass(frozen=True, eq=False)
class OperatorRequest:
    fs: tuple
    alpha: float
    bs: tuple | None = None
    points: np.ndarray | None = None
    radii: np.ndarray | None = None
    j: int | None = None
    threads: int = 1

    def __post_init__(self):
        fs = tuple(self.fs)
        if not fs:
            raise ValueError("need at least one input function")
        dom = fs[0].domain
        if any(f.domain != dom for f in fs):
            raise ValueError("input functions live on different domains")
        m, n = len(fs), dom.n
        if not 0 < self.alpha < m * n:
            raise ValueError(f"alpha={self.alpha} outside (0, mn) = (0, {m * n})")
        object.__setattr__(self, "fs", fs)
        if self.bs is not None:
            bs = tuple(self.bs)
            if len(bs) != m or any(b.domain != dom for b in bs):
                raise ValueError("symbols must match the inputs in count and domain")
            object.__setattr__(self, "bs", bs)
        if self.j is not None and not 1 <= self.j <= m:
            raise ValueError(f"component index j={self.j} outside 1..{m}")
        pts = sublattice(dom) if self.points is None else self.points
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if pts.shape[1] != n:
            pts = pts.reshape(-1, n)
        object.__setattr__(self, "points", pts)
        radii = default_ladder(dom) if self.radii is None else self.radii
        radii = np.asarray(radii, dtype=float)
        if radii.size == 0:
            raise ValueError("empty radius ladder")
        if radii[0] < dom.h * (1 - 1e-12):
            raise ValueError(f"ladder starts below the cell size h={dom.h}")
        object.__setattr__(self, "radii", radii)

    @property
    def domain(self) -> Domain:
        return self.fs[0].domain

    @property
    def m(self) -> int:
        return len(self.fs)

    def replace(self, **kw) -> "OperatorRequest":
        args = dict(
            fs=self.fs,
            alpha=self.alpha,
            bs=self.bs,
            points=self.points,
            radii=self.radii,
            j=self.j,
            threads=self.threads,
        )
        args.update(kw)
        return OperatorRequest(**args)


@dataclass(frozen=True, eq=False)
class OperatorOutput:
    domain: Domain
    points: np.ndarray
    values: np.ndarray
    info: dict = field(default_factory=dict)

    def to_grid_function(self) -> GridFunction:
        if len(self.points) != self.domain.size or not np.array_equal(
            self.points, self.domain.centers
        ):
            raise ValueError("output is not on the full grid")
        return GridFunction(self.domain, self.values)


def _map_points(req: OperatorRequest, fn) -> np.ndarray:
    pts = req.points
    if req.threads > 1 and len(pts) > 1:
        with ThreadPoolExecutor(max_workers=req.threads) as ex:
            vals = list(ex.map(fn, pts))
    else:
        vals = [fn(x) for x in pts]
    return np.asarray(vals, dtype=float)


def _factors(req: OperatorRequest, x: np.ndarray, oscillating, absolute: bool):
    """Per-point integrands g_i(y); ``oscillating[i]`` inserts (b_i(x) - b_i(y))."""
    out = []
    bx = None
    for i, f in enumerate(req.fs):
        g = f.values
        if oscillating[i]:
            b = req.bs[i].values
            if bx is None:
                bx = [bb.at(x) for bb in req.bs]
            g = (bx[i] - b) * g
        out.append(np.abs(g) if absolute else g)
    return out


def _oscillation_mask(req: OperatorRequest, mode: str) -> list:
    m = req.m
    if mode == "plain":
        return [False] * m
    if req.bs is None:
        raise ValueError("commutator needs symbols b")
    if mode == "iterated":
        return [True] * m
    if req.j is None:
        raise ValueError("sum commutator needs a component index j")
    return [i == req.j - 1 for i in range(m)]


# ---------------------------------------------------------------------------
# maximal


def _maximal_at(req: OperatorRequest, x: np.ndarray, osc) -> tuple[float, float]:
    dom = req.domain
    d = dom.distances(x)
    order = np.argsort(d, kind="stable")
    ds = d[order]
    idx = np.searchsorted(ds, req.radii * (1 + _MEMBERSHIP_RTOL), side="right")
    gs = _factors(req, x, osc, absolute=True)
    prod = np.ones(len(req.radii))
    for g in gs:
        cs = np.concatenate(([0.0], np.cumsum(g[order]))) * dom.cell_volume
        prod = prod * cs[idx]
    scale = np.array(
        [ball_volume(dom.n, t) ** (-req.m + req.alpha / dom.n) for t in req.radii]
    )
    vals = scale * prod
    k = int(np.argmax(vals))
    return float(vals[k]), float(req.radii[k])


def _maximal(req: OperatorRequest, mode: str) -> OperatorOutput:
    osc = _oscillation_mask(req, mode)
    res = _map_points(req, lambda x: _maximal_at(req, x, osc))
    return OperatorOutput(
        req.domain, req.points, res[:, 0], {"t_star": res[:, 1], "mode": mode}
    )


def frac_maximal(req: OperatorRequest) -> OperatorOutput:
    """``sup_t |B(x,t)|^{-m+alpha/n} prod_i int_{B(x,t)} |f_i|`` on the ladder."""
    return _maximal(req, "plain")


def iterated_commutator_maximal(req: OperatorRequest) -> OperatorOutput:
    return _maximal(req, "iterated")


def sum_commutator_maximal(req: OperatorRequest) -> OperatorOutput:
    """j-th component of the sum commutator; ``req.j=None`` gives the full sum."""
    if req.j is None:
        return _sum_over_components(req, sum_commutator_maximal)
    return _maximal(req, "sum")


def _sum_over_components(req, op) -> OperatorOutput:
    if req.bs is None:
        raise ValueError("commutator needs symbols b")
    parts = [op(req.replace(j=j)) for j in range(1, req.m + 1)]
    total = parts[0].values.copy()
    for p in parts[1:]:
        total = total + p.values
    return OperatorOutput(req.domain, req.points, total, {"components": parts})


# ---------------------------------------------------------------------------
# integral


def _binned(d: np.ndarray, gs: Sequence[np.ndarray]):
    u, inv = np.unique(d, return_inverse=True)
    return u, [np.bincount(inv, weights=g, minlength=u.size) for g in gs]


def _contract(u: np.ndarray, G: list, expo: float, floor: float) -> float:
    """``sum_{k_1..k_m} prod G_i[k_i] * max(sum u[k_i], floor)^expo``."""
    m = len(G)
    if m == 1:
        return float(np.dot(G[0], np.maximum(u, floor) ** expo))
    # drop empty bins so the block work scales with the support
    keep = [np.flatnonzero(g) for g in G]
    if any(k.size == 0 for k in keep):
        return 0.0
    us = [u[k] for k in keep]
    Gs = [g[k] for g, k in zip(G, keep)]
    return _contract_rec(us, Gs, 0.0, expo, floor)


def _contract_rec(us, Gs, shift, expo, floor) -> float:
    if len(Gs) == 2:
        u1, u2 = us
        g1, g2 = Gs
        total = 0.0
        rows = max(1, _BLOCK // max(1, u2.size))
        for s in range(0, u1.size, rows):
            K = np.maximum(shift + u1[s : s + rows, None] + u2[None, :], floor) ** expo
            total += float(g1[s : s + rows] @ (K @ g2))
        return total
    total = 0.0
    for k in range(us[0].size):
        g = Gs[0][k]
        if g != 0:
            total += g * _contract_rec(us[1:], Gs[1:], shift + us[0][k], expo, floor)
    return total


def _integral_at(req: OperatorRequest, x: np.ndarray, osc) -> float:
    dom = req.domain
    d = dom.distances(x)
    gs = _factors(req, x, osc, absolute=False)
    u, G = _binned(d, gs)
    expo = req.alpha - req.m * dom.n
    return _contract(u, G, expo, 0.5 * dom.h) * dom.cell_volume**req.m


def _integral(req: OperatorRequest, mode: str) -> OperatorOutput:
    osc = _oscillation_mask(req, mode)
    vals = _map_points(req, lambda x: _integral_at(req, x, osc))
    return OperatorOutput(req.domain, req.points, vals, {"mode": mode})


def frac_integral(req: OperatorRequest) -> OperatorOutput:
    return _integral(req, "plain")


def iterated_commutator_integral(req: OperatorRequest) -> OperatorOutput:
    """Signed kernel sum with ``prod (b_i(x) - b_i(y_i)) f_i(y_i)``."""
    return _integral(req, "iterated")


def sum_commutator_integral(req: OperatorRequest) -> OperatorOutput:
    if req.j is None:
        return _sum_over_components(req, sum_commutator_integral)
    return _integral(req, "sum")


# ---------------------------------------------------------------------------


def pointwise_domination_check(
    fs: Sequence[GridFunction], alpha: float, points, radii=None
) -> ScanResult:
    """Largest ``M_alpha(f)(x) / I_alpha(|f|)(x)`` over ``points``.

    Points where both sides vanish are skipped and counted in
    ``info["skipped"]``; the per-point ratios are in ``info["ratios"]``.
    """
    absf = tuple(abs(f) for f in fs)
    req = OperatorRequest(absf, alpha, points=points, radii=radii)
    M = frac_maximal(req).values
    I = frac_integral(req).values
    ratios = np.full(len(M), np.nan)
    skipped = 0
    best = ScanResult(0.0, None)
    for k, (a, b) in enumerate(zip(M, I)):
        if b == 0:
            if a == 0:
                skipped += 1
                continue
            ratios[k] = math.inf
        else:
            ratios[k] = a / b
        if ratios[k] > best.value:
            best = ScanResult(float(ratios[k]), tuple(req.points[k]))
    info = {"ratios": ratios, "skipped": skipped, "points": req.points}
    return ScanResult(best.value, best.witness, info)
