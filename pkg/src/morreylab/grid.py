"""Uniform tensor grids, grid functions, balls and cell-center quadrature.

Everything downstream computes on a :class:`Domain`: the box ``[-L, L]^n``
split into ``N`` cells per axis, with samples living at cell centers. A ball
contains a cell exactly when the cell's center lies in the (closed) ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

# relative slack for ball membership, so that centers sitting on a sphere
# are not lost to rounding in the squared-distance computation
_MEMBERSHIP_RTOL = 1e-12

_UNIT_BALL_VOLUME = {1: 2.0, 2: math.pi, 3: 4.0 * math.pi / 3.0}


class NonFiniteError(ArithmeticError):
    """A quantity that must be finite came out inf/nan.

    ``witness`` names where it happened (a cell index, a ball, an ``(x, r, t)``
    triple) so reports can point at it.
    """

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


@dataclass(frozen=True)
class Domain:
    n: int
    L: float
    N: int

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"half-width must be positive, got {self.L}")
        if self.N < 2:
            raise ValueError(f"need at least 2 cells per axis, got {self.N}")

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.N

    @property
    def size(self) -> int:
        return self.N**self.n

    @property
    def cell_volume(self) -> float:
        return self.h**self.n

    @cached_property
    def axis_centers(self) -> np.ndarray:
        # (k + 1/2 - N/2) h is exactly antisymmetric under k -> N-1-k
        c = (np.arange(self.N) + 0.5 - self.N / 2) * self.h
        c.setflags(write=False)
        return c

    @cached_property
    def centers(self) -> np.ndarray:
        """Cell centers, shape ``(N**n, n)``, row-major axis order."""
        axes = np.meshgrid(*([self.axis_centers] * self.n), indexing="ij")
        pts = np.stack([a.ravel() for a in axes], axis=-1)
        pts.setflags(write=False)
        return pts

    def refined(self, factor: int = 2) -> "Domain":
        return Domain(self.n, self.L, self.N * factor)

    def distances(self, x0) -> np.ndarray:
        """Euclidean distance from ``x0`` to every cell center."""
        x0 = as_point(x0, self.n)
        d = self.centers - x0
        return np.sqrt(np.einsum("ij,ij->i", d, d))

    def mask(self, ball: "Ball") -> np.ndarray:
        return in_ball(self.distances(ball.center), ball.radius)


def build_domain(n: int, L: float, N: int) -> Domain:
    return Domain(int(n), float(L), int(N))


def as_point(x, n: int) -> np.ndarray:
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.size == 1 and n > 1:
        p = np.full(n, float(p[0]))
    if p.shape != (n,):
        raise ValueError(f"point {x!r} is not in R^{n}")
    return p


def in_ball(dist: np.ndarray, radius: float) -> np.ndarray:
    return dist <= radius * (1.0 + _MEMBERSHIP_RTOL)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"ball radius must be positive, got {self.radius}")
        object.__setattr__(
            self, "center", tuple(float(c) for c in np.atleast_1d(self.center))
        )

    def scaled(self, lam: float) -> "Ball":
        return Ball(self.center, self.radius * lam)


@dataclass(frozen=True, eq=False)
class GridFunction:
    domain: Domain
    values: np.ndarray
    source: "TestFunctionSpec | None" = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float).ravel()
        if v.size != self.domain.size:
            raise ValueError(
                f"expected {self.domain.size} samples, got {v.size}"
            )
        bad = np.flatnonzero(~np.isfinite(v))
        if bad.size:
            k = int(bad[0])
            raise NonFiniteError(
                f"non-finite sample {v[k]} at cell {k} "
                f"(center {tuple(self.domain.centers[k])})",
                witness=k,
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def map(self, fn) -> "GridFunction":
        return GridFunction(self.domain, fn(self.values))

    def at(self, x) -> float:
        """Value at an arbitrary point: exact for sampled closed forms,
        otherwise the sample of the cell containing ``x``."""
        dom = self.domain
        x = as_point(x, dom.n)
        if self.source is not None:
            return float(self.source.evaluate(x[None, :], dom.h)[0])
        idx = np.clip(np.floor((x + dom.L) / dom.h).astype(int), 0, dom.N - 1)
        return float(self.values[int(np.ravel_multi_index(idx, (dom.N,) * dom.n))])

    def __abs__(self):
        return self.map(np.abs)

    def __neg__(self):
        return self.map(np.negative)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            return GridFunction(self.domain, self.values * c.values)
        return GridFunction(self.domain, self.values * float(c))

    __rmul__ = __mul__

    def __add__(self, c):
        if isinstance(c, GridFunction):
            return GridFunction(self.domain, self.values + c.values)
        return GridFunction(self.domain, self.values + float(c))


# ---------------------------------------------------------------------------
# test functions


_KINDS = (
    "ball-indicator",
    "power-bump",
    "gaussian",
    "log-bump",
    "constant",
    "zero",
    "coordinate",
    "sign",
)


@dataclass(frozen=True)
class TestFunctionSpec:
    """Closed-form function evaluable at cell centers.

    Kinds and parameters:

    - ``ball-indicator``: ``center``, ``radius``
    - ``power-bump``: ``|x - center|^-gamma`` on ``B(center, radius)``
    - ``gaussian``: ``exp(-|x - center|^2 / (2 scale^2))``
    - ``log-bump``: ``log|x - center|``
    - ``constant``: ``value``; ``zero``
    - ``coordinate``: ``x[axis]`` (a linear symbol)
    - ``sign``: ``sign(x[axis] - offset)``

    Singular kinds are clamped at distance ``h/2`` from their singular point.
    """

    __test__ = False  # not a pytest class despite the name

    kind: str
    center: tuple = (0.0,)
    radius: float = 1.0
    gamma: float = 0.5
    scale: float = 1.0
    value: float = 1.0
    axis: int = 0
    offset: float = 0.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown test function kind {self.kind!r}")
        object.__setattr__(
            self, "center", tuple(float(c) for c in np.atleast_1d(self.center))
        )

    @classmethod
    def indicator(cls, center=0.0, radius=1.0):
        return cls("ball-indicator", center=center, radius=radius)

    @classmethod
    def power_bump(cls, gamma, radius=1.0, center=0.0):
        return cls("power-bump", center=center, radius=radius, gamma=gamma)

    @classmethod
    def gaussian(cls, center=0.0, scale=1.0):
        return cls("gaussian", center=center, scale=scale)

    @classmethod
    def log_bump(cls, center=0.0):
        return cls("log-bump", center=center)

    @classmethod
    def constant(cls, value):
        return cls("constant", value=value)

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def coordinate(cls, axis=0):
        return cls("coordinate", axis=axis)

    @classmethod
    def sign(cls, axis=0, offset=0.0):
        return cls("sign", axis=axis, offset=offset)

    def evaluate(self, points: np.ndarray, h: float) -> np.ndarray:
        pts = np.atleast_2d(points)
        n = pts.shape[1]
        k = self.kind
        if k == "zero":
            return np.zeros(len(pts))
        if k == "constant":
            return np.full(len(pts), float(self.value))
        if k == "coordinate":
            return pts[:, self.axis].astype(float)
        if k == "sign":
            return np.sign(pts[:, self.axis] - self.offset)
        d = pts - as_point(self.center, n)
        dist = np.sqrt(np.einsum("ij,ij->i", d, d))
        if k == "ball-indicator":
            return in_ball(dist, self.radius).astype(float)
        if k == "gaussian":
            return np.exp(-(dist**2) / (2.0 * self.scale**2))
        clamped = np.maximum(dist, 0.5 * h)
        if k == "log-bump":
            return np.log(clamped)
        # power-bump
        return np.where(in_ball(dist, self.radius), clamped ** (-self.gamma), 0.0)


def sample_function(spec: TestFunctionSpec, dom: Domain) -> GridFunction:
    return GridFunction(dom, spec.evaluate(dom.centers, dom.h), source=spec)


# ---------------------------------------------------------------------------
# quadrature


def ball_volume(n: int, r: float) -> float:
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")
    return _UNIT_BALL_VOLUME[n] * r**n


def integrate(f: GridFunction, B: Ball) -> float:
    """Cell-center rule: ``h^n`` times the sum of samples whose center is in B."""
    dom = f.domain
    return float(np.sum(f.values[dom.mask(B)])) * dom.cell_volume


def integrate_all(f: GridFunction) -> float:
    return float(np.sum(f.values)) * f.domain.cell_volume


# ---------------------------------------------------------------------------
# scan plans and results


@dataclass(frozen=True)
class ScanResult:
    """A sup/max over a scan together with the point that attains it."""

    value: float
    witness: object = None
    info: dict = field(default_factory=dict, compare=False)

    def __float__(self):
        return float(self.value)

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


def log_ladder(start: float, stop: float, per_octave: int) -> np.ndarray:
    """``start * 2**(j/per_octave)`` up to ``stop``, with ``stop`` appended."""
    if not 0 < start <= stop:
        raise ValueError(f"bad ladder bounds ({start}, {stop})")
    octaves = math.log2(stop / start)
    j = np.arange(int(math.floor(octaves * per_octave + 1e-9)) + 1)
    t = start * 2.0 ** (j / per_octave)
    if t[-1] < stop * (1 - 1e-12):
        t = np.append(t, stop)
    return t


@dataclass(frozen=True)
class SamplingPlan:
    """Discrete realization of ``sup_{x, r}``, ``sup_{t>r}``, ``essinf_{eta>t}``.

    ``centers`` is a tuple of points; ``radii`` a strictly increasing ladder.
    The outer ladders for ``t`` and ``eta`` start at each scanned radius ``r``
    and run on ``r * 2**(j/outer_per_octave)`` up to ``t_max`` / ``eta_max``.
    """

    centers: tuple
    radii: tuple
    t_max: float = 0.0
    eta_max: float = 0.0
    outer_per_octave: int = 8

    def __post_init__(self):
        if not self.centers or not self.radii:
            raise ValueError("sampling plan needs at least one center and radius")
        cs = tuple(tuple(float(c) for c in np.atleast_1d(x)) for x in self.centers)
        rs = tuple(float(r) for r in self.radii)
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise ValueError("plan radii must be strictly increasing")
        if rs[0] <= 0:
            raise ValueError("plan radii must be positive")
        t_max = self.t_max or rs[-1]
        eta_max = self.eta_max or t_max
        if t_max > eta_max:
            raise ValueError(f"t_max={t_max} exceeds eta_max={eta_max}")
        object.__setattr__(self, "centers", cs)
        object.__setattr__(self, "radii", rs)
        object.__setattr__(self, "t_max", float(t_max))
        object.__setattr__(self, "eta_max", float(eta_max))

    @classmethod
    def dyadic(
        cls,
        centers: Sequence = ((0.0,),),
        r_min: float = 1.0,
        octaves: int = 4,
        per_octave: int = 1,
        t_max: float | None = None,
        eta_max: float | None = None,
        outer_per_octave: int = 8,
    ) -> "SamplingPlan":
        k = np.arange(octaves * per_octave + 1)
        radii = tuple(r_min * 2.0 ** (k / per_octave))
        return cls(
            tuple(centers), radii, t_max or 0.0, eta_max or 0.0, outer_per_octave
        )

    @property
    def r_min(self) -> float:
        return self.radii[0]

    @property
    def r_max(self) -> float:
        return self.radii[-1]

    @property
    def octaves(self) -> float:
        return math.log2(self.r_max / self.r_min)

    def check(self, dom: Domain) -> None:
        if self.r_min < dom.h * (1 - 1e-12):
            raise ValueError(
                f"plan r_min={self.r_min} is below the cell size h={dom.h}"
            )
        for c in self.centers:
            if len(c) != dom.n:
                raise ValueError(f"plan center {c} is not in R^{dom.n}")

    def balls(self) -> Iterator[Ball]:
        for c in self.centers:
            for r in self.radii:
                yield Ball(c, r)

    def with_centers(self, centers) -> "SamplingPlan":
        return SamplingPlan(
            tuple(centers), self.radii, self.t_max, self.eta_max, self.outer_per_octave
        )

    def with_radii(self, radii) -> "SamplingPlan":
        radii = tuple(radii)
        t_max = max(self.t_max, radii[-1])
        return SamplingPlan(
            self.centers, radii, t_max, max(self.eta_max, t_max), self.outer_per_octave
        )

    def with_outer(self, t_max: float, eta_max: float) -> "SamplingPlan":
        return SamplingPlan(
            self.centers, self.radii, t_max, eta_max, self.outer_per_octave
        )

    def outer_ladder(self, r: float, upper: float | None = None) -> np.ndarray:
        upper = self.eta_max if upper is None else upper
        return log_ladder(r, max(upper, r), self.outer_per_octave)


def offset_centers(n: int, spread: float, count: int = 8) -> tuple:
    """Origin plus ``count`` offsets at distance ``spread`` (the default scan set)."""
    out = [(0.0,) * n]
    if n == 1:
        steps = [spread * s for k in range(1, count // 2 + 1) for s in (k, -k)]
        steps = [s / (count // 2) for s in steps][:count]
        out.extend((s,) for s in steps)
        return tuple(out)
    for k in range(count):
        ang = 2.0 * math.pi * k / count
        p = [0.0] * n
        p[0], p[1] = spread * math.cos(ang), spread * math.sin(ang)
        out.append(tuple(p))
    return tuple(out)
