"""Metric space descriptors, distance evaluation and point sampling.

Every descriptor is an immutable dataclass.  Points of coordinate spaces are
numpy arrays whose trailing axis holds the coordinates, so all distance
routines broadcast over leading (batch) axes.  One-dimensional spaces also
accept bare scalars.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar, Sequence

import numpy as np

from .exceptions import DomainError, MetricViolationError, ShapeError

# 64-bit floats throughout; relative comparison tolerance unless stated otherwise
RTOL = 1e-9
ATOL = 1e-12

DISK_MARGIN = 1e-12


# ---------------------------------------------------------------------------
# finite spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    """One failed metric axiom in a distance matrix.

    ``kind`` is one of ``nonfinite``, ``diagonal``, ``negative``,
    ``asymmetry`` or ``triangle``.  For triangle violations ``indices`` is
    ``(i, j, k)``: the entry ``(i, j)`` exceeds the detour through ``k`` by
    ``magnitude``.
    """

    kind: str
    indices: tuple
    magnitude: float

    def to_dict(self) -> dict:
        return {"kind": self.kind, "indices": list(self.indices), "magnitude": self.magnitude}


def validate_metric(dist) -> list[Violation]:
    """Return every metric-axiom violation of a square matrix.

    An empty list means the matrix is a (pseudo-)metric.  Triangle defects
    smaller than ``1e-9 * (1 + d[i, j])`` are ignored; for each offending
    pair ``i < j`` only the worst intermediate point is reported.
    """
    d = np.asarray(dist, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ShapeError(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    out: list[Violation] = []

    bad = ~np.isfinite(d)
    if bad.any():
        for i, j in zip(*np.nonzero(bad)):
            out.append(Violation("nonfinite", (int(i), int(j)), math.nan))
        return out

    for i in range(n):
        if abs(d[i, i]) > ATOL:
            out.append(Violation("diagonal", (i, i), float(abs(d[i, i]))))
    for i, j in zip(*np.nonzero(d < 0)):
        out.append(Violation("negative", (int(i), int(j)), float(-d[i, j])))
    iu, ju = np.triu_indices(n, 1)
    gap = np.abs(d[iu, ju] - d[ju, iu])
    scale = 1.0 + np.maximum(np.abs(d[iu, ju]), np.abs(d[ju, iu]))
    for idx in np.nonzero(gap > RTOL * scale)[0]:
        out.append(Violation("asymmetry", (int(iu[idx]), int(ju[idx])), float(gap[idx])))

    if n >= 3:
        for i in range(n - 1):
            # excess[j, k] = d[i, j] - (d[i, k] + d[k, j])
            excess = d[i, :, None] - (d[i, None, :] + d.T)
            excess[:, i] = -np.inf
            np.fill_diagonal(excess, -np.inf)
            for j in range(i + 1, n):
                k = int(np.argmax(excess[j]))
                if excess[j, k] > RTOL * (1.0 + d[i, j]):
                    out.append(Violation("triangle", (i, j, k), float(excess[j, k])))
    return out


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite (pseudo-)metric space given by its distance matrix.

    The matrix is validated on construction unless ``check=False``; zero
    off-diagonal entries (duplicate points) are legal and reported by
    :attr:`degenerate`.
    """

    dist: np.ndarray
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        d = np.array(self.dist, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1] or d.shape[0] < 1:
            raise ShapeError(f"distance matrix must be square and non-empty, got {d.shape}")
        if self.check:
            violations = validate_metric(d)
            if violations:
                v = violations[0]
                raise MetricViolationError(
                    f"not a metric: {v.kind} at {v.indices} (and {len(violations) - 1} more)",
                    violations,
                )
        d.setflags(write=False)
        object.__setattr__(self, "dist", d)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def degenerate(self) -> bool:
        """True when two distinct indices are at distance zero."""
        off = self.dist[~np.eye(self.n, dtype=bool)]
        return bool(np.any(off == 0))

    def powered(self, alpha: float) -> "FiniteMetricSpace":
        """The snowflake of this space: every entry raised to ``alpha``."""
        if not 0 < alpha <= 1:
            raise DomainError(f"snowflake exponent must lie in (0, 1], got {alpha}")
        return FiniteMetricSpace(self.dist**alpha, check=False)

    def subspace(self, indices: Sequence[int]) -> "FiniteMetricSpace":
        idx = np.asarray(indices, dtype=int)
        return FiniteMetricSpace(self.dist[np.ix_(idx, idx)], check=False)


# ---------------------------------------------------------------------------
# space descriptors
# ---------------------------------------------------------------------------


def _parse_p(p) -> float:
    if isinstance(p, str):
        if p.strip().lower() in ("inf", "infinity", "∞"):
            return math.inf
        p = float(p)
    p = float(p)
    if math.isnan(p) or p < 1:
        raise DomainError(f"p must lie in [1, inf], got {p}")
    return p


def _check_interval(lo: float, hi: float) -> None:
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise DomainError(f"degenerate bounds [{lo}, {hi}]")


def _uniform_ball(rng: np.random.Generator, count: int, dim: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(count) ** (1.0 / dim)
    return g * r[:, None]


class SpaceSpec:
    """Base class for metric space descriptors.

    Subclasses implement :meth:`_dist` (vectorised, no domain checks) and,
    for coordinate spaces, :meth:`_check` and :meth:`_sample`.
    """

    kind: ClassVar[str] = ""
    default_bounds: ClassVar[object] = (-1.0, 1.0)

    @property
    def dim(self) -> int:
        return 1

    @property
    def parametric(self) -> bool:
        return True

    def params(self) -> dict:
        raise NotImplementedError

    def coords(self, p) -> np.ndarray:
        """Coerce a point (or a batch of points) to an array with a coordinate axis."""
        a = np.asarray(p, dtype=float)
        if self.dim == 1 and (a.ndim == 0 or a.shape[-1] != 1):
            a = a[..., None]
        if a.shape[-1] != self.dim:
            raise DomainError(f"{self.kind} points have {self.dim} coordinates, got shape {a.shape}")
        return a

    def _check(self, a: np.ndarray) -> None:
        if not np.all(np.isfinite(a)):
            raise DomainError(f"non-finite coordinates for {self.kind}")

    def _dist(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dist_array(self, a, b) -> np.ndarray:
        """Checked, broadcasting distance between point arrays."""
        a, b = self.coords(a), self.coords(b)
        self._check(a)
        self._check(b)
        return self._dist(a, b)

    def _sample(self, rng, count, bounds) -> np.ndarray:
        a = np.asarray(bounds, dtype=float) if not np.isscalar(bounds) else None
        if a is None:
            radius = float(bounds)
            if not radius > 0 or not math.isfinite(radius):
                raise DomainError(f"degenerate radius {radius}")
            return _uniform_ball(rng, count, self.dim, radius)
        if a.shape == (2,):
            a = np.tile(a, (self.dim, 1))
        if a.shape != (self.dim, 2):
            raise DomainError(f"bounds must be (lo, hi), a radius, or {self.dim} (lo, hi) pairs")
        for lo, hi in a:
            _check_interval(lo, hi)
        return a[:, 0] + (a[:, 1] - a[:, 0]) * rng.random((count, self.dim))

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params()}


@dataclass(frozen=True)
class EuclideanLine(SpaceSpec):
    kind: ClassVar[str] = "EuclideanLine"

    def params(self) -> dict:
        return {}

    def _dist(self, a, b):
        return np.abs(a[..., 0] - b[..., 0])


@dataclass(frozen=True)
class LpSpace(SpaceSpec):
    """``R^n`` with the p-norm; ``p = math.inf`` selects the max norm."""

    n: int
    p: float
    kind: ClassVar[str] = "LpSpace"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"dimension must be a positive integer, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "p", _parse_p(self.p))

    @property
    def dim(self) -> int:
        return self.n

    def params(self) -> dict:
        return {"n": self.n, "p": "inf" if math.isinf(self.p) else self.p}

    def _dist(self, a, b):
        return pnorm(a - b, self.p)


def pnorm(x, p: float) -> np.ndarray:
    """p-norm along the last axis, ``p`` in ``[1, inf]``."""
    ax = np.abs(np.asarray(x, dtype=float))
    if math.isinf(p):
        return ax.max(axis=-1)
    if p == 1:
        return ax.sum(axis=-1)
    # scaled by the largest entry so tiny or huge vectors do not under/overflow
    top = ax.max(axis=-1, keepdims=True)
    r = ax / np.where(top > 0, top, 1.0)
    if p == 2:
        return top[..., 0] * np.sqrt((r * r).sum(axis=-1))
    return top[..., 0] * ((r**p).sum(axis=-1)) ** (1.0 / p)


@dataclass(frozen=True)
class Snowflake(SpaceSpec):
    """The metric ``d ** alpha`` on the points of ``base``."""

    base: SpaceSpec
    alpha: float
    kind: ClassVar[str] = "Snowflake"

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise DomainError(f"snowflake exponent must lie in (0, 1], got {self.alpha}")
        if not isinstance(self.base, SpaceSpec):
            raise TypeError("Snowflake base must be a SpaceSpec")

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def parametric(self) -> bool:
        return self.base.parametric

    @property
    def default_bounds(self):
        return self.base.default_bounds

    @property
    def total_alpha(self) -> float:
        """Product of the exponents along a chain of nested snowflakes."""
        inner = self.base.total_alpha if isinstance(self.base, Snowflake) else 1.0
        return inner * self.alpha

    def params(self) -> dict:
        return {"base": self.base.to_json(), "alpha": self.alpha}

    def coords(self, p):
        return self.base.coords(p)

    def _check(self, a):
        self.base._check(a)

    def _dist(self, a, b):
        return self.base._dist(a, b) ** self.alpha

    def _sample(self, rng, count, bounds):
        return self.base._sample(rng, count, bounds)


@dataclass(frozen=True)
class HalfLineAlpha(SpaceSpec):
    """``[0, inf)`` with the Euclidean metric of the graph of ``x ** alpha``."""

    alpha: float
    kind: ClassVar[str] = "HalfLineAlpha"
    default_bounds: ClassVar[object] = (0.0, 10.0)

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")

    def params(self) -> dict:
        return {"alpha": self.alpha}

    def _check(self, a):
        super()._check(a)
        if np.any(a < 0):
            raise DomainError("HalfLineAlpha points must be >= 0")

    def _dist(self, a, b):
        x, y = a[..., 0], b[..., 0]
        return np.hypot(x - y, x**self.alpha - y**self.alpha)

    def _sample(self, rng, count, bounds):
        if np.isscalar(bounds):
            bounds = (0.0, float(bounds))
        lo, hi = (float(v) for v in bounds)
        if lo < 0:
            raise DomainError("HalfLineAlpha bounds must be non-negative")
        return super()._sample(rng, count, (lo, hi))


@dataclass(frozen=True)
class GraphVm(SpaceSpec):
    """The graph of ``y = m|x|`` in the Euclidean plane, stored by its x-coordinate."""

    m: float
    kind: ClassVar[str] = "GraphVm"

    def __post_init__(self):
        if not self.m >= 0 or not math.isfinite(self.m):
            raise DomainError(f"slope m must be a non-negative real, got {self.m}")

    def params(self) -> dict:
        return {"m": self.m}

    def _dist(self, a, b):
        u, v = a[..., 0], b[..., 0]
        return np.hypot(u - v, self.m * (np.abs(u) - np.abs(v)))


@dataclass(frozen=True)
class HyperbolicPlane(SpaceSpec):
    """The hyperbolic plane in the Poincaré disk model."""

    kind: ClassVar[str] = "HyperbolicPlane"
    default_bounds: ClassVar[object] = 0.9

    @property
    def dim(self) -> int:
        return 2

    def params(self) -> dict:
        return {}

    def _check(self, a):
        super()._check(a)
        if np.any(np.einsum("...i,...i->...", a, a) >= (1.0 - DISK_MARGIN) ** 2):
            raise DomainError("HyperbolicPlane points must lie strictly inside the unit disk")

    def _dist(self, a, b):
        na = np.einsum("...i,...i->...", a, a)
        nb = np.einsum("...i,...i->...", b, b)
        diff = a - b
        x = 2.0 * np.einsum("...i,...i->...", diff, diff) / ((1.0 - na) * (1.0 - nb))
        # arcosh(1 + x) without cancellation for small x
        return np.log1p(x + np.sqrt(x * (x + 2.0)))

    def _sample(self, rng, count, bounds):
        if not np.isscalar(bounds):
            return super()._sample(rng, count, bounds)
        radius = float(bounds)
        if not 0 < radius < 1:
            raise DomainError(f"disk radius must lie in (0, 1), got {radius}")
        r = radius * np.sqrt(rng.random(count))
        th = 2.0 * np.pi * rng.random(count)
        return np.stack([r * np.cos(th), r * np.sin(th)], axis=-1)


@dataclass(frozen=True, eq=False)
class FiniteMatrix(SpaceSpec):
    """A finite space wrapped as a descriptor; points are integer indices."""

    space: FiniteMetricSpace
    kind: ClassVar[str] = "FiniteMatrix"

    @property
    def parametric(self) -> bool:
        return False

    def params(self) -> dict:
        return {"n": self.space.n, "dist": self.space.dist.tolist()}

    def coords(self, p):
        a = np.asarray(p)
        if not np.issubdtype(a.dtype, np.integer):
            if not np.all(np.equal(np.mod(a, 1), 0)):
                raise DomainError("FiniteMatrix points are integer indices")
            a = a.astype(int)
        if np.any((a < 0) | (a >= self.space.n)):
            raise DomainError(f"index out of range for a {self.space.n}-point space")
        return a

    def _check(self, a):
        pass

    def _dist(self, a, b):
        return self.space.dist[a, b]

    def _sample(self, rng, count, bounds):
        raise TypeError("sampling is only defined for parametric spaces")


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------


def distance(space: SpaceSpec, a, b) -> float:
    """Distance between two points of ``space``.

    Raises :class:`DomainError` for points outside the coordinate domain
    (negative half-line coordinates, points on or beyond the disk boundary).
    """
    d = space.dist_array(a, b)
    return float(d) if np.ndim(d) == 0 else d


def sample(space: SpaceSpec, count: int, bounds=None, seed: int = 0) -> np.ndarray:
    """Draw ``count`` points uniformly from a bounded region of ``space``.

    ``bounds`` is ``(lo, hi)`` applied to every coordinate, a list of
    per-coordinate ``(lo, hi)`` pairs, or a radius (Euclidean ball about the
    origin; area-uniform disk for the hyperbolic plane).  Results are
    deterministic for a fixed seed.  One-dimensional spaces return a flat
    array of reals.
    """
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if bounds is None:
        bounds = space.default_bounds
    rng = np.random.default_rng(seed)
    pts = space._sample(rng, int(count), bounds)
    space._check(pts)
    return pts[:, 0] if space.dim == 1 else pts


def restrict(space: SpaceSpec, points) -> FiniteMetricSpace:
    """The finite subspace spanned by ``points``, as a distance matrix.

    Duplicate points give a pseudo-metric; check ``.degenerate`` on the result.
    """
    if isinstance(space, FiniteMatrix):
        return space.space.subspace(points)
    pts = space.coords(points)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise DomainError("restrict needs at least two points")
    space._check(pts)
    n = pts.shape[0]
    iu, ju = np.triu_indices(n, 1)
    d = np.zeros((n, n))
    d[iu, ju] = space._dist(pts[iu], pts[ju])
    d[ju, iu] = d[iu, ju]
    return FiniteMetricSpace(d)
