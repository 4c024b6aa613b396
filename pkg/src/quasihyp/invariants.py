"""Four-point quantities of quadruples and their exact extrema on finite spaces.

For a quadruple ``(x, y, z, w)`` the three pair sums are

    S1 = xy + zw,   S2 = xz + yw,   S3 = xw + yz

and the four-point ratio is ``S1 / max(S2, S3)``.  All quadruple-level
functions accept either scalar distances or numpy arrays (a batch of
quadruples).

Hyperbolicity defects are reported in the Gromov-product normalisation: the
four-point slack ``S1 - max(S2, S3)`` is halved, so a space is delta-hyperbolic
iff :func:`delta_hyp_finite` returns at most ``delta``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .exceptions import DomainError, MetricViolationError, SizeError, UndefinedRatioError
from .spaces import ATOL, RTOL, FiniteMetricSpace, SpaceSpec, pnorm

EXHAUSTIVE_MAX_N = 60
_BLOCK_ELEMS = 1 << 21


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Quadruple:
    """Four points with their six pairwise distances.

    The labels ``x, y, z, w`` are indices (finite spaces) or coordinates.
    Opposite sides are paired as (xy, zw), (xz, yw), (xw, yz).
    """

    x: Any
    y: Any
    z: Any
    w: Any
    d_xy: Any
    d_zw: Any
    d_xz: Any
    d_yw: Any
    d_xw: Any
    d_yz: Any

    @classmethod
    def from_points(cls, space: SpaceSpec, x, y, z, w) -> "Quadruple":
        dist = space.dist_array
        return cls(
            x, y, z, w,
            dist(x, y), dist(z, w), dist(x, z), dist(y, w), dist(x, w), dist(y, z),
        )

    @classmethod
    def from_matrix(cls, space, i: int, j: int, k: int, l: int) -> "Quadruple":
        d = space.dist if isinstance(space, FiniteMetricSpace) else np.asarray(space, dtype=float)
        i, j, k, l = int(i), int(j), int(k), int(l)
        return cls(
            i, j, k, l,
            float(d[i, j]), float(d[k, l]), float(d[i, k]), float(d[j, l]), float(d[i, l]), float(d[j, k]),
        )

    @property
    def sums(self):
        return (self.d_xy + self.d_zw, self.d_xz + self.d_yw, self.d_xw + self.d_yz)

    @property
    def distances(self):
        return (self.d_xy, self.d_zw, self.d_xz, self.d_yw, self.d_xw, self.d_yz)

    def to_dict(self) -> dict:
        from .formats import jsonable

        names = ("x", "y", "z", "w", "d_xy", "d_zw", "d_xz", "d_yw", "d_xw", "d_yz")
        return {k: jsonable(getattr(self, k)) for k in names}


class Provenance(str, enum.Enum):
    ComputedExact = "ComputedExact"
    Transferred = "Transferred"
    PaperCited = "PaperCited"


@dataclass(frozen=True)
class BoundCertificate:
    """A (mu, delta) pair asserting ``S1 <= mu * max(S2, S3) + 2 * delta`` everywhere."""

    mu: float
    delta: float
    provenance: Provenance = Provenance.ComputedExact

    def __post_init__(self):
        if not self.mu >= 0 or not self.delta >= 0:
            raise DomainError(f"certificate needs mu, delta >= 0, got ({self.mu}, {self.delta})")
        object.__setattr__(self, "provenance", Provenance(self.provenance))

    def to_dict(self) -> dict:
        return {"mu": self.mu, "delta": self.delta, "provenance": self.provenance.value}

    @classmethod
    def from_dict(cls, obj: dict) -> "BoundCertificate":
        return cls(float(obj["mu"]), float(obj["delta"]), Provenance(obj.get("provenance", "ComputedExact")))


@dataclass(frozen=True)
class FourPointReport:
    delta_ratio: float
    hyp_defect: float
    ptolemy_defect: float
    p_round_defect: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "delta_ratio": self.delta_ratio,
            "hyp_defect": self.hyp_defect,
            "ptolemy_defect": self.ptolemy_defect,
            "p_round_defect": {repr(float(p)): v for p, v in self.p_round_defect.items()},
        }


def four_point_report(q: Quadruple, ps=(1.0, 2.0)) -> FourPointReport:
    return FourPointReport(
        delta_ratio=float(delta_ratio(q)),
        hyp_defect=float(hyp_defect(q)),
        ptolemy_defect=float(ptolemy_defect(q)),
        p_round_defect={float(p): float(p_round_defect(q, p)) for p in ps},
    )


# ---------------------------------------------------------------------------
# quadruple-level quantities
# ---------------------------------------------------------------------------


def gromov_product(space: SpaceSpec, x, y, w) -> float:
    """``(x|y)_w = (xw + yw - xy) / 2``."""
    d = space.dist_array
    out = 0.5 * (d(x, w) + d(y, w) - d(x, y))
    return float(out) if np.ndim(out) == 0 else out


def _ratio(s1, s2, s3):
    den = np.maximum(s2, s3)
    if np.any((den <= 0) & (s1 > 0)):
        raise MetricViolationError("max(S2, S3) = 0 with S1 > 0: distances violate the triangle inequality")
    if np.any((den <= 0) & (s1 <= 0)):
        raise UndefinedRatioError("four-point ratio of identical points is undefined")
    return s1 / den


def delta_ratio(q: Quadruple):
    """``(xy + zw) / max(xz + yw, xw + yz)``; lies in ``[0, 2]`` for metric input."""
    out = _ratio(*q.sums)
    return float(out) if np.ndim(out) == 0 else out


def hyp_defect(q: Quadruple):
    """Four-point slack ``S1 - max(S2, S3)`` (not halved)."""
    s1, s2, s3 = q.sums
    out = s1 - np.maximum(s2, s3)
    return float(out) if np.ndim(out) == 0 else out


def ptolemy_defect(q: Quadruple):
    """``xy*zw - (xz*yw + xw*yz)``; non-positive iff the quadruple is Ptolemaic."""
    out = q.d_xy * q.d_zw - (q.d_xz * q.d_yw + q.d_xw * q.d_yz)
    return float(out) if np.ndim(out) == 0 else out


def p_round_defect(q: Quadruple, p: float):
    """``xy^p + zw^p - (xz^p + yw^p + xw^p + yz^p)``; non-positive iff p-round holds on q."""
    if not p >= 1 or math.isinf(p):
        raise DomainError(f"p must lie in [1, inf), got {p}")
    out = (q.d_xy**p + q.d_zw**p) - (q.d_xz**p + q.d_yw**p + q.d_xw**p + q.d_yz**p)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# exhaustive / sampled reduction over index quadruples
# ---------------------------------------------------------------------------


def _block_sums(m: np.ndarray, i0: int, i1: int):
    """Pair sums for all (i, j, k, l) with i in [i0, i1); arrays of shape (b, n, n, n)."""
    mi = m[i0:i1]
    s1 = mi[:, :, None, None] + m[None, None, :, :]
    s2 = mi[:, None, :, None] + m[None, :, None, :]
    s3 = mi[:, None, None, :] + m[None, :, :, None]
    return s1, s2, s3


def _reduce(m: np.ndarray, score, budget: int | None = None, seed: int = 0):
    """Maximise ``score(s1, s2, s3)`` over index quadruples of matrix ``m``.

    Returns ``(best, (i, j, k, l), evaluated, exhaustive)``.  Ties go to the
    lexicographically first quadruple (exhaustive) or the first draw
    (sampled), so the result does not depend on how the work is split.
    """
    n = m.shape[0]
    best, arg = -math.inf, None
    if budget is None:
        if n > EXHAUSTIVE_MAX_N:
            raise SizeError(
                f"{n} points exceeds the exhaustive limit of {EXHAUSTIVE_MAX_N}; pass a sampling budget"
            )
        step = max(1, _BLOCK_ELEMS // max(1, n**3))
        for i0 in range(0, n, step):
            i1 = min(n, i0 + step)
            vals = score(*_block_sums(m, i0, i1))
            flat = int(np.argmax(vals))
            v = vals.flat[flat]
            if v > best:
                best = float(v)
                b, j, k, l = np.unravel_index(flat, vals.shape)
                arg = (int(b) + i0, int(j), int(k), int(l))
        return best, arg, n**4, True

    if budget < 1:
        raise DomainError("sampling budget must be positive")
    rng = np.random.default_rng(seed)
    done = 0
    chunk = 1 << 18
    while done < budget:
        c = min(chunk, budget - done)
        i, j, k, l = rng.integers(0, n, size=(4, c))
        vals = score(m[i, j] + m[k, l], m[i, k] + m[j, l], m[i, l] + m[j, k])
        flat = int(np.argmax(vals))
        if vals[flat] > best:
            best = float(vals[flat])
            arg = (int(i[flat]), int(j[flat]), int(k[flat]), int(l[flat]))
        done += c
    return best, arg, int(budget), False


@dataclass(frozen=True)
class Extremum:
    """Extreme value of a four-point quantity with a quadruple attaining it.

    Unpacks as ``value, witness``.
    """

    value: float
    witness: Quadruple | None
    evaluated: int
    exhaustive: bool

    def __iter__(self):
        return iter((self.value, self.witness))

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "evaluated": self.evaluated,
            "exhaustive": self.exhaustive,
        }


def _ratio_score(s1, s2, s3):
    den = np.maximum(s2, s3)
    bad = (den <= 0) & (s1 > 0)
    if np.any(bad):
        raise MetricViolationError("max(S2, S3) = 0 with S1 > 0: distances violate the triangle inequality")
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(den > 0, s1 / np.where(den > 0, den, 1.0), -np.inf)


def _as_finite(space) -> FiniteMetricSpace:
    if isinstance(space, FiniteMetricSpace):
        return space
    return FiniteMetricSpace(np.asarray(space, dtype=float))


def c0_finite(space, budget: int | None = None, seed: int = 0) -> Extremum:
    """Exact maximum of the four-point ratio over all quadruples of a finite space.

    Repeated points are allowed; only quadruples whose six distances all
    vanish are skipped.  Above 60 points a ``budget`` of random quadruples
    is required and the value becomes a lower bound.
    """
    fs = _as_finite(space)
    if fs.n < 2:
        raise SizeError("the restricted constant needs at least two points")
    best, arg, count, exhaustive = _reduce(fs.dist, _ratio_score, budget, seed)
    if arg is None or best == -math.inf:
        raise UndefinedRatioError("all points coincide; the four-point ratio is undefined everywhere")
    return Extremum(best, Quadruple.from_matrix(fs, *arg), count, exhaustive)


def delta_hyp_finite(space, budget: int | None = None, seed: int = 0) -> Extremum:
    """Least delta with ``S1 <= max(S2, S3) + 2 delta`` on every quadruple.

    This is half the largest four-point slack (Gromov-product convention).
    """
    fs = _as_finite(space)

    def score(s1, s2, s3):
        return s1 - np.maximum(s2, s3)

    best, arg, count, exhaustive = _reduce(fs.dist, score, budget, seed)
    return Extremum(0.5 * max(0.0, best), Quadruple.from_matrix(fs, *arg), count, exhaustive)


@dataclass(frozen=True)
class CheckResult:
    holds: bool
    witness: Quadruple | None
    excess: float

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "excess": self.excess,
        }


def mu_delta_check(space, cert: BoundCertificate, budget: int | None = None, seed: int = 0) -> CheckResult:
    """Check ``S1 <= mu * max(S2, S3) + 2 delta`` on every quadruple.

    Violations within ``1e-12 + 1e-9 * scale`` count as satisfied.  The
    witness is the quadruple with the largest tolerance-adjusted excess, and
    ``excess`` is its raw slack ``S1 - mu * max - 2 delta``.
    """
    fs = _as_finite(space)
    mu, two_delta = cert.mu, 2.0 * cert.delta

    def score(s1, s2, s3):
        rhs = mu * np.maximum(s2, s3) + two_delta
        return (s1 - rhs) - (ATOL + RTOL * (s1 + rhs))

    best, arg, _, _ = _reduce(fs.dist, score, budget, seed)
    q = Quadruple.from_matrix(fs, *arg)
    s1, s2, s3 = q.sums
    excess = s1 - (mu * max(s2, s3) + two_delta)
    return CheckResult(best <= 0, q, float(excess))


# ---------------------------------------------------------------------------
# roundness
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RoundnessResult:
    """Largest p for which every quadruple is p-round.

    ``at_cap`` flags that no violation was found up to ``p_max``;
    ``monotone_verified`` is False when the derivative check failed and the
    value came from the grid-scan fallback.
    """

    value: float
    at_cap: bool
    witness: Quadruple | None
    monotone_verified: bool
    evaluated: int

    def __float__(self):
        return float(self.value)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "at_cap": self.at_cap,
            "witness": None if self.witness is None else self.witness.to_dict(),
            "monotone_verified": self.monotone_verified,
            "evaluated": self.evaluated,
        }


def _round_score(s1, s2, s3):
    return (s1 - s2 - s3) - (ATOL + RTOL * (s1 + s2 + s3))


def roundness_finite(
    space, tol: float = 1e-9, p_max: float = 64.0, budget: int | None = None, seed: int = 0
) -> RoundnessResult:
    """Roundness of a finite space by bisection on p over ``[1, p_max]``.

    Bisection assumes that once a quadruple violates p-roundness it keeps
    violating for larger p.  This is verified on the final violating
    quadruple via the sign of d(defect)/dp; if the check fails the answer is
    recomputed from a grid scan over ``[1, p_max]`` followed by bisection
    inside the last round grid cell.
    """
    fs = _as_finite(space)
    if fs.n < 2:
        raise SizeError("roundness needs at least two points")
    d = fs.dist

    def worst(p):
        return _reduce(d**p, _round_score, budget, seed)

    best, arg, count, _ = worst(p_max)
    if best <= 0:
        return RoundnessResult(p_max, True, None, True, count)

    lo, hi, hi_arg = 1.0, p_max, arg
    best, arg, _, _ = worst(lo)
    if best > 0:
        raise MetricViolationError("space is not 1-round, so it is not a metric space")
    lo, hi = _bisect_round(worst, lo, hi, tol)
    _, hi_arg, _, _ = worst(hi)
    q = Quadruple.from_matrix(fs, *hi_arg)
    verified = _round_slope(q, hi) > 0
    if not verified:
        grid = np.linspace(1.0, p_max, 257)
        ok = [worst(p)[0] <= 0 for p in grid]
        last = max(i for i, good in enumerate(ok) if good)
        if last == len(grid) - 1:
            return RoundnessResult(p_max, True, None, False, count)
        lo, hi = _bisect_round(worst, float(grid[last]), float(grid[last + 1]), tol)
        q = Quadruple.from_matrix(fs, *worst(hi)[1])
    return RoundnessResult(lo, False, q, verified, count)


def _bisect_round(worst, lo, hi, tol):
    # invariant: round at lo, violated at hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if worst(mid)[0] > 0:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _round_slope(q: Quadruple, p: float) -> float:
    """d/dp of the p-round defect of ``q``."""

    def term(a):
        return a**p * math.log(a) if a > 0 else 0.0

    return (term(q.d_xy) + term(q.d_zw)) - sum(term(a) for a in (q.d_xz, q.d_yw, q.d_xw, q.d_yz))


# ---------------------------------------------------------------------------
# normed-plane quantities
# ---------------------------------------------------------------------------


def _unit_circle(p: float, grid: int) -> np.ndarray:
    th = 2.0 * np.pi * np.arange(grid) / grid
    v = np.stack([np.cos(th), np.sin(th)], axis=-1)
    # snap exact zeros so axis and diagonal directions are hit exactly
    v[np.abs(v) < 1e-15] = 0.0
    return v / pnorm(v, p)[:, None]


def _james_pairs(p: float, grid: int):
    if grid < 4:
        raise DomainError("grid must be at least 4")
    p = float(p)
    u = _unit_circle(p, grid)
    minus = pnorm(u[:, None, :] - u[None, :, :], p)
    plus = pnorm(u[:, None, :] + u[None, :, :], p)
    return minus, plus


def james_lower_bound(p: float, grid: int = 360) -> float:
    """Lower bound for the James constant of the p-normed plane.

    Maximises ``min(|x - y|, |x + y|)`` over ``grid`` equally spaced
    directions normalised to the unit sphere (angles ``2 pi k / grid``, so
    axes are included whenever ``4 | grid``).
    """
    minus, plus = _james_pairs(p, grid)
    return float(np.minimum(minus, plus).max())


def midpoint_lower_bound(p: float, grid: int = 360) -> float:
    """Lower bound for ``sup (|x - y| + |x + y|) / 2`` over unit vectors.

    That quantity is the four-point ratio of ``(x, y, 0, x + y)`` and so also
    bounds the quasi-hyperbolicity constant from below.
    """
    minus, plus = _james_pairs(p, grid)
    return float((0.5 * (minus + plus)).max())


def lp_roundness(p: float) -> float:
    """Roundness of a non-trivial L_p space: p for p <= 2, p/(p-1) beyond."""
    if p < 1:
        raise DomainError(f"p must lie in [1, inf], got {p}")
    if math.isinf(p):
        return 1.0
    return p if p <= 2 else p / (p - 1.0)


def norm_round_check(p: float, e, f, norm_p: float | None = None):
    """``(|e| + |f|)^p - (|e - f|^p + |e + f|^p)`` in the ``norm_p``-norm.

    ``norm_p`` defaults to ``p``.  Non-positive whenever the normed space is
    p-round.
    """
    q = p if norm_p is None else norm_p
    e = np.asarray(e, dtype=float)
    f = np.asarray(f, dtype=float)
    ne, nf = pnorm(e, q), pnorm(f, q)
    out = (ne + nf) ** p - (pnorm(e - f, q) ** p + pnorm(e + f, q) ** p)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# transfer and auxiliary checks
# ---------------------------------------------------------------------------


def embedding_bound(cert: BoundCertificate, C1: float, L1: float, C2: float, L2: float) -> BoundCertificate:
    """Pull a four-point inequality back along a quasi-isometric embedding.

    If ``C1 d(u, v) - L1 <= d'(f u, f v) <= C2 d(u, v) + L2`` and the target
    satisfies ``(mu, delta)``, the source satisfies
    ``(C2/C1 * mu, (mu*L2 + L1 + delta) / C1)``.
    """
    if not C1 > 0 or not C2 > 0:
        raise DomainError("embedding constants C1, C2 must be positive")
    if L1 < 0 or L2 < 0:
        raise DomainError("additive constants L1, L2 must be non-negative")
    mu, delta = cert.mu, cert.delta
    return BoundCertificate((C2 / C1) * mu, (mu * L2 + L1 + delta) / C1, Provenance.Transferred)


def _d_alpha(alpha, x, y):
    return math.hypot(x - y, x**alpha - y**alpha)


def gr_alpha(alpha: float, x: float, y: float, z: float, w: float) -> float:
    """Four-point slack of the half-line metric ``d_alpha`` on ``(x, y, z, w)``."""
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if min(x, y, z, w) < 0:
        raise DomainError("gr_alpha arguments must be non-negative")
    d = _d_alpha
    return d(alpha, x, y) + d(alpha, z, w) - max(
        d(alpha, x, z) + d(alpha, y, w), d(alpha, x, w) + d(alpha, y, z)
    )


class UltraCheck(NamedTuple):
    hypothesis: bool
    conclusion: bool


_I3 = np.array([(i, j, k) for i in range(4) for j in range(4) for k in range(4)])
_I4 = np.array([(i, j, k, l) for i in range(4) for j in range(4) for k in range(4) for l in range(4)])


def ultra_lemma_batch(a, lam):
    """Vectorised :func:`ultra_lemma_check` over arrays of shape ``(N, 4, 4)``.

    Returns boolean arrays ``(hypothesis, conclusion)`` of shape ``(N,)``.
    """
    a = np.asarray(a, dtype=float)
    lam = np.broadcast_to(np.asarray(lam, dtype=float), a.shape[:-2])[..., None]
    scale = np.abs(a).max(axis=(-2, -1))[..., None]
    tol = ATOL + RTOL * scale
    i, j, k = _I3.T
    hyp = np.all(a[..., i, j] <= lam * np.maximum(a[..., i, k], a[..., k, j]) + tol, axis=-1)
    i, j, k, l = _I4.T
    lhs = a[..., i, j] + a[..., k, l]
    rhs = lam * np.maximum(a[..., i, k] + a[..., j, l], a[..., i, l] + a[..., j, k])
    concl = np.all(lhs <= rhs + 4 * tol, axis=-1)
    return hyp, concl


def ultra_lemma_check(a, lam: float) -> UltraCheck:
    """Test the ultrametric-type sum lemma on one symmetric 4x4 array.

    The hypothesis is ``a[i,j] <= lam * max(a[i,k], a[k,j])`` for all
    ``i, j, k``; the conclusion is ``a[i,j] + a[k,l] <= lam * max(a[i,k] +
    a[j,l], a[i,l] + a[j,k])`` for all ``i, j, k, l``.  Both are always
    evaluated; the conclusion is expected to hold whenever the hypothesis
    does (and ``lam >= 1``).
    """
    a = np.asarray(a, dtype=float)
    if a.shape != (4, 4):
        raise DomainError(f"expected a 4x4 array, got {a.shape}")
    if not np.allclose(a, a.T, rtol=0, atol=0):
        raise DomainError("array must be symmetric")
    if lam < 1:
        raise DomainError("lambda must be >= 1")
    hyp, concl = ultra_lemma_batch(a[None], lam)
    return UltraCheck(bool(hyp[0]), bool(concl[0]))
