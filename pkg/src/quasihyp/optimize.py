"""Numerical search for the four-point ratio supremum, and closed-form constants.

:func:`maximize_delta` and :func:`estimate_c` return LOWER BOUNDS: they
report the best quadruple found by multi-start Nelder-Mead search, which
cannot certify global optimality.  The root solvers (:func:`root_m`,
:func:`diagonal_crossing`) and :func:`f_alpha` evaluate exact constants.

Scale profile
-------------
For ``R > 0`` let ``sup_R`` be the supremum of the four-point ratio over
quadruples with ``max(S2, S3) >= R``.  Then ``C = lim_{R -> inf} sup_R``:

* if the space satisfies ``(mu, delta)`` then on those quadruples the ratio is
  at most ``mu + 2 delta / R``, so ``lim sup_R <= C``;
* if ``mu > lim sup_R`` then for some ``R`` every quadruple with
  ``max(S2, S3) >= R`` satisfies ``S1 <= mu max(S2, S3)``, while every other
  quadruple has ``S1 <= 2 max(S2, S3) < 2R``; so ``(mu, R)`` holds and
  ``C <= lim sup_R``.

``sup_R`` is non-increasing in ``R`` because the feasible sets are nested.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .exceptions import DomainError
from .formats import jsonable
from .invariants import Quadruple
from .spaces import (
    EuclideanLine,
    GraphVm,
    HalfLineAlpha,
    HyperbolicPlane,
    LpSpace,
    Snowflake,
    SpaceSpec,
    pnorm,
)

# pair order: xy, zw, xz, yw, xw, yz
_PI = np.array([0, 2, 0, 1, 0, 1])
_PJ = np.array([1, 3, 2, 3, 3, 2])

_HYP_MAX_RADIUS = 25.0


# ---------------------------------------------------------------------------
# result types
# ---------------------------------------------------------------------------


@dataclass
class OptimizationResult:
    """Best four-point ratio found; a lower bound for the supremum searched.

    ``feasible`` is False when no quadruple met the scale floor (or the
    confined region is too small to contain one); ``best_value`` is then 0.
    """

    best_value: float
    witness: Quadruple | None
    evaluations: int
    restarts: int
    converged: bool
    scale_floor: float | None = None
    feasible: bool = True
    scale_profile: list | None = None

    def to_dict(self) -> dict:
        return jsonable(
            {
                "best_value": self.best_value,
                "bound": "lower",
                "witness": None if self.witness is None else self.witness.to_dict(),
                "evaluations": self.evaluations,
                "restarts": self.restarts,
                "converged": self.converged,
                "scale_floor": self.scale_floor,
                "feasible": self.feasible,
                "scale_profile": self.scale_profile,
            }
        )


@dataclass
class ScaleProfile:
    """Lower bounds for ``sup_R`` at each requested scale.

    ``values`` is made non-increasing by carrying witnesses downward (a
    quadruple feasible at a larger R is feasible at every smaller one);
    ``raw`` keeps the per-scale search results.
    """

    radii: list
    values: list
    raw: list
    evaluations: list
    results: list = field(repr=False, default_factory=list)

    @property
    def rows(self):
        return list(zip(self.radii, self.values, self.evaluations))

    def to_dict(self) -> dict:
        return jsonable(
            {
                "bound": "lower",
                "profile": [
                    {"R": r, "sup_delta": v, "raw": w, "evaluations": e, "feasible": res.feasible}
                    for r, v, w, e, res in zip(self.radii, self.values, self.raw, self.evaluations, self.results)
                ],
            }
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["R", "sup_delta", "evaluations"])
        for r, v, e in self.rows:
            out.writerow([repr(float(r)), repr(float(v)), e])
        return buf.getvalue()


@dataclass(frozen=True)
class LineflakeSolution:
    alpha: float
    m: float
    a: float
    constant: float

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "m": self.m, "a": self.a, "constant": self.constant}


# ---------------------------------------------------------------------------
# charts: unconstrained coordinates -> points in the domain
# ---------------------------------------------------------------------------


def _root_space(space: SpaceSpec) -> SpaceSpec:
    while isinstance(space, Snowflake):
        space = space.base
    return space


def _to_point(space: SpaceSpec, u: np.ndarray) -> np.ndarray:
    base = _root_space(space)
    if isinstance(base, HalfLineAlpha):
        return np.abs(u)
    if isinstance(base, HyperbolicPlane):
        r = np.linalg.norm(u, axis=-1, keepdims=True)
        rc = np.minimum(r, _HYP_MAX_RADIUS)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, np.tanh(0.5 * rc) / np.where(r > 0, r, 1.0), 0.5)
        return u * scale
    return u


def _from_point(space: SpaceSpec, x: np.ndarray) -> np.ndarray:
    base = _root_space(space)
    if isinstance(base, HyperbolicPlane):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            scale = np.where(r > 0, 2.0 * np.arctanh(r) / np.where(r > 0, r, 1.0), 2.0)
        return x * scale
    return np.array(x, dtype=float)


def _project(space: SpaceSpec, x: np.ndarray, bounds) -> np.ndarray:
    """Clamp points into the sampling region (confined search)."""
    if np.isscalar(bounds):
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        lim = float(bounds)
        return np.where(r > lim, x * (lim / np.where(r > 0, r, 1.0)), x)
    b = np.asarray(bounds, dtype=float)
    if b.shape == (2,):
        return np.clip(x, b[0], b[1])
    return np.clip(x, b[:, 0], b[:, 1])


def _region_width(bounds) -> float:
    if np.isscalar(bounds):
        return 2.0 * float(bounds)
    b = np.asarray(bounds, dtype=float).reshape(-1, 2)
    return float(np.max(b[:, 1] - b[:, 0]))


def _scale_bounds(bounds, factor: float):
    if np.isscalar(bounds):
        return float(bounds) * factor
    return (np.asarray(bounds, dtype=float) * factor).tolist()


def _region_diameter(space: SpaceSpec, bounds) -> float | None:
    """Exact diameter of the sampling region for normed spaces and their snowflakes."""
    base = _root_space(space)
    alpha = space.total_alpha if isinstance(space, Snowflake) else 1.0
    if isinstance(base, EuclideanLine):
        lo, hi = (bounds, bounds) if np.isscalar(bounds) else tuple(np.asarray(bounds, float).reshape(-1, 2)[0])
        diam = 2.0 * float(bounds) if np.isscalar(bounds) else hi - lo
    elif isinstance(base, LpSpace):
        if np.isscalar(bounds):
            r, n, p = float(bounds), base.n, base.p
            # largest p-norm of a Euclidean unit vector
            factor = 1.0 if p >= 2 else n ** (1.0 / p - 0.5)
            diam = 2.0 * r * factor
        else:
            b = np.asarray(bounds, dtype=float)
            if b.shape == (2,):
                b = np.tile(b, (base.n, 1))
            diam = float(pnorm(b[:, 1] - b[:, 0], base.p))
    else:
        return None
    return diam**alpha


# ---------------------------------------------------------------------------
# maximisation
# ---------------------------------------------------------------------------


def _objective(space: SpaceSpec, dim: int, scale_floor, bounds, confine: bool):
    floor = 0.0 if scale_floor is None else float(scale_floor)

    def points(v):
        pts = _to_point(space, v.reshape(4, dim))
        if confine:
            pts = _project(space, pts, bounds)
        return pts

    def f(v):
        pts = points(v)
        d = space._dist(pts[_PI], pts[_PJ])
        s = np.array([d[0] + d[1], d[2] + d[3], d[4] + d[5]])
        s.sort()
        # largest over middle pair sum: the ratio maximised over the three pairings
        mid = s[1]
        if floor > 0 and mid < floor:
            # any infeasible point ranks below every feasible one
            return 1.0 + (floor - mid) / floor
        if mid <= 0:
            return 1.0
        return -s[2] / mid

    return f, points


def _witness(space: SpaceSpec, pts: np.ndarray) -> Quadruple:
    """Quadruple whose first pairing carries the largest pair sum."""
    d = space._dist(pts[_PI], pts[_PJ])
    sums = [d[0] + d[1], d[2] + d[3], d[4] + d[5]]
    order = [(0, 1, 2, 3), (0, 2, 1, 3), (0, 3, 1, 2)][int(np.argmax(sums))]
    x, y, z, w = (pts[i] for i in order)
    if space.dim == 1:
        x, y, z, w = (float(p[0]) for p in (x, y, z, w))
    return Quadruple.from_points(space, x, y, z, w)


def _nelder_mead(f, x0, edge, maxfev, xatol):
    n = x0.size
    simplex = np.vstack([x0, x0 + edge * np.eye(n)])
    res = minimize(
        f,
        x0,
        method="Nelder-Mead",
        options={
            "initial_simplex": simplex,
            "maxfev": int(maxfev),
            "xatol": xatol,
            "fatol": 1e-15,
            "adaptive": n > 4,
        },
    )
    return res.x, float(res.fun), int(res.nfev), bool(res.success)


def maximize_delta(
    space: SpaceSpec,
    budget: int = 100_000,
    restarts: int = 20,
    seed: int = 0,
    scale_floor: float | None = None,
    bounds=None,
    confine: bool = False,
    starts=(),
) -> OptimizationResult:
    """Multi-start Nelder-Mead search for the largest four-point ratio.

    The four points are stacked into one coordinate vector; each restart
    draws a random quadruple from ``bounds`` (the space's default region if
    omitted), starts a simplex with edges 10% of the region width, and
    re-launches from its best vertex until its share of ``budget``
    evaluations is spent or a re-launch stops improving.  With
    ``scale_floor = R`` only quadruples with ``max(S2, S3) >= R`` count.
    With ``confine=True`` the search is restricted to the bounded region.
    ``starts`` optionally supplies initial quadruples (arrays of shape
    ``(4, dim)``) used by the first restarts instead of random draws.

    The returned value is a lower bound for the supremum.
    """
    if not space.parametric:
        raise TypeError("maximize_delta needs a parametric space; use c0_finite for distance matrices")
    if budget < 100:
        raise DomainError("budget must be at least 100 evaluations")
    if restarts < 1:
        raise DomainError("restarts must be positive")
    if bounds is None:
        bounds = space.default_bounds
    dim = space.dim

    if confine and scale_floor is not None:
        diam = _region_diameter(space, bounds)
        if diam is not None and scale_floor > 2.0 * diam:
            return OptimizationResult(0.0, None, 0, 0, True, scale_floor, feasible=False)

    f, points = _objective(space, dim, scale_floor, bounds, confine)
    edge = 0.1 * _region_width(bounds)
    if isinstance(_root_space(space), HyperbolicPlane) and np.isscalar(bounds):
        edge = 0.1 * 2.0 * (2.0 * math.atanh(float(bounds)))
    share = max(50, budget // restarts)
    seeds = np.random.SeedSequence(seed).spawn(restarts)

    best_f, best_x, best_conv = math.inf, None, False
    evals = 0
    for r in range(restarts):
        rng = np.random.default_rng(seeds[r])
        x = None
        if r < len(starts):
            cand = _from_point(space, np.asarray(starts[r], dtype=float).reshape(4, dim)).ravel()
            if f(cand) < 0:
                x = cand
        for _ in range(0 if x is not None else 50):
            start = space._sample(rng, 4, bounds)
            cand = _from_point(space, start).ravel()
            if f(cand) < 0:
                x = cand
                break
        evals += 1
        if x is None:
            x = cand
        fx, used, conv, step = f(x), 0, False, edge
        xatol = 1e-10 * max(1.0, float(np.max(np.abs(x))))
        while used < share:
            nx, nf, nfev, ok = _nelder_mead(f, x, step, share - used, xatol)
            used += nfev
            improved = nf < fx - 1e-15
            if nf <= fx:
                x, fx = nx, nf
            if not improved:
                conv = ok
                break
            step = max(step * 0.5, 1e-6 * edge)
        evals += used
        # strict comparison keeps the lowest restart index on ties
        if fx < best_f:
            best_f, best_x, best_conv = fx, x, conv

    if best_f > 0:
        return OptimizationResult(0.0, None, evals, restarts, best_conv, scale_floor, feasible=False)
    pts = points(best_x)
    q = _witness(space, pts)
    from .invariants import delta_ratio

    return OptimizationResult(float(delta_ratio(q)), q, evals, restarts, best_conv, scale_floor)


def estimate_c(
    space: SpaceSpec,
    radii,
    budget: int = 20_000,
    seed: int = 0,
    restarts: int = 10,
    bounds=None,
    confine: bool = False,
) -> ScaleProfile:
    """Scale profile ``R -> sup_R`` whose tail approximates the constant C.

    For unbounded searches the sampling region is widened so that its width
    is at least ``3R``.  Witnesses found at larger R are carried to smaller
    R, so the reported profile is non-increasing.
    """
    radii = [float(r) for r in radii]
    if not radii:
        raise DomainError("need at least one scale")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise DomainError("scales must be strictly ascending")
    if bounds is None:
        bounds = space.default_bounds
    results = []
    warm = ()
    for idx, R in enumerate(radii):
        region = bounds
        if not confine:
            factor = max(1.0, 3.0 * R / _region_width(bounds))
            if isinstance(_root_space(space), HyperbolicPlane):
                factor = 1.0
            region = _scale_bounds(bounds, factor)
        res = maximize_delta(
            space, budget, restarts, seed + idx, scale_floor=R, bounds=region, confine=confine, starts=warm
        )
        results.append(res)
        warm = ()
        if res.witness is not None and idx + 1 < len(radii):
            # previous witness, stretched to the next scale, seeds the first restart
            pts = np.array([np.atleast_1d(getattr(res.witness, k)) for k in "xyzw"], dtype=float)
            if not isinstance(_root_space(space), HyperbolicPlane):
                alpha = space.total_alpha if isinstance(space, Snowflake) else 1.0
                pts = _stretch(space, pts, (radii[idx + 1] / R) ** (1.0 / alpha), radii[idx + 1])
                if confine:
                    pts = _project(space, pts, bounds)
            warm = (pts,)
    raw = [res.best_value if res.feasible else 0.0 for res in results]
    values = list(raw)
    for k in range(len(values) - 2, -1, -1):
        values[k] = max(values[k], values[k + 1])
    return ScaleProfile(radii, values, raw, [res.evaluations for res in results], results)


def _stretch(space: SpaceSpec, pts: np.ndarray, factor: float, floor: float) -> np.ndarray:
    """Scale coordinates by ``factor``, doubling further until the middle pair sum reaches ``floor``."""
    for _ in range(60):
        out = pts * factor
        d = space._dist(out[_PI], out[_PJ])
        if np.sort([d[0] + d[1], d[2] + d[3], d[4] + d[5]])[1] >= floor:
            break
        factor *= 2.0
    return out


# ---------------------------------------------------------------------------
# closed forms for the snowflaked line and the half-line metric
# ---------------------------------------------------------------------------


def bisect_root(fn, lo: float, hi: float, history: list | None = None, max_iter: int = 2000):
    """Bisection for a sign change of ``fn`` on ``[lo, hi]`` to full float precision.

    Requires ``fn(lo) <= 0 <= fn(hi)``.  Returns the endpoint with the
    smaller residual.  When ``history`` is a list, each bracket
    ``(lo, hi, fn(lo), fn(hi))`` is appended to it.
    """
    flo, fhi = fn(lo), fn(hi)
    if flo > 0 or fhi < 0:
        raise DomainError(f"no sign change on [{lo}, {hi}]: f = ({flo}, {fhi})")
    for _ in range(max_iter):
        if history is not None:
            history.append((lo, hi, flo, fhi))
        if flo == 0:
            return lo
        if fhi == 0:
            return hi
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        fm = fn(mid)
        if fm <= 0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
    return lo if abs(flo) <= abs(fhi) else hi


def _check_alpha(alpha: float, closed: bool = True) -> None:
    ok = 0 < alpha <= 1 if closed else 0 < alpha < 1
    if not ok:
        raise DomainError(f"alpha must lie in (0, 1{']' if closed else ')'}, got {alpha}")


def root_m(alpha: float, history: list | None = None) -> float:
    """Unique ``m >= 1`` with ``(m - 1)^alpha + (m + 1)^alpha = 2``."""
    _check_alpha(alpha)

    def h(m):
        return (m - 1.0) ** alpha + (m + 1.0) ** alpha - 2.0

    lo, hi = 1.0, 3.0
    while h(hi) < 0:
        lo, hi = hi, 2.0 * hi
    return bisect_root(h, lo, hi, history)


def lineflake_constant(alpha: float) -> float:
    """Quasi-hyperbolicity constant of the alpha-snowflake of the real line: ``m^alpha``."""
    return root_m(alpha) ** alpha


def _check_D(t: float, s: float) -> None:
    if not (-1 <= t <= 1 and -1 <= s <= 1 and t + s >= 0):
        raise DomainError(f"(t, s) = ({t}, {s}) lies outside the triangle -1 <= t, s <= 1, t + s >= 0")


def F_of(t: float, s: float, alpha: float) -> float:
    """Ratio for the pairing whose denominator is ``(1 - t)^a + (1 - s)^a``."""
    _check_D(t, s)
    den = (1.0 - t) ** alpha + (1.0 - s) ** alpha
    if den == 0:
        raise ZeroDivisionError("F is undefined at (t, s) = (1, 1)")
    return ((1.0 + t) ** alpha + (1.0 + s) ** alpha) / den


def G_of(t: float, s: float, alpha: float) -> float:
    """Ratio for the pairing whose denominator is ``(t + s)^a + 2^a``."""
    _check_D(t, s)
    return ((1.0 + t) ** alpha + (1.0 + s) ** alpha) / ((t + s) ** alpha + 2.0**alpha)


def diagonal_crossing(alpha: float) -> float:
    """The ``a`` in ``(0, 1)`` where ``F(a, a) = G(a, a)``.

    Solved through the equivalent ``(2a)^alpha + 2^alpha = 2 (1 - a)^alpha``,
    which is increasing in ``a``; ``(1 + a) / (1 - a)`` then equals
    :func:`root_m`.
    """
    _check_alpha(alpha)

    def psi(a):
        return (2.0 * a) ** alpha + 2.0**alpha - 2.0 * (1.0 - a) ** alpha

    return bisect_root(psi, 0.0, 1.0)


def diagonal_residual(alpha: float, a: float) -> float:
    """``F(a, a) - G(a, a)`` written out explicitly."""
    lhs = ((1.0 + a) / (1.0 - a)) ** alpha
    rhs = 2.0 * (1.0 + a) ** alpha / ((2.0 * a) ** alpha + 2.0**alpha)
    return lhs - rhs


def snowflake_line(alpha: float) -> LineflakeSolution:
    m = root_m(alpha)
    a = diagonal_crossing(alpha) if alpha < 1 else 0.0
    return LineflakeSolution(alpha=alpha, m=m, a=a, constant=m**alpha)


def f_alpha(alpha: float) -> float:
    """Leading coefficient of the four-point slack growth of the half-line metric.

    Evaluated via ``g(2^alpha)`` with ``g(x) = (x - 2)^2 (x^2 + 4x - 2) / 24``.
    """
    _check_alpha(alpha, closed=True)
    x = 2.0**alpha
    return (x - 2.0) ** 2 * (x * x + 4.0 * x - 2.0) / 24.0


# experiment presets: targets are conjectural or numerical, never asserted
PRESETS = {
    "euclidean-snowflake": {
        "build": lambda alpha: Snowflake(LpSpace(2, 2.0), alpha),
        "note": "conjectured value 2**(alpha/2); numerical exploration only",
        "target": lambda alpha: 2.0 ** (alpha / 2.0),
    },
    "graph-vm": {
        "build": lambda m: GraphVm(m),
        "note": "conjectured value (2 - 1/(m^2 + 1))**0.5; numerical exploration only",
        "target": lambda m: math.sqrt(2.0 - 1.0 / (m * m + 1.0)),
    },
}
