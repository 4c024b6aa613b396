"""Numerical reproduction of the closed-form constants, one row per claim.

Each check returns a :class:`Row`; ``run_all`` drives them for the
``verify-paper`` command.  Tolerances are fixed here and match the test
suite's acceptance module.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import shortest_path

from .formats import jsonable
from .invariants import (
    Quadruple,
    c0_finite,
    delta_ratio,
    embedding_bound,
    gr_alpha,
    hyp_defect,
    p_round_defect,
    ptolemy_defect,
    roundness_finite,
    ultra_lemma_batch,
    BoundCertificate,
)
from .optimize import estimate_c, f_alpha, lineflake_constant, maximize_delta, root_m
from .spaces import EuclideanLine, FiniteMetricSpace, HalfLineAlpha, HyperbolicPlane, LpSpace, Snowflake, restrict

SQRT2 = math.sqrt(2.0)


@dataclass
class Row:
    name: str
    claim: str
    expected: object
    computed: object
    passed: bool
    seconds: float = 0.0
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable(
            {
                "name": self.name,
                "claim": self.claim,
                "expected": self.expected,
                "computed": self.computed,
                "pass": self.passed,
                "seconds": round(self.seconds, 3),
                "detail": self.detail,
            }
        )


def unit_square() -> FiniteMetricSpace:
    return restrict(LpSpace(2, 2), [[0, 0], [1, 0], [1, 1], [0, 1]])


def random_metrics(rng: np.random.Generator, count: int, max_n: int = 12):
    """Random finite metrics: point clouds in l_p planes/spaces and graph path metrics."""
    out = []
    for k in range(count):
        n = int(rng.integers(4, max_n + 1))
        if k % 2 == 0:
            dim = int(rng.integers(1, 4))
            p = float(rng.choice([1.0, 1.5, 2.0, 3.0, math.inf]))
            pts = rng.normal(size=(n, dim)) * rng.uniform(0.1, 10.0)
            out.append(restrict(LpSpace(dim, p), pts))
        else:
            w = rng.uniform(0.1, 5.0, size=(n, n))
            w = np.triu(w, 1)
            w[rng.random((n, n)) < 0.4] = 0
            w = w + w.T
            # chain keeps the graph connected
            for i in range(n - 1):
                if w[i, i + 1] == 0:
                    w[i, i + 1] = w[i + 1, i] = rng.uniform(0.1, 5.0)
            d = shortest_path(w, method="FW", directed=False)
            out.append(FiniteMetricSpace(d))
    return out


def check_euclidean_sqrt2(seed: int = 0) -> Row:
    sq = unit_square()
    t = time.perf_counter()
    res = c0_finite(sq)
    dt = time.perf_counter() - t
    ok = abs(res.value - SQRT2) <= 1e-12
    return Row("euclidean_sqrt2", "C0 of the unit square corners is sqrt(2)", SQRT2, res.value, ok, dt,
               {"witness": res.witness.to_dict()})


def lp_witnesses(p: float):
    """The two quadruples whose ratios are 2^(1/p) and 2^(1-1/p) in the p-normed plane."""
    sp = LpSpace(2, p)
    q1 = Quadruple.from_points(sp, [-1, 1], [1, -1], [-1, -1], [1, 1])
    q2 = Quadruple.from_points(sp, [0, 1], [0, -1], [-1, 0], [1, 0])
    return q1, q2


def _inv(p):
    return 0.0 if math.isinf(p) else 1.0 / p


def check_lp(p: float, seed: int = 0) -> Row:
    t = time.perf_counter()
    q1, q2 = lp_witnesses(p)
    e1, e2 = 2.0 ** _inv(p), 2.0 ** (1.0 - _inv(p))
    r1, r2 = delta_ratio(q1), delta_ratio(q2)
    target = max(e1, e2)
    opt = maximize_delta(LpSpace(2, p), 100_000, 20, seed)
    ok = (
        abs(r1 - e1) <= 1e-12
        and abs(r2 - e2) <= 1e-12
        and target - 1e-3 <= opt.best_value <= target + 1e-6
    )
    name = "lp_values_pinf" if math.isinf(p) else f"lp_values_p{p:g}"
    return Row(name, f"C(l2_p) = max(2^(1/p), 2^(1-1/p)) at p={p}", target,
               {"witness_1": r1, "witness_2": r2, "optimizer": opt.best_value}, ok,
               time.perf_counter() - t, {"witness": opt.witness.to_dict() if opt.witness else None})


def check_lineflake(seed: int = 0) -> Row:
    t = time.perf_counter()
    m, c = root_m(0.5), lineflake_constant(0.5)
    ok = abs(m - 1.25) <= 1e-12 and abs(c - math.sqrt(5) / 2) <= 1e-12
    found = {}
    for a in (0.25, 0.5, 0.75):
        opt = maximize_delta(Snowflake(EuclideanLine(), a), 100_000, 20, seed)
        found[a] = opt.best_value
        ok = ok and abs(opt.best_value - lineflake_constant(a)) <= 1e-4
    return Row("lineflake", "C(R, |x-y|^alpha) = m^alpha with (m-1)^a + (m+1)^a = 2",
               {"m(1/2)": 1.25, "C(1/2)": math.sqrt(5) / 2}, {"m(1/2)": m, "C(1/2)": c, "optimizer": found},
               ok, time.perf_counter() - t)


def check_snowflake_cap(seed: int = 0) -> Row:
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    worst, bad = -math.inf, None
    for sp in random_metrics(rng, 50):
        for a in (0.3, 0.7):
            res = c0_finite(sp.powered(a))
            gap = res.value - 2.0**a
            if gap > worst:
                worst = gap
            if gap > 1e-12 and bad is None:
                bad = res.witness.to_dict()
    ok = worst <= 1e-12
    return Row("snowflake_cap", "C0(X, d^alpha) <= 2^alpha on 50 random metrics, alpha in {0.3, 0.7}",
               "max(C0 - 2^alpha) <= 1e-12", worst, ok, time.perf_counter() - t,
               {"failing_witness": bad} if bad else {})


def check_dinf_snowflake(seed: int = 0) -> Row:
    t = time.perf_counter()
    ok, found = True, {}
    for a in (0.4, 0.8):
        opt = maximize_delta(Snowflake(LpSpace(2, math.inf), a), 100_000, 20, seed)
        found[a] = opt.best_value
        ok = ok and 2.0**a - 1e-3 <= opt.best_value <= 2.0**a + 1e-6
    return Row("dinf_snowflake", "C(R^2, d_inf^alpha) = 2^alpha", {a: 2.0**a for a in found}, found, ok,
               time.perf_counter() - t)


def hyperbolic_samples(seed: int, count: int = 100_000, radius: float = 0.99, tiny: float = 1e-3):
    """Largest halved four-point slack on random disk quadruples, and the largest
    ratio over random quadruples of hyperbolic diameter at most ``tiny``."""
    rng = np.random.default_rng(seed)
    H = HyperbolicPlane()
    pts = [H._sample(rng, count, radius) for _ in range(4)]
    q = Quadruple.from_points(H, *pts)
    slack = 0.5 * float(np.max(hyp_defect(q)))

    centers = H._sample(rng, count, radius)
    # Euclidean offsets of hyperbolic size about 0.4 * tiny at each center
    local = 0.4 * tiny * (1.0 - np.einsum("ij,ij->i", centers, centers)) / 2.0
    small = [centers + local[:, None] * H._sample(rng, count, 0.999999) for _ in range(4)]
    x, y, z, w = small
    pair = Quadruple.from_points(H, x, y, z, w)
    diam = np.max(np.stack(pair.distances), axis=0)
    keep = diam <= tiny
    ratios = [delta_ratio(Quadruple.from_points(H, *order)) for order in ((x, y, z, w), (x, z, y, w), (x, w, y, z))]
    best = float(np.max(np.max(np.stack(ratios), axis=0)[keep]))
    return slack, best, int(keep.sum())


def check_hyperbolic(seed: int = 0) -> Row:
    t = time.perf_counter()
    slack, best, kept = hyperbolic_samples(seed)
    ok = slack <= math.log(2) + 1e-9 and best >= SQRT2 - 1e-2
    return Row("hyperbolic_disk", "H^2: four-point slack/2 <= log 2; small quadruples reach sqrt(2)",
               {"slack_max": math.log(2), "small_sup_min": SQRT2 - 1e-2},
               {"slack": slack, "small_sup": best, "small_count": kept}, ok, time.perf_counter() - t)


def check_gr_alpha(seed: int = 0) -> Row:
    t = time.perf_counter()
    T = 1e8
    ratio = gr_alpha(0.75, T, 4 * T, 0.0, 2 * T) / (f_alpha(0.75) * math.sqrt(T))
    bounded = [gr_alpha(0.25, s, 4 * s, 0.0, 2 * s) for s in (10.0**k for k in range(3, 10))]
    ok = 0.99 <= ratio <= 1.01 and max(bounded) <= 1.0
    return Row("gr_alpha", "Gr_0.75 grows like f(alpha) t^(1/2); Gr_0.25 stays bounded",
               {"ratio": [0.99, 1.01], "bounded_max": 1.0}, {"ratio": ratio, "bounded_max": max(bounded)}, ok,
               time.perf_counter() - t)


def check_roundness(seed: int = 0) -> Row:
    t = time.perf_counter()
    got = {}
    for p in (1.0, 1.5, 2.0):
        sp = restrict(LpSpace(2, p), [[0, 0], [1, 0], [0, 1], [1, 1]])
        got[p] = roundness_finite(sp).value
    ok = all(abs(v - p) <= 1e-6 for p, v in got.items())
    return Row("roundness_oracle", "roundness of {0, e1, e2, e1+e2} in l_p is p", {p: p for p in got}, got, ok,
               time.perf_counter() - t)


def check_ptolemy(seed: int = 0) -> Row:
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    sp = LpSpace(3, 2)
    pts = [rng.normal(size=(100_000, 3)) * rng.uniform(0.01, 100.0, size=(100_000, 1)) for _ in range(4)]
    q = Quadruple.from_points(sp, *pts)
    scale = np.max(np.stack(q.distances), axis=0) ** 2
    pt = float(np.max(ptolemy_defect(q) / scale))
    rd = float(np.max(p_round_defect(q, 2.0) / scale))
    dr = float(np.max(delta_ratio(q)))
    ok = pt <= 1e-9 and rd <= 1e-9 and dr <= SQRT2 + 1e-9
    return Row("ptolemy_2round", "Ptolemaic and 2-round quadruples have ratio <= sqrt(2)",
               {"ptolemy": 1e-9, "round2": 1e-9, "delta": SQRT2 + 1e-9},
               {"ptolemy": pt, "round2": rd, "delta": dr}, ok, time.perf_counter() - t)


def ultra_samples(rng: np.random.Generator, count: int):
    """Rejection-sample symmetric 4x4 arrays satisfying the lemma's hypothesis."""
    got_a, got_l = [], []
    have = 0
    while have < count:
        a = rng.uniform(0.0, 1.0, size=(4 * count, 4, 4)) ** rng.uniform(0.2, 3.0, size=(4 * count, 1, 1))
        a = np.triu(a, 1)
        a = a + np.swapaxes(a, 1, 2)
        lam = rng.uniform(1.0, 2.0, size=4 * count)
        hyp, _ = ultra_lemma_batch(a, lam)
        got_a.append(a[hyp])
        got_l.append(lam[hyp])
        have += int(hyp.sum())
    return np.concatenate(got_a)[:count], np.concatenate(got_l)[:count]


def check_ultra(seed: int = 0) -> Row:
    t = time.perf_counter()
    a, lam = ultra_samples(np.random.default_rng(seed), 10_000)
    hyp, concl = ultra_lemma_batch(a, lam)
    ok = bool(hyp.all() and concl.all())
    return Row("ultra_lemma", "hypothesis-satisfying arrays satisfy the sum conclusion", 10_000,
               int(concl.sum()), ok, time.perf_counter() - t)


def check_embedding(seed: int = 0) -> Row:
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(1000):
        mu, delta = rng.uniform(0, 2), rng.uniform(0, 5)
        C1, C2 = rng.uniform(0.1, 3, size=2)
        L1, L2 = rng.uniform(0, 3, size=2)
        out = embedding_bound(BoundCertificate(mu, delta), C1, L1, C2, L2)
        if out.mu != (C2 / C1) * mu or out.delta != (mu * L2 + L1 + delta) / C1:
            mismatches += 1
    return Row("embedding_bound", "transferred certificate equals the closed formula", 0, mismatches,
               mismatches == 0, time.perf_counter() - t)


def check_scale_profile(seed: int = 0) -> Row:
    t = time.perf_counter()
    prof = estimate_c(HalfLineAlpha(0.75), [10.0, 1e3, 1e5], budget=20_000, seed=seed)
    v = prof.values
    ok = all(b <= a for a, b in zip(v, v[1:])) and v[-1] <= 1.05
    return Row("scale_profile", "half-line metric: scale profile decreases toward C = 1",
               "non-increasing, last <= 1.05", v, ok, time.perf_counter() - t)


CHECKS = {
    "euclidean_sqrt2": check_euclidean_sqrt2,
    "lp_values_p1": lambda seed=0: check_lp(1.0, seed),
    "lp_values_p1.5": lambda seed=0: check_lp(1.5, seed),
    "lp_values_p2": lambda seed=0: check_lp(2.0, seed),
    "lp_values_p3": lambda seed=0: check_lp(3.0, seed),
    "lp_values_pinf": lambda seed=0: check_lp(math.inf, seed),
    "lineflake": check_lineflake,
    "snowflake_cap": check_snowflake_cap,
    "dinf_snowflake": check_dinf_snowflake,
    "hyperbolic_disk": check_hyperbolic,
    "gr_alpha": check_gr_alpha,
    "roundness_oracle": check_roundness,
    "ptolemy_2round": check_ptolemy,
    "ultra_lemma": check_ultra,
    "embedding_bound": check_embedding,
    "scale_profile": check_scale_profile,
}


def run_all(seed: int = 0, only=None) -> list[Row]:
    names = list(CHECKS) if not only else list(only)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks {unknown}; available: {list(CHECKS)}")
    return [CHECKS[n](seed=seed) for n in names]
