import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from conftest import SQRT2, brute_c0, brute_delta

from quasihyp import (
    BoundCertificate,
    DomainError,
    EuclideanLine,
    FiniteMetricSpace,
    GraphVm,
    LpSpace,
    MetricViolationError,
    Provenance,
    Quadruple,
    SizeError,
    Snowflake,
    UndefinedRatioError,
    c0_finite,
    delta_hyp_finite,
    delta_ratio,
    embedding_bound,
    four_point_report,
    gr_alpha,
    gromov_product,
    hyp_defect,
    james_lower_bound,
    midpoint_lower_bound,
    mu_delta_check,
    norm_round_check,
    p_round_defect,
    ptolemy_defect,
    restrict,
    roundness_finite,
    sample,
    ultra_lemma_check,
)
from quasihyp.invariants import lp_roundness, ultra_lemma_batch

coord = st.floats(-50, 50, allow_nan=False)
point2 = st.tuples(coord, coord)


def path_metric(n):
    x = np.arange(n, dtype=float)
    return FiniteMetricSpace(np.abs(x[:, None] - x[None, :]))


# gromov product and quadruple quantities


def test_gromov_product_examples():
    line = EuclideanLine()
    assert gromov_product(line, 0.0, 4.0, 0.0) == 0.0
    assert gromov_product(line, 0.0, 0.0, 5.0) == 5.0
    val = gromov_product(LpSpace(2, 2), [1, 0], [0, 1], [0, 0])
    assert val == pytest.approx((2 - math.sqrt(2)) / 2, rel=1e-15)


def test_delta_ratio_witnesses():
    e = LpSpace(2, 2)
    q = Quadruple.from_points(e, [1, 0], [0, 1], [0, 0], [1, 1])
    assert delta_ratio(q) == pytest.approx(SQRT2, abs=1e-15)
    for p in (1.0, 1.5, 2.0, 3.0):
        q = Quadruple.from_points(LpSpace(2, p), [-1, 1], [1, -1], [-1, -1], [1, 1])
        assert delta_ratio(q) == pytest.approx(2 ** (1 / p), abs=1e-12)


def test_delta_ratio_graph_vm_witness():
    for m in (0.5, 1.0, 2.0, 5.0):
        r = math.sqrt(m * m + 1)
        mu = (r + 1) / (r - 1)
        q = Quadruple.from_points(GraphVm(m), -mu, 1.0, -1.0, mu)
        assert delta_ratio(q) == pytest.approx(math.sqrt(2 - 1 / (m * m + 1)), rel=1e-12)


def test_delta_ratio_dinf_snowflake():
    for n, alpha in ((2, 0.4), (3, 0.8), (4, 0.5)):
        x = np.zeros(n)
        y, z, w = x.copy(), x.copy(), x.copy()
        x[1], y[1], z[0], w[0] = 1, -1, -1, 1
        q = Quadruple.from_points(Snowflake(LpSpace(n, math.inf), alpha), x, y, z, w)
        assert delta_ratio(q) == pytest.approx(2**alpha, rel=1e-14)


def test_delta_ratio_errors():
    zero = Quadruple(0, 0, 0, 0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(UndefinedRatioError):
        delta_ratio(zero)
    broken = Quadruple(0, 1, 2, 3, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    with pytest.raises(MetricViolationError):
        delta_ratio(broken)


def test_ptolemy_defect_examples():
    e = LpSpace(2, 2)
    q = Quadruple.from_points(e, [0, 0], [1, 1], [1, 0], [0, 1])
    assert ptolemy_defect(q) == pytest.approx(0.0, abs=1e-15)
    q = Quadruple.from_points(e, [2, 3], [2, 3], [0, 0], [5, -1])
    dxz, dxw = math.dist((2, 3), (0, 0)), math.dist((2, 3), (5, -1))
    assert ptolemy_defect(q) == pytest.approx(-2 * dxz * dxw, rel=1e-14)


def test_p_round_defect_examples():
    e = LpSpace(2, 2)
    q = Quadruple.from_points(e, [0, 0], [1, 1], [1, 0], [0, 1])
    assert p_round_defect(q, 2.0) == pytest.approx(0.0, abs=1e-14)
    assert p_round_defect(q, 3.0) == pytest.approx(2 * 2**1.5 - 4, rel=1e-14)
    with pytest.raises(DomainError):
        p_round_defect(q, 0.5)


def test_four_point_report_serializes():
    q = Quadruple.from_points(LpSpace(2, 2), [0, 0], [1, 1], [1, 0], [0, 1])
    rep = four_point_report(q, ps=(1.0, 2.0, 3.0))
    d = rep.to_dict()
    assert set(d) == {"delta_ratio", "hyp_defect", "ptolemy_defect", "p_round_defect"}
    assert d["delta_ratio"] == pytest.approx(SQRT2)
    assert set(d["p_round_defect"]) == {"1.0", "2.0", "3.0"}


@settings(max_examples=200, deadline=None)
@given(point2, point2, point2, point2, st.sampled_from([1.0, 2.0, 3.0, math.inf]), st.floats(0.01, 100))
def test_delta_ratio_symmetry_scale_and_cap(x, y, z, w, p, lam):
    sp = LpSpace(2, p)
    q = Quadruple.from_points(sp, x, y, z, w)
    if max(q.distances) == 0:
        return
    r = delta_ratio(q)
    assert 0 <= r <= 2 + 1e-12
    assert delta_ratio(Quadruple.from_points(sp, y, x, z, w)) == pytest.approx(r, rel=1e-12)
    assert delta_ratio(Quadruple.from_points(sp, z, w, x, y)) == pytest.approx(r, rel=1e-12)
    scaled = Quadruple(*(q.x, q.y, q.z, q.w), *(lam * d for d in q.distances))
    assert delta_ratio(scaled) == pytest.approx(r, rel=1e-12)
    m = max(q.sums[1], q.sums[2])
    assert hyp_defect(q) == pytest.approx(r * m - m, abs=1e-9 * (1 + m))


@settings(max_examples=300, deadline=None)
@given(st.lists(st.tuples(coord, coord, coord), min_size=4, max_size=4))
def test_ptolemy_and_round_imply_sqrt2(pts):
    q = Quadruple.from_points(LpSpace(3, 2), *pts)
    if max(q.distances) == 0:
        return
    scale = max(q.distances) ** 2
    assert ptolemy_defect(q) <= 1e-12 * scale
    assert p_round_defect(q, 2.0) <= 1e-12 * scale
    assert delta_ratio(q) <= SQRT2 + 1e-9


# finite suprema


def test_c0_unit_square(unit_square):
    value, witness = c0_finite(unit_square)
    assert value == pytest.approx(SQRT2, abs=1e-12)
    assert {witness.x, witness.y} in ({0, 2}, {1, 3})
    assert delta_ratio(witness) == value


def test_c0_two_points():
    res = c0_finite(FiniteMetricSpace(np.array([[0.0, 3.0], [3.0, 0.0]])))
    assert res.value == 1.0
    assert res.exhaustive and res.evaluated == 16


def test_c0_errors():
    with pytest.raises(SizeError):
        c0_finite(FiniteMetricSpace(np.zeros((1, 1))))
    with pytest.raises(UndefinedRatioError):
        c0_finite(FiniteMetricSpace(np.zeros((3, 3))))
    big = restrict(EuclideanLine(), np.arange(61.0))
    with pytest.raises(SizeError):
        c0_finite(big)
    res = c0_finite(big, budget=5000, seed=1)
    assert not res.exhaustive and res.value <= 1 + 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_c0_matches_brute_force(seed):
    sp = LpSpace(2, 2)
    fs = restrict(sp, sample(sp, 6, (-1, 1), seed=seed))
    assert c0_finite(fs).value == pytest.approx(brute_c0(fs.dist), rel=1e-14)
    assert delta_hyp_finite(fs).value == pytest.approx(brute_delta(fs.dist), rel=1e-12, abs=1e-15)


def test_c0_deterministic_tie_break():
    d = restrict(LpSpace(2, 2), [[0, 0], [1, 0], [1, 1], [0, 1]]).dist
    w1 = c0_finite(d).witness
    w2 = c0_finite(d.copy()).witness
    assert (w1.x, w1.y, w1.z, w1.w) == (w2.x, w2.y, w2.z, w2.w)
    best = brute_c0(d)
    first = next(
        t for t in itertools.product(range(4), repeat=4)
        if max(d[t[0], t[2]] + d[t[1], t[3]], d[t[0], t[3]] + d[t[1], t[2]]) > 0
        and (d[t[0], t[1]] + d[t[2], t[3]]) / max(d[t[0], t[2]] + d[t[1], t[3]], d[t[0], t[3]] + d[t[1], t[2]]) == best
    )
    assert (w1.x, w1.y, w1.z, w1.w) == first


def test_delta_hyp_examples(unit_square):
    assert delta_hyp_finite(path_metric(4)).value == 0.0
    assert delta_hyp_finite(unit_square).value == pytest.approx(SQRT2 - 1, abs=1e-15)
    sp = LpSpace(2, 2)
    tri = restrict(sp, sample(sp, 3, (-5, 5), seed=9))
    assert delta_hyp_finite(tri).value == 0.0
    assert delta_hyp_finite(FiniteMetricSpace(np.zeros((1, 1)))).value == 0.0


def test_c0_one_iff_zero_hyperbolic():
    assert c0_finite(path_metric(6)).value == pytest.approx(1.0, abs=1e-15)
    sp = LpSpace(2, 2)
    fs = restrict(sp, sample(sp, 5, (-1, 1), seed=3))
    assert c0_finite(fs).value > 1 and delta_hyp_finite(fs).value > 0


def test_c0_monotone_under_subspace():
    sp = LpSpace(2, 1.5)
    fs = restrict(sp, sample(sp, 9, (-1, 1), seed=5))
    sub = fs.subspace([0, 2, 3, 7, 8])
    assert c0_finite(sub).value <= c0_finite(fs).value


def test_mu_delta_check(unit_square):
    assert mu_delta_check(unit_square, BoundCertificate(2, 0)).holds
    res = mu_delta_check(unit_square, BoundCertificate(1, 0))
    assert not res.holds
    assert {res.witness.x, res.witness.y} in ({0, 2}, {1, 3})
    assert mu_delta_check(unit_square, BoundCertificate(SQRT2, 0)).holds
    assert mu_delta_check(unit_square, BoundCertificate(1, SQRT2 - 1)).holds


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 7), st.sampled_from([1.0, 2.0, math.inf]))
def test_any_metric_is_2_0(seed, n, p):
    sp = LpSpace(3, p)
    fs = restrict(sp, sample(sp, n, (-3, 3), seed=seed))
    assert mu_delta_check(fs, BoundCertificate(2, 0)).holds
    if not fs.degenerate:
        assert 1 - 1e-12 <= c0_finite(fs).value <= 2 + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 9), st.floats(0.1, 1.0))
def test_snowflake_cap_property(seed, n, alpha):
    sp = LpSpace(2, 2)
    fs = restrict(sp, sample(sp, n, (-3, 3), seed=seed))
    assert c0_finite(fs.powered(alpha)).value <= 2**alpha + 1e-12


# roundness


@pytest.mark.parametrize("p", [1.0, 1.25, 1.5, 2.0])
def test_roundness_lp_square(p):
    fs = restrict(LpSpace(2, p), [[0, 0], [1, 0], [0, 1], [1, 1]])
    res = roundness_finite(fs)
    assert res.value == pytest.approx(p, abs=1e-6)
    assert not res.at_cap and res.monotone_verified


def test_roundness_cap_and_euclidean():
    two = FiniteMetricSpace(np.array([[0.0, 1.0], [1.0, 0.0]]))
    res = roundness_finite(two)
    assert res.at_cap and res.value == 64.0
    sp = LpSpace(2, 2)
    fs = restrict(sp, sample(sp, 8, (-1, 1), seed=0))
    assert roundness_finite(fs).value >= 2 - 1e-9


def test_roundness_fallback_grid(monkeypatch):
    import quasihyp.invariants as inv

    monkeypatch.setattr(inv, "_round_slope", lambda q, p: -1.0)
    fs = restrict(LpSpace(2, 1.5), [[0, 0], [1, 0], [0, 1], [1, 1]])
    res = roundness_finite(fs)
    assert not res.monotone_verified
    assert res.value == pytest.approx(1.5, abs=1e-6)


# Banach-space helpers


def test_james_bounds():
    assert james_lower_bound(2, grid=4) >= SQRT2 - 1e-15
    assert james_lower_bound(2) == pytest.approx(SQRT2, abs=1e-12)
    assert james_lower_bound(math.inf, grid=8) == pytest.approx(2.0)
    assert midpoint_lower_bound(2) == pytest.approx(SQRT2, abs=1e-12)
    for p in (1.0, 1.5, 3.0):
        assert midpoint_lower_bound(p) >= james_lower_bound(p) - 1e-15
    with pytest.raises(DomainError):
        james_lower_bound(2, grid=3)


def test_james_never_uses_equal_pair():
    # x = y contributes min(0, 2) = 0, so a one-direction circle is useless
    assert james_lower_bound(2, grid=4) > 0


def test_lp_roundness():
    assert lp_roundness(1.5) == 1.5
    assert lp_roundness(3.0) == 1.5
    assert lp_roundness(math.inf) == 1.0


def test_norm_round_check_trivial():
    e = np.array([0.3, -1.2])
    assert norm_round_check(1.5, e, e) == pytest.approx(0.0, abs=1e-14)
    assert norm_round_check(1.5, e, -e) == pytest.approx(0.0, abs=1e-14)


@settings(max_examples=300, deadline=None)
@given(point2, point2)
def test_norm_round_check_l15(e, f):
    scale = (np.abs(e).sum() + np.abs(f).sum() + 1) ** 1.5
    assert norm_round_check(1.5, e, f) <= 1e-10 * scale


@settings(max_examples=200, deadline=None)
@given(point2, point2, st.sampled_from([3.0, 4.0, 6.0]))
def test_norm_round_check_dual_exponent(e, f, p):
    scale = (np.abs(e).sum() + np.abs(f).sum() + 1) ** lp_roundness(p)
    assert norm_round_check(lp_roundness(p), e, f, norm_p=p) <= 1e-10 * scale


# embedding transfer, gr_alpha, ultra lemma


def test_embedding_bound_examples():
    out = embedding_bound(BoundCertificate(1, 0), 1, 0, 1, 0)
    assert (out.mu, out.delta, out.provenance) == (1, 0, Provenance.Transferred)
    out = embedding_bound(BoundCertificate(SQRT2, 0), 1, 0, 2, 0)
    assert out.mu == pytest.approx(2 * SQRT2) and out.delta == 0
    out = embedding_bound(BoundCertificate(1, 0), 1, 1, 1, 1)
    assert (out.mu, out.delta) == (1, 2)
    with pytest.raises(DomainError):
        embedding_bound(BoundCertificate(1, 0), 0, 0, 1, 0)
    with pytest.raises(DomainError):
        BoundCertificate(-1, 0)


def test_certificate_json_round_trip():
    cert = BoundCertificate(1.5, 0.25, Provenance.PaperCited)
    assert cert.to_dict() == {"mu": 1.5, "delta": 0.25, "provenance": "PaperCited"}
    assert BoundCertificate.from_dict(cert.to_dict()) == cert


def test_gr_alpha():
    assert gr_alpha(0.5, 3, 3, 3, 3) == 0.0
    t = 1e6
    assert gr_alpha(0.75, t, 4 * t, 0, 2 * t) > 0
    vals = [gr_alpha(0.25, s, 4 * s, 0, 2 * s) for s in (10.0**k for k in range(3, 10))]
    assert max(vals) <= 1
    with pytest.raises(DomainError):
        gr_alpha(0.5, -1, 0, 0, 0)
    with pytest.raises(DomainError):
        gr_alpha(1.0, 1, 2, 3, 4)


def test_ultra_lemma_examples():
    rng = np.random.default_rng(0)
    sp = LpSpace(2, 2)
    for alpha in (0.3, 0.6, 1.0):
        d = restrict(sp, rng.normal(size=(4, 2))).dist
        assert ultra_lemma_check(d**alpha, 2**alpha) == (True, True)
    assert ultra_lemma_check(np.zeros((4, 4)), 1.3) == (True, True)
    with pytest.raises(DomainError):
        ultra_lemma_check(np.arange(16.0).reshape(4, 4), 1.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_ultra_lemma_property(seed):
    rng = np.random.default_rng(seed)
    a = np.triu(rng.uniform(0, 1, size=(2000, 4, 4)) ** rng.uniform(0.2, 4), 1)
    a = a + np.swapaxes(a, 1, 2)
    lam = rng.uniform(1, 2, size=2000)
    hyp, concl = ultra_lemma_batch(a, lam)
    assert hyp.any()
    assert np.all(concl[hyp])
