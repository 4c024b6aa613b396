import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quasihyp import (
    DomainError,
    EuclideanLine,
    FiniteMetricSpace,
    GraphVm,
    HalfLineAlpha,
    HyperbolicPlane,
    LpSpace,
    MetricViolationError,
    ShapeError,
    Snowflake,
    distance,
    restrict,
    sample,
    validate_metric,
)
from quasihyp.spaces import pnorm

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_lp_antipodal_distance():
    for p in (1.0, 1.5, 2.0, 3.0):
        assert distance(LpSpace(2, p), [-1, 1], [1, -1]) == pytest.approx(2 * 2 ** (1 / p), rel=1e-14)
    assert distance(LpSpace(2, 2), [-1, 1], [1, -1]) == pytest.approx(2 * math.sqrt(2), rel=1e-15)
    assert distance(LpSpace(2, math.inf), [-1, 1], [1, -1]) == 2.0


def test_identity_distance_is_zero():
    pt = {
        EuclideanLine(): 3.5,
        LpSpace(3, 1.5): [1.0, -2.0, 0.5],
        HalfLineAlpha(0.3): 7.0,
        GraphVm(2.0): -1.5,
        HyperbolicPlane(): [0.3, -0.4],
        Snowflake(LpSpace(2, math.inf), 0.5): [1.0, 2.0],
    }
    for space, a in pt.items():
        assert distance(space, a, a) == 0.0


def test_half_line_alpha_value():
    # (1 + (2^0.75 - 1)^2)^(1/2)
    expected = math.sqrt(1.0 + (2.0**0.75 - 1.0) ** 2)
    assert distance(HalfLineAlpha(0.75), 1.0, 2.0) == pytest.approx(expected, rel=1e-15)


def test_graph_vm_closed_form():
    m = 1.7
    u, v = -0.4, 2.1
    expected = math.dist((u, m * abs(u)), (v, m * abs(v)))
    assert distance(GraphVm(m), u, v) == pytest.approx(expected, rel=1e-14)


def test_hyperbolic_matches_arcosh():
    H = HyperbolicPlane()
    a, b = np.array([0.1, 0.7]), np.array([-0.5, 0.2])
    num = 2 * np.sum((a - b) ** 2)
    den = (1 - a @ a) * (1 - b @ b)
    assert distance(H, a, b) == pytest.approx(math.acosh(1 + num / den), rel=1e-13)
    # distance from the origin is 2 artanh(r)
    assert distance(H, [0, 0], [0.5, 0]) == pytest.approx(2 * math.atanh(0.5), rel=1e-14)


def test_domain_errors():
    with pytest.raises(DomainError):
        distance(HyperbolicPlane(), [1.0, 0.0], [0, 0])
    with pytest.raises(DomainError):
        distance(HalfLineAlpha(0.5), -1.0, 2.0)
    with pytest.raises(DomainError):
        Snowflake(EuclideanLine(), 0.0)
    with pytest.raises(DomainError):
        Snowflake(EuclideanLine(), 1.5)
    with pytest.raises(DomainError):
        HalfLineAlpha(1.0)
    with pytest.raises(DomainError):
        LpSpace(2, 0.5)
    with pytest.raises(DomainError):
        GraphVm(-1.0)


def test_validate_metric_examples():
    assert validate_metric([[0, 1], [1, 0]]) == []
    found = validate_metric([[0, 1], [2, 0]])
    assert [(v.kind, tuple(v.indices)) for v in found] == [("asymmetry", (0, 1))]
    tri = validate_metric([[0, 1, 3], [1, 0, 1], [3, 1, 0]])
    assert len(tri) == 1
    assert tri[0].kind == "triangle"
    assert tuple(tri[0].indices) == (0, 2, 1)
    assert tri[0].magnitude == pytest.approx(1.0)


def test_validate_metric_other_kinds():
    kinds = {v.kind for v in validate_metric([[0.5, -1], [-1, 0]])}
    assert {"diagonal", "negative"} <= kinds
    assert validate_metric([[0, math.nan], [math.nan, 0]])[0].kind == "nonfinite"
    # inside tolerance counts as satisfied
    eps = 1e-11
    assert validate_metric([[0, 1, 2 + eps], [1, 0, 1], [2 + eps, 1, 0]]) == []


def test_validate_metric_shape():
    with pytest.raises(ShapeError):
        validate_metric([[0, 1, 2], [1, 0, 1]])


def test_finite_space_rejects_bad_matrix():
    with pytest.raises(MetricViolationError) as info:
        FiniteMetricSpace(np.array([[0, 1, 3], [1, 0, 1], [3, 1, 0]], dtype=float))
    assert info.value.violations


def test_sample_deterministic_and_contained():
    a = sample(EuclideanLine(), 4, (0, 10), seed=7)
    b = sample(EuclideanLine(), 4, (0, 10), seed=7)
    assert np.array_equal(a, b)
    assert a.shape == (4,) and np.all((0 <= a) & (a <= 10))
    h = sample(HyperbolicPlane(), 100, 0.9, seed=1)
    assert h.shape == (100, 2) and np.all(np.linalg.norm(h, axis=1) <= 0.9)
    box = sample(LpSpace(3, 1), 50, (-1, 1), seed=2)
    assert box.shape == (50, 3) and np.all(np.abs(box) <= 1)


def test_sample_disk_is_area_uniform():
    h = sample(HyperbolicPlane(), 20000, 0.9, seed=3)
    r = np.linalg.norm(h, axis=1) / 0.9
    # area-uniform radii have P(r <= 1/2) = 1/4
    assert abs(np.mean(r <= 0.5) - 0.25) < 0.02


def test_sample_degenerate_bounds():
    with pytest.raises(DomainError):
        sample(EuclideanLine(), 3, (1, 1))
    with pytest.raises(DomainError):
        sample(HyperbolicPlane(), 3, 1.0)


def test_restrict_unit_square(unit_square):
    d = unit_square.dist
    assert d[0, 1] == d[1, 2] == d[2, 3] == d[0, 3] == 1.0
    assert d[0, 2] == pytest.approx(math.sqrt(2)) and d[1, 3] == pytest.approx(math.sqrt(2))


def test_restrict_duplicates_flagged():
    fs = restrict(LpSpace(2, 2), [[1, 1], [1, 1]])
    assert np.array_equal(fs.dist, np.zeros((2, 2)))
    assert fs.degenerate


def test_restrict_matches_pairwise():
    sp = LpSpace(2, 3)
    pts = sample(sp, 5, (-2, 2), seed=4)
    fs = restrict(sp, pts)
    for i in range(5):
        for j in range(5):
            ref = (abs(pts[i, 0] - pts[j, 0]) ** 3 + abs(pts[i, 1] - pts[j, 1]) ** 3) ** (1 / 3)
            assert fs.dist[i, j] == pytest.approx(ref, rel=1e-14, abs=1e-15)
    assert validate_metric(fs.dist) == []


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=2, max_size=8), st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf]))
def test_restrict_always_valid(points, p):
    fs = restrict(LpSpace(2, p), points)
    assert validate_metric(fs.dist) == []


@settings(max_examples=100, deadline=None)
@given(st.tuples(finite, finite), st.tuples(finite, finite), st.floats(0.05, 1.0))
def test_snowflake_is_power(a, b, alpha):
    base = LpSpace(2, 2)
    assert distance(Snowflake(base, alpha), a, b) == pytest.approx(distance(base, a, b) ** alpha, rel=1e-15)


@settings(max_examples=100, deadline=None)
@given(finite, finite, st.floats(0.05, 1.0), st.floats(0.05, 1.0))
def test_nested_snowflake(x, y, a, b):
    nested = Snowflake(Snowflake(EuclideanLine(), a), b)
    flat = Snowflake(EuclideanLine(), a * b)
    assert nested.total_alpha == pytest.approx(a * b)
    assert distance(nested, x, y) == pytest.approx(distance(flat, x, y), rel=1e-12)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1e6), st.floats(0, 1e6), st.floats(0.01, 0.5))
def test_half_line_rough_isometry(x, y, alpha):
    gap = distance(HalfLineAlpha(alpha), x, y) - abs(x - y)
    assert -1e-9 * (1 + abs(x - y)) <= gap <= 1 + 1e-9


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=4, max_size=4),
    st.sampled_from([1.0, 1.5, 2.0, 3.0]),
    st.sampled_from([1.5, 2.0, 3.0, math.inf]),
)
def test_norm_comparison(x, p, q):
    if q < p:
        p, q = q, p
    x = np.array(x)
    n = len(x)
    lp, lq = pnorm(x, p), pnorm(x, q)
    assert lq <= lp * (1 + 1e-12) + 1e-300
    expo = 1 / p - (0 if math.isinf(q) else 1 / q)
    assert lp <= n**expo * lq * (1 + 1e-12) + 1e-300
