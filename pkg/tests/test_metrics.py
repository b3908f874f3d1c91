import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mcdist.metrics import (
    SURVEY_SPECS,
    DistanceSpec,
    Family,
    IncompatibleVectorsError,
    ParameterError,
    canberra,
    chebyshev,
    check_metric_axioms,
    choice_sampler,
    discrete_distance,
    distance,
    euclidean,
    manhattan,
    minkowski,
    rodrigues,
    rowwise_distance,
    squared_euclidean,
    uniform_sampler,
)

ALL_SPECS = SURVEY_SPECS + (DistanceSpec(Family.DISCRETE), DistanceSpec(Family.MINKOWSKI, p=1.5))

coords = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@st.composite
def vector_pairs(draw, max_dim=8):
    n = draw(st.integers(1, max_dim))
    x = draw(arrays(np.float64, n, elements=coords))
    y = draw(arrays(np.float64, n, elements=coords))
    return x, y


@pytest.mark.parametrize(
    "func, x, y, expected",
    [
        (discrete_distance, (0, 0), (0, 0), 0),
        (discrete_distance, (1, 2), (1, 3), 1),
        (discrete_distance, (5,), (5,), 0),
        (lambda x, y: minkowski(2, x, y), (0, 0), (3, 4), 5),
        (lambda x, y: minkowski(1, x, y), (0, 0), (3, 4), 7),
        (lambda x, y: minkowski(0.5, x, y), (0, 0), (1, 1), 4),
        (chebyshev, (1, 2), (4, 0), 3),
        (chebyshev, (0, 0), (0, 0), 0),
        (chebyshev, (-1, 5, 2), (1, 5, 9), 7),
        (squared_euclidean, (0, 0), (3, 4), 25),
        (squared_euclidean, (2,), (2,), 0),
        (squared_euclidean, (1, 1), (2, 3), 5),
        (canberra, (0, 0), (0, 0), 0),
        (canberra, (1,), (3,), 0.5),
        (canberra, (1, -1), (3, 1), 1.5),
        (lambda x, y: rodrigues(1, 1, 1, x, y), (0, 0), (3, 4), 11),
        (lambda x, y: rodrigues(2, 1, 1, x, y), (0, 0), (3, 4), 9),
        (lambda x, y: rodrigues(1, 2, 3, x, y), (0, 0), (1, 1), 7),
        (euclidean, (0, 0), (3, 4), 5),
        (manhattan, (0, 0), (3, 4), 7),
    ],
)
def test_worked_examples(func, x, y, expected):
    assert func(x, y) == pytest.approx(expected, rel=1e-12, abs=0)


@pytest.mark.parametrize(
    "text, x, y, expected",
    [
        ("euclidean", (0, 0), (3, 4), 5),
        ("chebyshev", (1, 2), (4, 0), 3),
        ("rodrigues:p=1,w1=1,w2=1", (0, 0), (3, 4), 11),
    ],
)
def test_dispatch(text, x, y, expected):
    assert distance(DistanceSpec.parse(text), x, y) == pytest.approx(expected)


@pytest.mark.parametrize("spec", ALL_SPECS, ids=str)
def test_dimension_mismatch(spec):
    with pytest.raises(IncompatibleVectorsError):
        distance(spec, (1, 2), (1, 2, 3))


@pytest.mark.parametrize("bad", [0, -1, math.inf, math.nan])
def test_bad_parameters(bad):
    with pytest.raises(ParameterError):
        minkowski(bad, (0,), (1,))
    with pytest.raises(ParameterError):
        rodrigues(1, bad, 1, (0,), (1,))
    with pytest.raises(ParameterError):
        rodrigues(1, 1, bad, (0,), (1,))
    with pytest.raises(ParameterError):
        DistanceSpec(Family.RODRIGUES, p=bad)


def test_nonfinite_vectors_rejected():
    with pytest.raises(ValueError):
        euclidean((0, np.nan), (0, 0))
    with pytest.raises(IncompatibleVectorsError):
        euclidean((), ())


def test_spec_grammar_round_trip():
    for spec in ALL_SPECS:
        assert DistanceSpec.parse(spec.name) == spec
    assert DistanceSpec.parse("minkowski:p=0.5").p == 0.5
    assert DistanceSpec.parse("Rodrigues: p=2").w1 == 1.0
    assert DistanceSpec.parse("sqeuclidean").family is Family.SQUARED_EUCLIDEAN


@pytest.mark.parametrize(
    "text", ["bogus", "minkowski", "minkowski:q=2", "euclidean:p=2", "rodrigues:p=1,p=2", "minkowski:p=abc", "minkowski:p"]
)
def test_spec_grammar_rejects(text):
    with pytest.raises(ParameterError):
        DistanceSpec.parse(text)


def test_survey_rows():
    assert len(SURVEY_SPECS) == 15
    assert len(set(SURVEY_SPECS)) == 15
    assert all(s.w1 in (None, 1.0) and s.w2 in (None, 1.0) for s in SURVEY_SPECS)


@pytest.mark.parametrize(
    "text, metric",
    [
        ("rodrigues:p=1,w1=1,w2=1", True),
        ("rodrigues:p=0.5", False),
        ("minkowski:p=0.75", False),
        ("minkowski:p=1", True),
        ("squared_euclidean", False),
        ("canberra", True),
        ("discrete", True),
        ("chebyshev", True),
    ],
)
def test_is_metric(text, metric):
    assert DistanceSpec.parse(text).is_metric is metric


@given(vector_pairs())
def test_nonnegative_and_identity(pair):
    x, y = pair
    for spec in ALL_SPECS:
        assert distance(spec, x, y) >= 0
        assert distance(spec, x, x) == 0.0


@given(vector_pairs())
def test_minkowski_special_cases(pair):
    x, y = pair
    direct = sum(abs(a - b) for a, b in zip(x, y))
    assert minkowski(1, x, y) == pytest.approx(direct, rel=1e-12, abs=1e-300)
    assert minkowski(2, x, y) ** 2 == pytest.approx(squared_euclidean(x, y), rel=1e-9, abs=1e-300)


@given(vector_pairs(), st.floats(1, 8), st.floats(0.1, 10), st.floats(0.1, 10))
def test_rodrigues_is_weighted_sum(pair, p, w1, w2):
    x, y = pair
    assert rodrigues(p, w1, w2, x, y) == w1 * minkowski(p, x, y) + w2 * chebyshev(x, y)


@given(vector_pairs(), st.floats(1, 16))
def test_chebyshev_below_minkowski(pair, p):
    x, y = pair
    assert chebyshev(x, y) <= minkowski(p, x, y) * (1 + 1e-12)


@given(vector_pairs(), st.floats(0.01, 100))
def test_weight_scaling_scales_value(pair, c):
    x, y = pair
    base = rodrigues(1.5, 1.0, 2.0, x, y)
    assert rodrigues(1.5, c, 2.0 * c, x, y) == pytest.approx(c * base, rel=1e-12, abs=1e-300)


@settings(max_examples=50)
@given(st.data())
def test_rowwise_matches_scalar(data):
    n = data.draw(st.integers(1, 6))
    m = data.draw(st.integers(1, 5))
    X = data.draw(arrays(np.float64, (m, n), elements=coords))
    Y = data.draw(arrays(np.float64, (m, n), elements=coords))
    for spec in ALL_SPECS:
        got = rowwise_distance(spec, X, Y)
        want = [distance(spec, a, b) for a, b in zip(X, Y)]
        np.testing.assert_allclose(got, want, rtol=1e-12, atol=0)


def test_canberra_zero_coordinates_keep_identity():
    x = np.array([0.0, 2.0, 0.0])
    assert canberra(x, x) == 0.0
    assert canberra(x, [0.0, 2.0, 1.0]) == 1.0


# --- axiom checker ----------------------------------------------------------


def test_rodrigues_axioms_hold():
    rng = np.random.default_rng(7)
    report = check_metric_axioms(DistanceSpec.parse("rodrigues:p=1,w1=1,w2=1"), uniform_sampler(rng, 2), 100_000)
    assert report.ok, report.summary()


def test_minkowski_half_triangle_witness():
    rng = np.random.default_rng(7)
    spec = DistanceSpec.parse("minkowski:p=0.5")
    report = check_metric_axioms(spec, uniform_sampler(rng, 2), 100_000)
    assert report.violations["triangle"] >= 1
    x, y, z = report.witnesses["triangle"]
    assert distance(spec, x, z) > distance(spec, x, y) + distance(spec, y, z)
    assert report.violations["symmetry"] == report.violations["identity"] == 0


def test_minkowski_half_small_integer_witness():
    # independent brute force over small lattice triples
    pts = list(itertools.product(range(3), repeat=2))
    found = [
        (x, y, z)
        for x, y, z in itertools.product(pts, repeat=3)
        if minkowski(0.5, x, z) > minkowski(0.5, x, y) + minkowski(0.5, y, z) + 1e-9
    ]
    assert ((0, 0), (0, 1), (1, 1)) in found
    assert minkowski(0.5, (0, 0), (1, 1)) == 4.0


def test_squared_euclidean_collinear_witness():
    rng = np.random.default_rng(0)
    spec = DistanceSpec(Family.SQUARED_EUCLIDEAN)
    report = check_metric_axioms(spec, choice_sampler(rng, [0.0, 1.0, 2.0]), 1_000)
    assert report.violations["triangle"] > 0
    x, y, z = report.witnesses["triangle"]
    assert distance(spec, x, z) > distance(spec, x, y) + distance(spec, y, z)
    assert squared_euclidean((0,), (2,)) == 4 > squared_euclidean((0,), (1,)) + squared_euclidean((1,), (2,))


def test_checker_validates_arguments():
    rng = np.random.default_rng(0)
    with pytest.raises(ParameterError):
        check_metric_axioms(DistanceSpec(Family.EUCLIDEAN), uniform_sampler(rng, 2), 0)
    with pytest.raises(ParameterError):
        check_metric_axioms(DistanceSpec(Family.EUCLIDEAN), uniform_sampler(rng, 2), 10, -1.0)


def test_checker_is_reproducible():
    spec = DistanceSpec.parse("minkowski:p=0.5")
    a = check_metric_axioms(spec, uniform_sampler(np.random.default_rng(3), 3), 5_000)
    b = check_metric_axioms(spec, uniform_sampler(np.random.default_rng(3), 3), 5_000)
    assert a.violations == b.violations
    np.testing.assert_array_equal(a.witnesses["triangle"][0], b.witnesses["triangle"][0])
