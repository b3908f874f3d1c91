import io
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mcdist import grid
from mcdist._accel import python_impl
from mcdist.grid import (
    KERNELS,
    RING_FAMILIES,
    bench_rings,
    compare_runs,
    distance_field,
    emit_offsets,
    iter_rings,
    oracle_rings,
    read_pgm,
    render_distance_field,
    ring_run,
    rodrigues_bucket_label,
    scan_rings,
    write_pgm,
)
from mcdist.metrics import DistanceSpec, Family, ParameterError, distance


def test_small_examples():
    assert chebyshev_set(2, 1) == {(dx, dy) for dx in (-1, 0, 1) for dy in (-1, 0, 1)} - {(0, 0)}
    assert ring_run(Family.MANHATTAN, 2).as_dict() == {1: frozenset({(1, 0), (-1, 0), (0, 1), (0, -1)})}
    assert ring_run(Family.EUCLIDEAN, 2).as_dict() == {1: frozenset({(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)})}
    rod = ring_run(Family.RODRIGUES, 2).as_dict()
    assert rod == {1: frozenset({(1, 0), (-1, 0), (0, 1), (0, -1)}), 2: frozenset({(1, 1), (1, -1), (-1, 1), (-1, -1)})}
    assert ring_run(Family.CHEBYSHEV, 1).buckets == ()


def chebyshev_set(D, label):
    return set(ring_run(Family.CHEBYSHEV, D).as_dict()[label])


@pytest.mark.parametrize("family", RING_FAMILIES, ids=lambda f: f.value)
def test_matches_oracle_small(family):
    for D in range(1, 24):
        fast = ring_run(family, D)
        assert compare_runs(fast, oracle_rings(family, D)) is None
        distinct = set().union(*(b.point_set() for b in fast.buckets)) if fast.buckets else set()
        assert len(distinct) == fast.n_points()


@pytest.mark.parametrize("D", [1, 2, 7, 40])
def test_ring_sizes(D):
    cheb = ring_run(Family.CHEBYSHEV, D)
    assert [len(b) for b in cheb.buckets] == [8 * d for d in range(1, D)]
    man = ring_run(Family.MANHATTAN, D)
    assert [len(b) for b in man.buckets] == [4 * d for d in range(1, D)]
    rod = ring_run(Family.RODRIGUES, D).as_dict()
    for d in range(1, D):
        labels = range(d * (d + 1) // 2, d * (d + 1) // 2 + d + 1)
        assert sum(len(rod[lab]) for lab in labels) == 8 * d


def test_chebyshev_point_count_at_2500():
    count, _ = KERNELS[Family.CHEBYSHEV](1, 2500, grid._NO_BUF, False)
    assert count == sum(8 * d for d in range(1, 2500)) == 24_990_000


@pytest.mark.parametrize("D", [1, 5, 33])
def test_euclidean_tiles_the_disc(D):
    B = D - 1
    want = {
        (dx, dy)
        for dx in range(-B, B + 1)
        for dy in range(-B, B + 1)
        if (dx, dy) != (0, 0) and math.isqrt(dx * dx + dy * dy) < D
    }
    rows = emit_offsets(Family.EUCLIDEAN, 1, D) if D > 1 else np.zeros((0, 3), dtype=np.int64)
    got = [tuple(r) for r in rows[:, 1:].tolist()]
    assert len(got) == len(set(got)) and set(got) == want
    for label, dx, dy in rows.tolist():
        assert label == math.isqrt(dx * dx + dy * dy)


def test_rodrigues_label_closed_form_agrees_with_iterator():
    for label, dx, dy in emit_offsets(Family.RODRIGUES, 1, 41).tolist():
        assert rodrigues_bucket_label(dx, dy) == label


def test_rodrigues_label_examples():
    assert rodrigues_bucket_label(1, 0) == 1
    assert rodrigues_bucket_label(1, 1) == 2
    assert rodrigues_bucket_label(-3, 2) == 8
    with pytest.raises(ParameterError):
        rodrigues_bucket_label(0, 0)


@given(st.integers(-300, 300), st.integers(-300, 300))
def test_rodrigues_true_distance_in_ring_band(dx, dy):
    if dx == dy == 0:
        return
    spec = DistanceSpec.parse("rodrigues:p=1,w1=1,w2=1")
    d = max(abs(dx), abs(dy))
    true = distance(spec, (0, 0), (dx, dy))
    assert 2 * d <= true <= 3 * d
    # the label order inside a shell follows the true distance
    label = rodrigues_bucket_label(dx, dy)
    assert label - d * (d + 1) // 2 == true - 2 * d


@pytest.mark.parametrize("family", RING_FAMILIES, ids=lambda f: f.value)
def test_streaming_equals_materialised(family):
    streamed = list(iter_rings(family, 17))
    run = ring_run(family, 17)
    assert [b.label for b in streamed] == run.labels()
    assert [b.point_set() for b in streamed] == [b.point_set() for b in run.buckets]
    assert run.labels() == sorted(run.labels())


@pytest.mark.parametrize("family", RING_FAMILIES, ids=lambda f: f.value)
def test_interpreted_kernel_matches_compiled(family):
    kernel = KERNELS[family]
    slow = python_impl(kernel)
    n = kernel(1, 30, grid._NO_BUF, False)[0]
    a, b = np.empty((n, 3), np.int64), np.empty((n, 3), np.int64)
    assert kernel(1, 30, a, True) == slow(1, 30, b, True)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("family", RING_FAMILIES, ids=lambda f: f.value)
def test_checksum_is_sum_of_packed_points(family):
    rows = emit_offsets(family, 1, 30)
    words = [(lab << 32) ^ (((dx & 0xFFFF) << 16) | (dy & 0xFFFF)) for lab, dx, dy in rows.tolist()]
    count, acc = KERNELS[family](1, 30, grid._NO_BUF, False)
    assert count == len(rows)
    assert acc == sum(words) & ((1 << 63) - 1)


def test_checksums_tell_families_apart():
    sums = {KERNELS[f](1, 50, grid._NO_BUF, False)[1] for f in RING_FAMILIES}
    assert len(sums) == len(RING_FAMILIES)


def test_scan_rings_matches_iterators():
    for family in (Family.CHEBYSHEV, Family.MANHATTAN, Family.EUCLIDEAN):
        assert compare_runs(scan_rings(DistanceSpec(family), 12), oracle_rings(family, 12)) is None


def test_scan_rings_general_rodrigues():
    spec = DistanceSpec.parse("rodrigues:p=2,w1=1,w2=2")
    run = scan_rings(spec, 15)
    for b in run.buckets:
        for dx, dy in b.points.tolist():
            assert math.floor(distance(spec, (0, 0), (dx, dy))) == b.label
    # nothing with distance < 15 left out
    for dx in range(-15, 16):
        for dy in range(-15, 16):
            d = distance(spec, (0, 0), (dx, dy))
            if 1 <= d < 15:
                assert (dx, dy) in run.as_dict()[math.floor(d)]


def test_parameter_errors():
    with pytest.raises(ParameterError):
        ring_run(Family.CANBERRA, 5)
    with pytest.raises(ParameterError):
        ring_run(Family.CHEBYSHEV, 0)
    with pytest.raises(ParameterError):
        bench_rings(Family.CHEBYSHEV, 5, 0)
    with pytest.raises(ParameterError):
        scan_rings(DistanceSpec.parse("canberra"), 5)


# --- distance fields --------------------------------------------------------


def test_render_chebyshev_unit():
    gray = render_distance_field(DistanceSpec(Family.CHEBYSHEV), 1)
    assert gray[1, 1] == 0
    assert np.all(gray[np.arange(3) != 1][:, :] == 255)
    assert gray[1, 0] == gray[1, 2] == 255


def _hull_vertices(spec, level, half=64):
    spatial = pytest.importorskip("scipy.spatial")
    field = distance_field(spec, half)
    ys, xs = np.nonzero(field <= level + 1e-9)
    pts = np.column_stack([xs - half, ys - half])
    return spatial.ConvexHull(pts), pts, field


def test_rodrigues_level_set_is_octagon():
    hull, _, _ = _hull_vertices(DistanceSpec.parse("rodrigues:p=1,w1=1,w2=1"), 60)
    assert len(hull.vertices) == 8


@pytest.mark.parametrize("family", [Family.MANHATTAN, Family.CHEBYSHEV])
def test_square_level_sets(family):
    hull, _, _ = _hull_vertices(DistanceSpec(family), 40)
    assert len(hull.vertices) == 4


def test_minkowski_half_level_set_is_not_convex():
    spec = DistanceSpec.parse("minkowski:p=0.5")
    hull, pts, field = _hull_vertices(spec, 16)
    inside = {tuple(p) for p in pts.tolist()}
    eq = hull.equations
    outside_but_in_hull = [
        (x, y)
        for x in range(-64, 65)
        for y in range(-64, 65)
        if (x, y) not in inside and np.all(eq[:, 0] * x + eq[:, 1] * y + eq[:, 2] <= 1e-9)
    ]
    assert (8, 8) in outside_but_in_hull


def test_field_orientation():
    field = distance_field(DistanceSpec(Family.MANHATTAN), 3)
    assert field[3, 3] == 0
    assert field[3, 6] == 3  # dx = 3
    assert field[0, 4] == 4  # dy = -3, dx = 1


def test_pgm_round_trip_and_header():
    gray = render_distance_field(DistanceSpec(Family.EUCLIDEAN), 2)
    buf = io.StringIO()
    write_pgm(buf, gray)
    text = buf.getvalue()
    assert text.startswith("P2\n5 5\n255\n")
    assert len(text.splitlines()) == 3 + 5
    np.testing.assert_array_equal(read_pgm(io.StringIO(text)), gray)
    with pytest.raises(ValueError):
        read_pgm(io.StringIO("P5\n1 1\n255\n0\n"))


# --- timing -----------------------------------------------------------------


def test_bench_record():
    rec = bench_rings(Family.RODRIGUES, 50, 3)
    assert rec.points == sum(8 * d for d in range(1, 50))
    assert rec.min_seconds <= rec.mean_seconds
    assert rec.checksum == KERNELS[Family.RODRIGUES](1, 50, grid._NO_BUF, False)[1]
    slow = bench_rings(Family.RODRIGUES, 50, 1, kernels={f: python_impl(k) for f, k in KERNELS.items()})
    assert (slow.points, slow.checksum) == (rec.points, rec.checksum)
    row = rec.csv_row().split(",")
    assert len(row) == len(grid.TimingRecord.CSV_HEADER.split(","))
    assert row[0] == "rodrigues" and row[1] == "50"


def test_listed_bucket_examples():
    assert len(ring_run(Family.MANHATTAN, 4).as_dict()[3]) == 12
    assert (3, 4) in ring_run(Family.EUCLIDEAN, 6).as_dict()[5]
    assert sorted(oracle_rings(Family.RODRIGUES, 4).as_dict()) == list(range(1, 10))
    euc = oracle_rings(Family.EUCLIDEAN, 4).as_dict()
    assert {(2, 0), (1, 2), (2, 2)} <= euc[2]
    assert (3, 0) in euc[3] and (3, 0) not in euc[2]
    assert rodrigues_bucket_label(2, 0) == 3
    assert rodrigues_bucket_label(3, 2) == 8


@pytest.mark.parametrize("d", [1, 2, 5, 12])
def test_rodrigues_shell_split(d):
    run = ring_run(Family.RODRIGUES, d + 1).as_dict()
    base = d * (d + 1) // 2
    sizes = [len(run[base + s]) for s in range(d + 1)]
    assert sizes[0] == 4 and sizes[-1] == 4
    assert sum(sizes[1:-1]) == 8 * (d - 1)


def test_rodrigues_visit_order_within_shell():
    # inside each shell the iterator emits labels in non-decreasing order
    for d in range(1, 20):
        labels = emit_offsets(Family.RODRIGUES, d, d + 1)[:, 0]
        assert np.all(np.diff(labels) >= 0)
