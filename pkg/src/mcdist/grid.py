"""Neighbourhood rings around a pixel in Z^2.

Four iterators visit the offsets around an implicit centre one ring at a
time: Chebyshev (square shells), Manhattan (diamonds), Euclidean (floor of
the radius, found with two early breaks instead of a kernel lookup) and the
Minkowski + Chebyshev combination with ``w1 = w2 = p = 1``, whose square
shells are split into ``d + 1`` consecutive buckets.

Each iterator is compiled twice from one source: a variant that stores the
``(label, dx, dy)`` triples it emits and one that only folds them into a checksum.
The stored form backs :func:`iter_rings` and the ``*_rings`` helpers; the
fold-only form is what :func:`bench_rings` times.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ._accel import jit, python_impl
from .metrics import DistanceSpec, Family, ParameterError
from .pairwise import pairwise_distances

RING_FAMILIES = (Family.CHEBYSHEV, Family.MANHATTAN, Family.EUCLIDEAN, Family.RODRIGUES)


# --- kernels ----------------------------------------------------------------


_LOW63 = (1 << 63) - 1


@jit
def _mix(acc, label, dx, dy):
    # Wrapping sum of one packed (label, dx, dy) word per point. A plain xor
    # would cancel over the symmetric point quads and let the compiler drop
    # the walk; a serial shift-xor chain would time the sink instead of it.
    return acc + ((label << 32) ^ (((dx & 0xFFFF) << 16) | (dy & 0xFFFF)))


@jit
def _put(buf, count, label, dx, dy):
    buf[count, 0] = label
    buf[count, 1] = dx
    buf[count, 2] = dy


# Each kernel visits rings d_start <= d < d_stop and returns (count, checksum).
# With store=True every (label, dx, dy) is also written to buf in visit order.
# The factories close over `store`, so the compiler sees it as a constant and
# the timed (store=False) variant carries no buffer code at all.


def _chebyshev_walk(store):
    @jit
    def walk(d_start, d_stop, buf):
        count = 0
        acc = 0
        d = d_start
        while d < d_stop:
            for l in range(-d, d + 1):
                acc = _mix(acc, d, l, -d)
                if store:
                    _put(buf, count, d, l, -d)
                count += 1
                acc = _mix(acc, d, l, d)
                if store:
                    _put(buf, count, d, l, d)
                count += 1
                if l != d and l != -d:  # corners already emitted by the rows
                    acc = _mix(acc, d, -d, l)
                    if store:
                        _put(buf, count, d, -d, l)
                    count += 1
                    acc = _mix(acc, d, d, l)
                    if store:
                        _put(buf, count, d, d, l)
                    count += 1
            d += 1
        return count, acc & _LOW63

    return walk


def _manhattan_walk(store):
    @jit
    def walk(d_start, d_stop, buf):
        count = 0
        acc = 0
        d = d_start
        while d < d_stop:
            for g in range(4):
                if g == 0:
                    xa = 0
                    ya = d
                elif g == 1:
                    xa = d
                    ya = 0
                elif g == 2:
                    xa = 0
                    ya = -d
                else:
                    xa = -d
                    ya = 0
                # l stops one short of d: the arm's last vertex starts the next arm
                for l in range(d):
                    acc = _mix(acc, d, xa, ya)
                    if store:
                        _put(buf, count, d, xa, ya)
                    count += 1
                    if g == 0:
                        xa += 1
                        ya -= 1
                    elif g == 1:
                        xa -= 1
                        ya -= 1
                    elif g == 2:
                        xa -= 1
                        ya += 1
                    else:
                        xa += 1
                        ya += 1
            d += 1
        return count, acc & _LOW63

    return walk


@jit
def _on_circle(x, y, d):
    return int(math.sqrt(x * x + y * y)) == d


def _euclidean_walk(store):
    @jit
    def walk(d_start, d_stop, buf):
        count = 0
        acc = 0
        d = d_start
        while d < d_stop:
            ls = 0
            while 2 * ls < d:
                found_first = False
                for l in range(d, -1, -1):
                    finished = False
                    ln = l
                    while ln >= -l:
                        ya = -d + ls
                        if _on_circle(ln, ya, d):
                            acc = _mix(acc, d, ln, ya)
                            if store:
                                _put(buf, count, d, ln, ya)
                            count += 1
                            found_first = True
                        else:
                            finished = found_first
                        ya = d - ls
                        if _on_circle(ln, ya, d):
                            acc = _mix(acc, d, ln, ya)
                            if store:
                                _put(buf, count, d, ln, ya)
                            count += 1
                        # |ln| > d/2 lies on a row that the outer loop scans itself
                        if ln != d and 2 * abs(ln) <= d:
                            xa = -d + ls
                            if _on_circle(xa, ln, d):
                                acc = _mix(acc, d, xa, ln)
                                if store:
                                    _put(buf, count, d, xa, ln)
                                count += 1
                            xa = d - ls
                            if _on_circle(xa, ln, d):
                                acc = _mix(acc, d, xa, ln)
                                if store:
                                    _put(buf, count, d, xa, ln)
                                count += 1
                        if ln == 0:
                            break
                        ln -= 2 * l
                    if finished:
                        break
                ls += 1
            d += 1
        return count, acc & _LOW63

    return walk


@jit
def _mix4(acc, lab, x0, y0, x1, y1, x2, y2, x3, y3):
    acc = _mix(acc, lab, x0, y0)
    acc = _mix(acc, lab, x1, y1)
    acc = _mix(acc, lab, x2, y2)
    acc = _mix(acc, lab, x3, y3)
    return acc


@jit
def _put_quad(buf, count, lab, x0, y0, x1, y1, x2, y2, x3, y3):
    _put(buf, count, lab, x0, y0)
    _put(buf, count + 1, lab, x1, y1)
    _put(buf, count + 2, lab, x2, y2)
    _put(buf, count + 3, lab, x3, y3)


def _rodrigues_walk(store):
    @jit
    def walk(d_start, d_stop, buf):
        count = 0
        acc = 0
        d = d_start
        da = d * (d + 1) // 2
        while d < d_stop:
            acc = _mix4(acc, da, d, 0, -d, 0, 0, d, 0, -d)
            if store:
                _put_quad(buf, count, da, d, 0, -d, 0, 0, d, 0, -d)
            count += 4
            for l in range(1, d + 1):
                lab = da + l
                acc = _mix4(acc, lab, d, -l, d, l, -d, -l, -d, l)
                if store:
                    _put_quad(buf, count, lab, d, -l, d, l, -d, -l, -d, l)
                count += 4
                if l != d:
                    acc = _mix4(acc, lab, -l, d, l, d, -l, -d, l, -d)
                    if store:
                        _put_quad(buf, count, lab, -l, d, l, d, -l, -d, l, -d)
                    count += 4
            da += d + 1
            d += 1
        return count, acc & _LOW63

    return walk


class RingKernel:
    """Calls the counting or the storing variant of one walk.

    ``py_func`` gives the same pair uncompiled, for timing the interpreter.
    """

    def __init__(self, name, count, emit):
        self.name = name
        self._count = count
        self._emit = emit

    def __call__(self, d_start, d_stop, buf, store):
        return (self._emit if store else self._count)(d_start, d_stop, buf)

    @property
    def py_func(self):
        return RingKernel(self.name, python_impl(self._count), python_impl(self._emit))

    def __repr__(self):
        return f"RingKernel({self.name})"


def _kernel(name, factory):
    return RingKernel(name, factory(False), factory(True))


chebyshev_kernel = _kernel("chebyshev", _chebyshev_walk)
manhattan_kernel = _kernel("manhattan", _manhattan_walk)
euclidean_kernel = _kernel("euclidean", _euclidean_walk)
rodrigues_kernel = _kernel("rodrigues", _rodrigues_walk)

KERNELS = {
    Family.CHEBYSHEV: chebyshev_kernel,
    Family.MANHATTAN: manhattan_kernel,
    Family.EUCLIDEAN: euclidean_kernel,
    Family.RODRIGUES: rodrigues_kernel,
}

_NO_BUF = np.zeros((0, 3), dtype=np.int64)


# --- values -----------------------------------------------------------------


@dataclass(frozen=True)
class RingBucket:
    """A bucket label with the offsets assigned to it, in emission order."""

    label: int
    points: np.ndarray  # (k, 2) int64 of (dx, dy)

    def point_set(self) -> frozenset:
        return frozenset(map(tuple, self.points.tolist()))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class RingRun:
    family: Family
    D: int
    buckets: tuple

    def labels(self) -> list:
        return [b.label for b in self.buckets]

    def as_dict(self) -> dict:
        """``{label: frozenset of (dx, dy)}``."""
        return {b.label: b.point_set() for b in self.buckets}

    def n_points(self) -> int:
        return sum(len(b) for b in self.buckets)


def _ring_family(family) -> Family:
    fam = Family(family.family if isinstance(family, DistanceSpec) else family)
    if fam not in RING_FAMILIES:
        raise ParameterError(f"no ring iterator for {fam.value}")
    return fam


def _check_D(D):
    if int(D) != D or D < 1:
        raise ParameterError(f"D must be an integer >= 1, got {D!r}")
    return int(D)


def _ring_size(fam, d0, d1):
    if fam is Family.MANHATTAN:
        return 2 * (d1 * (d1 - 1) - d0 * (d0 - 1))
    if fam is Family.EUCLIDEAN:
        return euclidean_kernel(d0, d1, _NO_BUF, False)[0]
    return 4 * (d1 * (d1 - 1) - d0 * (d0 - 1))


def emit_offsets(family, d_start: int, d_stop: int) -> np.ndarray:
    """Run an iterator over rings ``d_start <= d < d_stop``.

    Returns an ``(n, 3)`` int64 array of ``(label, dx, dy)`` rows in exactly the
    order the iterator visits them.
    """
    fam = _ring_family(family)
    if d_start < 1 or d_stop < d_start:
        raise ParameterError(f"invalid ring range [{d_start}, {d_stop})")
    buf = np.empty((_ring_size(fam, d_start, d_stop), 3), dtype=np.int64)
    n, _ = KERNELS[fam](d_start, d_stop, buf, True)
    assert n == len(buf)
    return buf


def _split(rows: np.ndarray) -> list:
    if len(rows) == 0:
        return []
    order = np.argsort(rows[:, 0], kind="stable")
    rows = rows[order]
    cuts = np.flatnonzero(np.diff(rows[:, 0])) + 1
    return [RingBucket(int(chunk[0, 0]), chunk[:, 1:].copy()) for chunk in np.split(rows, cuts)]


def iter_rings(family, D: int) -> Iterator[RingBucket]:
    """Yield buckets in increasing label order, one ring's worth of memory at a time."""
    fam = _ring_family(family)
    D = _check_D(D)
    for d in range(1, D):
        yield from _split(emit_offsets(fam, d, d + 1))


def ring_run(family, D: int) -> RingRun:
    fam = _ring_family(family)
    D = _check_D(D)
    rows = emit_offsets(fam, 1, D) if D > 1 else np.zeros((0, 3), dtype=np.int64)
    return RingRun(fam, D, tuple(_split(rows)))


def chebyshev_rings(D: int) -> RingRun:
    return ring_run(Family.CHEBYSHEV, D)


def manhattan_rings(D: int) -> RingRun:
    return ring_run(Family.MANHATTAN, D)


def euclidean_rings(D: int) -> RingRun:
    """Rings of constant ``floor(sqrt(dx**2 + dy**2))``."""
    return ring_run(Family.EUCLIDEAN, D)


def rodrigues_rings(D: int) -> RingRun:
    """Buckets for ``w1 = w2 = p = 1``; square shell ``d`` spans labels T(d)..T(d)+d."""
    return ring_run(Family.RODRIGUES, D)


def rodrigues_bucket_label(dx: int, dy: int) -> int:
    """Bucket the combined-distance iterator assigns to offset ``(dx, dy)``.

    With ``m = max(|dx|, |dy|)`` and ``s = min(|dx|, |dy|)`` the label is
    ``m * (m + 1) // 2 + s``. Labels are ordinal; the true combined distance
    of the offset is ``2 * m + s``.
    """
    ax, ay = abs(int(dx)), abs(int(dy))
    if ax == 0 and ay == 0:
        raise ParameterError("the centre offset has no bucket")
    m, s = max(ax, ay), min(ax, ay)
    return m * (m + 1) // 2 + s


def _isqrt(v: np.ndarray) -> np.ndarray:
    k = np.floor(np.sqrt(v.astype(np.float64))).astype(np.int64)
    k -= k * k > v
    k += (k + 1) * (k + 1) <= v
    return k


def oracle_rings(family, D: int) -> RingRun:
    """Brute-force bucketing of the ``[-(D-1), D-1]^2`` box.

    Labels come straight from the offset (max-norm, 1-norm, integer square
    root, or the triangular closed form) and points are kept in row-major
    order, so the result shares no code path with the iterators.
    """
    fam = _ring_family(family)
    D = _check_D(D)
    B = D - 1
    ys, xs = np.mgrid[-B : B + 1, -B : B + 1]
    dx, dy = xs.ravel(), ys.ravel()
    ax, ay = np.abs(dx), np.abs(dy)
    m, s = np.maximum(ax, ay), np.minimum(ax, ay)
    if fam is Family.CHEBYSHEV:
        label = geo = m
    elif fam is Family.MANHATTAN:
        label = geo = ax + ay
    elif fam is Family.EUCLIDEAN:
        label = geo = _isqrt(dx * dx + dy * dy)
    else:
        label, geo = m * (m + 1) // 2 + s, m
    keep = (geo >= 1) & (geo < D)
    rows = np.stack([label[keep], dx[keep], dy[keep]], axis=1).astype(np.int64)
    return RingRun(fam, D, tuple(_split(rows)))


def compare_runs(fast: RingRun, oracle: RingRun):
    """First label whose point set differs, or ``None`` when all buckets agree."""
    a, b = fast.as_dict(), oracle.as_dict()
    for label in sorted(set(a) | set(b)):
        if a.get(label) != b.get(label):
            return label
    return None


def scan_rings(spec: DistanceSpec, D: int) -> RingRun:
    """Bucket offsets by ``floor(distance(spec, 0, offset))`` with a box scan.

    Fallback for parameterisations without a dedicated iterator. Labels
    ``1 .. D-1`` are kept.
    """
    D = _check_D(D)
    fam = spec.family
    if fam in (Family.CHEBYSHEV, Family.EUCLIDEAN, Family.MANHATTAN, Family.MINKOWSKI, Family.SQUARED_EUCLIDEAN):
        B = D - 1
    elif fam is Family.RODRIGUES:
        B = max(0, math.ceil(D / (spec.w1 + spec.w2)))
    else:
        raise ParameterError(f"{fam.value} distances from the centre do not form rings")
    ys, xs = np.mgrid[-B : B + 1, -B : B + 1]
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1)
    dist = pairwise_distances(spec, np.zeros((1, 2)), pts)[0]
    label = np.floor(dist).astype(np.int64)
    keep = (label >= 1) & (label < D)
    rows = np.column_stack([label[keep], pts[keep]]).astype(np.int64)
    return RingRun(fam, D, tuple(_split(rows)))


# --- distance fields --------------------------------------------------------


def distance_field(spec: DistanceSpec, half_size: int) -> np.ndarray:
    """Distances from the centre cell of a ``(2h+1, 2h+1)`` grid.

    Row ``i`` corresponds to ``dy = i - h`` and column ``j`` to ``dx = j - h``.
    """
    if int(half_size) != half_size or half_size < 1:
        raise ParameterError(f"half_size must be an integer >= 1, got {half_size!r}")
    h = int(half_size)
    ys, xs = np.mgrid[-h : h + 1, -h : h + 1]
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float64)
    return pairwise_distances(spec, np.zeros((1, 2)), pts)[0].reshape(2 * h + 1, 2 * h + 1)


def render_distance_field(spec: DistanceSpec, half_size: int) -> np.ndarray:
    """Grey levels 0..255, black at the centre and white at the farthest cell."""
    field = distance_field(spec, half_size)
    return np.rint(field * (255.0 / field.max())).astype(np.uint8)


def write_pgm(stream, gray: np.ndarray) -> None:
    """Write ``gray`` as a plain (ASCII, ``P2``) PGM image."""
    h, w = gray.shape
    stream.write(f"P2\n{w} {h}\n255\n")
    for row in gray:
        stream.write(" ".join(map(str, row.tolist())) + "\n")


def read_pgm(stream) -> np.ndarray:
    tokens = []
    for line in stream:
        tokens.extend(line.split("#", 1)[0].split())
    if not tokens or tokens[0] != "P2":
        raise ValueError("not a plain PGM (P2) file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    values = np.array(tokens[4:], dtype=np.int64)
    if values.size != w * h or values.max(initial=0) > maxval:
        raise ValueError("PGM body does not match its header")
    return values.reshape(h, w)


# --- timing -----------------------------------------------------------------


@dataclass(frozen=True)
class TimingRecord:
    family: Family
    D: int
    repetitions: int
    mean_seconds: float
    min_seconds: float
    points: int
    checksum: int

    CSV_HEADER = "family,D,repetitions,mean_seconds,min_seconds,points,checksum"

    def csv_row(self) -> str:
        return (
            f"{self.family.value},{self.D},{self.repetitions},"
            f"{self.mean_seconds!r},{self.min_seconds!r},{self.points},{self.checksum}"
        )


def bench_rings(family, D: int, repetitions: int = 20, kernels=None) -> TimingRecord:
    """Time full runs of an iterator up to ``D``.

    Every emitted offset is folded into a checksum that is returned, so the
    loop body cannot be optimised away. ``kernels`` maps families to kernels
    and defaults to the active backend.
    """
    fam = _ring_family(family)
    D = _check_D(D)
    if repetitions < 1:
        raise ParameterError("repetitions must be >= 1")
    kernel = (kernels or KERNELS)[fam]
    kernel(1, min(D, 3), _NO_BUF, False)  # compile outside the timed region
    times = []
    result = (0, 0)
    for _ in range(repetitions):
        t0 = time.perf_counter()
        out = kernel(1, D, _NO_BUF, False)
        times.append(time.perf_counter() - t0)
        if result != (0, 0) and out != result:
            raise RuntimeError("iterator output changed between repetitions")
        result = out
    count, acc = result
    return TimingRecord(fam, D, repetitions, sum(times) / len(times), min(times), int(count), int(acc))
