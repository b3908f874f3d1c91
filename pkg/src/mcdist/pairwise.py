"""Query-by-train distance matrices for every family.

Two interchangeable backends: a compiled double loop and a chunked numpy
broadcast. :func:`pairwise_distances` dispatches on the JIT flag; both
implementations are importable for cross-checking and benchmarking.
"""

import math

import numpy as np

from ._accel import USE_NUMBA, jit
from .metrics import _POWER_SUM_FLOOR, DistanceSpec, Family, IncompatibleVectorsError, _scaled_minkowski

DISCRETE = Family.DISCRETE.code
EUCLIDEAN = Family.EUCLIDEAN.code
MANHATTAN = Family.MANHATTAN.code
MINKOWSKI = Family.MINKOWSKI.code
CHEBYSHEV = Family.CHEBYSHEV.code
SQUARED_EUCLIDEAN = Family.SQUARED_EUCLIDEAN.code
CANBERRA = Family.CANBERRA.code
RODRIGUES = Family.RODRIGUES.code
_MAX_FLOAT = np.finfo(np.float64).max


@jit
def _pair_distance(a, b, code, p, w1, w2):
    n = a.shape[0]
    if code == DISCRETE:
        for i in range(n):
            if a[i] != b[i]:
                return 1.0
        return 0.0
    if code == EUCLIDEAN or code == SQUARED_EUCLIDEAN:
        s = 0.0
        for i in range(n):
            t = a[i] - b[i]
            s += t * t
        return math.sqrt(s) if code == EUCLIDEAN else s
    if code == MANHATTAN:
        s = 0.0
        for i in range(n):
            s += abs(a[i] - b[i])
        return s
    if code == CHEBYSHEV:
        m = 0.0
        for i in range(n):
            t = abs(a[i] - b[i])
            if t > m:
                m = t
        return m
    if code == CANBERRA:
        s = 0.0
        for i in range(n):
            den = abs(a[i]) + abs(b[i])
            if den > 0.0:
                s += abs(a[i] - b[i]) / den
        return s
    # minkowski / rodrigues
    s = 0.0
    m = 0.0
    for i in range(n):
        t = abs(a[i] - b[i])
        s += t**p
        if t > m:
            m = t
    if m > 0.0 and not (_POWER_SUM_FLOOR <= s <= _MAX_FLOAT):
        # under- or overflowed: redo relative to the largest term
        s = 0.0
        for i in range(n):
            s += (abs(a[i] - b[i]) / m) ** p
        mink = m * s ** (1.0 / p)
    else:
        mink = s ** (1.0 / p)
    if code == MINKOWSKI:
        return mink
    return w1 * mink + w2 * m


@jit
def pairwise_loop(Q, T, code, p, w1, w2):
    """Compiled ``(len(Q), len(T))`` distance matrix."""
    out = np.empty((Q.shape[0], T.shape[0]))
    for i in range(Q.shape[0]):
        for j in range(T.shape[0]):
            out[i, j] = _pair_distance(Q[i], T[j], code, p, w1, w2)
    return out


def pairwise_numpy(Q, T, code, p, w1, w2, chunk_elems=4_000_000):
    """Vectorised equivalent of :func:`pairwise_loop`, chunked over queries."""
    out = np.empty((Q.shape[0], T.shape[0]))
    n = max(Q.shape[1], 1)
    step = max(1, chunk_elems // max(1, T.shape[0] * n))
    for start in range(0, Q.shape[0], step):
        q = Q[start : start + step, None, :]
        diff = np.abs(q - T[None, :, :])
        if code == DISCRETE:
            block = np.any(diff != 0, axis=2).astype(np.float64)
        elif code in (EUCLIDEAN, SQUARED_EUCLIDEAN):
            block = np.sum(diff * diff, axis=2)
            if code == EUCLIDEAN:
                block = np.sqrt(block)
        elif code == MANHATTAN:
            block = np.sum(diff, axis=2)
        elif code == CHEBYSHEV:
            block = np.max(diff, axis=2)
        elif code == CANBERRA:
            den = np.abs(q) + np.abs(T[None, :, :])
            safe = np.where(den > 0, den, 1.0)
            block = np.sum(np.where(den > 0, diff / safe, 0.0), axis=2)
        else:
            block = _scaled_minkowski(diff, p, axis=2)
            if code == RODRIGUES:
                block = w1 * block + w2 * np.max(diff, axis=2)
        out[start : start + step] = block
    return out


def pairwise_distances(spec: DistanceSpec, Q, T) -> np.ndarray:
    """Distance from every row of ``Q`` to every row of ``T`` under ``spec``."""
    Q = np.ascontiguousarray(np.atleast_2d(np.asarray(Q, dtype=np.float64)))
    T = np.ascontiguousarray(np.atleast_2d(np.asarray(T, dtype=np.float64)))
    if Q.shape[1] != T.shape[1]:
        raise IncompatibleVectorsError(f"dimension mismatch: {Q.shape[1]} vs {T.shape[1]}")
    impl = pairwise_loop if USE_NUMBA else pairwise_numpy
    return impl(Q, T, *spec.params())
