"""Distance functions on real feature vectors.

Every family evaluated in the k-NN survey lives here: discrete, Euclidean,
Manhattan, Minkowski, Chebyshev, squared Euclidean, Canberra, and the
weighted Minkowski + Chebyshev combination (``rodrigues``). Scalar functions
take two vectors; :func:`rowwise_distance` evaluates a family over matched rows
of two matrices and backs the randomized axiom checker.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


class ParameterError(ValueError):
    """A distance parameter (p, w1, w2, D, k, ...) is outside its domain."""


class IncompatibleVectorsError(ValueError):
    """Two feature vectors do not share a dimension."""


class Family(str, enum.Enum):
    DISCRETE = "discrete"
    EUCLIDEAN = "euclidean"
    MANHATTAN = "manhattan"
    MINKOWSKI = "minkowski"
    CHEBYSHEV = "chebyshev"
    SQUARED_EUCLIDEAN = "squared_euclidean"
    CANBERRA = "canberra"
    RODRIGUES = "rodrigues"

    @property
    def code(self) -> int:
        return _FAMILY_CODES[self]


_FAMILY_CODES = {fam: i for i, fam in enumerate(Family)}

_ALIASES = {
    "sqeuclidean": Family.SQUARED_EUCLIDEAN,
    "ssd": Family.SQUARED_EUCLIDEAN,
    "l1": Family.MANHATTAN,
    "l2": Family.EUCLIDEAN,
}

_PARAMS = {
    Family.MINKOWSKI: ("p",),
    Family.RODRIGUES: ("p", "w1", "w2"),
}


def _fmt_param(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


@dataclass(frozen=True)
class DistanceSpec:
    """A distance family together with its parameters.

    ``p`` is required for Minkowski and Rodrigues; ``w1``/``w2`` only apply to
    Rodrigues and default to 1. Values of ``p`` in (0, 1) are accepted even
    though the resulting function is not a metric; see :attr:`is_metric`.
    """

    family: Family
    p: Optional[float] = None
    w1: Optional[float] = None
    w2: Optional[float] = None

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        allowed = _PARAMS.get(fam, ())
        if fam is Family.RODRIGUES:
            if self.w1 is None:
                object.__setattr__(self, "w1", 1.0)
            if self.w2 is None:
                object.__setattr__(self, "w2", 1.0)
        for name in ("p", "w1", "w2"):
            value = getattr(self, name)
            if name not in allowed:
                if value is not None:
                    raise ParameterError(f"{fam.value} takes no parameter {name!r}")
                continue
            if value is None:
                raise ParameterError(f"{fam.value} requires parameter {name!r}")
            value = float(value)
            if not math.isfinite(value) or value <= 0:
                raise ParameterError(f"{name} must be a finite positive real, got {value!r}")
            object.__setattr__(self, name, value)

    @classmethod
    def parse(cls, text: str) -> "DistanceSpec":
        """Parse ``family[:key=value,...]``, e.g. ``"rodrigues:p=1,w1=1,w2=1"``."""
        head, _, tail = text.strip().partition(":")
        name = head.strip().lower().replace("-", "_")
        try:
            fam = _ALIASES.get(name) or Family(name)
        except ValueError:
            raise ParameterError(f"unknown distance family {head!r}") from None
        params = {}
        if tail.strip():
            for item in tail.split(","):
                key, eq, value = item.partition("=")
                key = key.strip().lower()
                if not eq or key not in ("p", "w1", "w2"):
                    raise ParameterError(f"bad parameter {item.strip()!r} in {text!r}")
                if key in params:
                    raise ParameterError(f"duplicate parameter {key!r} in {text!r}")
                try:
                    params[key] = float(value)
                except ValueError:
                    raise ParameterError(f"parameter {key!r} is not a number: {value!r}") from None
        return cls(fam, **params)

    @property
    def name(self) -> str:
        """Canonical textual form, inverse of :meth:`parse`."""
        names = _PARAMS.get(self.family, ())
        if not names:
            return self.family.value
        args = ",".join(f"{n}={_fmt_param(getattr(self, n))}" for n in names)
        return f"{self.family.value}:{args}"

    @property
    def is_metric(self) -> bool:
        if self.family is Family.SQUARED_EUCLIDEAN:
            return False
        if self.family in (Family.MINKOWSKI, Family.RODRIGUES):
            return self.p >= 1
        return True

    def params(self) -> tuple:
        """``(code, p, w1, w2)`` with zeros for absent values, for kernels."""
        return (self.family.code, self.p or 0.0, self.w1 or 0.0, self.w2 or 0.0)

    def __str__(self) -> str:
        return self.name


# The 15 rows of the survey table, all with w1 = w2 = 1.
SURVEY_SPECS = tuple(
    DistanceSpec.parse(s)
    for s in (
        "euclidean",
        "chebyshev",
        "manhattan",
        "minkowski:p=0.5",
        "minkowski:p=0.75",
        "minkowski:p=3",
        "minkowski:p=4",
        "canberra",
        "squared_euclidean",
        "rodrigues:p=0.5,w1=1,w2=1",
        "rodrigues:p=0.75,w1=1,w2=1",
        "rodrigues:p=1,w1=1,w2=1",
        "rodrigues:p=2,w1=1,w2=1",
        "rodrigues:p=3,w1=1,w2=1",
        "rodrigues:p=4,w1=1,w2=1",
    )
)

DEFAULT_REFERENCE = DistanceSpec(Family.MINKOWSKI, p=0.5)


def as_vector(x) -> np.ndarray:
    """Validate and convert ``x`` to a finite 1-D float64 feature vector."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1 or v.size == 0:
        raise IncompatibleVectorsError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("feature vectors must have finite coordinates")
    return v


def _pair(x, y):
    a, b = as_vector(x), as_vector(y)
    if a.shape != b.shape:
        raise IncompatibleVectorsError(f"dimension mismatch: {a.size} vs {b.size}")
    return a, b


def _check_p(p):
    p = float(p)
    if not math.isfinite(p) or p <= 0:
        raise ParameterError(f"p must be a finite positive real, got {p!r}")
    return p


def discrete_distance(x, y) -> float:
    a, b = _pair(x, y)
    return 0.0 if np.array_equal(a, b) else 1.0


def euclidean(x, y) -> float:
    a, b = _pair(x, y)
    return math.sqrt(float(np.sum((a - b) ** 2)))


def manhattan(x, y) -> float:
    a, b = _pair(x, y)
    return float(np.sum(np.abs(a - b)))


def minkowski(p, x, y) -> float:
    """``(sum |x_i - y_i|**p) ** (1/p)``; p = 1 is Manhattan, p = 2 Euclidean."""
    p = _check_p(p)
    a, b = _pair(x, y)
    return float(_scaled_minkowski(np.abs(a - b)[None, :], p, axis=1)[0])


def chebyshev(x, y) -> float:
    a, b = _pair(x, y)
    return float(np.max(np.abs(a - b)))


def squared_euclidean(x, y) -> float:
    a, b = _pair(x, y)
    return float(np.sum((a - b) ** 2))


def canberra(x, y) -> float:
    """Canberra distance; coordinates where both values are 0 contribute 0."""
    a, b = _pair(x, y)
    num = np.abs(a - b)
    den = np.abs(a) + np.abs(b)
    nz = den > 0
    return float(np.sum(num[nz] / den[nz]))


def rodrigues(p, w1, w2, x, y) -> float:
    """Weighted sum ``w1 * minkowski(p, x, y) + w2 * chebyshev(x, y)``.

    A metric whenever ``p >= 1`` and both weights are positive, since each
    term is a metric and positive combinations keep all four axioms.
    """
    p = _check_p(p)
    w1, w2 = float(w1), float(w2)
    if not (w1 > 0 and w2 > 0 and math.isfinite(w1) and math.isfinite(w2)):
        raise ParameterError(f"weights must be finite and positive, got w1={w1!r}, w2={w2!r}")
    return w1 * minkowski(p, x, y) + w2 * chebyshev(x, y)


def distance(spec: DistanceSpec, x, y) -> float:
    """Evaluate ``spec`` on a pair of vectors."""
    fam = spec.family
    if fam is Family.DISCRETE:
        return discrete_distance(x, y)
    if fam is Family.EUCLIDEAN:
        return euclidean(x, y)
    if fam is Family.MANHATTAN:
        return manhattan(x, y)
    if fam is Family.MINKOWSKI:
        return minkowski(spec.p, x, y)
    if fam is Family.CHEBYSHEV:
        return chebyshev(x, y)
    if fam is Family.SQUARED_EUCLIDEAN:
        return squared_euclidean(x, y)
    if fam is Family.CANBERRA:
        return canberra(x, y)
    return rodrigues(spec.p, spec.w1, spec.w2, x, y)


# below this a power sum may have lost precision to underflow
_POWER_SUM_FLOOR = 1e-280


def _scaled_minkowski(diff, p, axis):
    """p-norm along ``axis``; sums that under- or overflow are redone scaled by their max."""
    with np.errstate(over="ignore", under="ignore"):
        s = np.sum(diff**p, axis=axis)
        out = s ** (1.0 / p)
        redo = ~np.isfinite(s) | (s < _POWER_SUM_FLOOR)
        if np.any(redo):
            m = np.max(diff, axis=axis, keepdims=True)
            safe = np.where(m > 0, m, 1.0)
            scaled = np.squeeze(m, axis) * np.sum((diff / safe) ** p, axis=axis) ** (1.0 / p)
            out = np.where(redo, scaled, out)
    return out


def rowwise_distance(spec: DistanceSpec, X, Y) -> np.ndarray:
    """Distances between matching rows of two ``(m, n)`` arrays."""
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or X.shape != Y.shape:
        raise IncompatibleVectorsError(f"shape mismatch: {X.shape} vs {Y.shape}")
    diff = np.abs(X - Y)
    fam = spec.family
    if fam is Family.DISCRETE:
        return np.any(X != Y, axis=1).astype(np.float64)
    if fam is Family.EUCLIDEAN:
        return np.sqrt(np.sum(diff * diff, axis=1))
    if fam is Family.SQUARED_EUCLIDEAN:
        return np.sum(diff * diff, axis=1)
    if fam is Family.MANHATTAN:
        return np.sum(diff, axis=1)
    if fam is Family.CHEBYSHEV:
        return np.max(diff, axis=1)
    if fam is Family.CANBERRA:
        den = np.abs(X) + np.abs(Y)
        with np.errstate(invalid="ignore", divide="ignore"):
            terms = np.where(den > 0, diff / np.where(den > 0, den, 1.0), 0.0)
        return np.sum(terms, axis=1)
    mink = _scaled_minkowski(diff, spec.p, axis=1)
    if fam is Family.MINKOWSKI:
        return mink
    return spec.w1 * mink + spec.w2 * np.max(diff, axis=1)


# --- axiom checking -------------------------------------------------------

AXIOMS = ("non_negativity", "identity", "symmetry", "triangle")

Sampler = Callable[[int], np.ndarray]


def uniform_sampler(rng: np.random.Generator, dim: int, low: float = -1e3, high: float = 1e3) -> Sampler:
    """Sampler drawing ``(size, dim)`` vectors uniformly from ``[low, high)``."""

    def sample(size):
        return rng.uniform(low, high, size=(size, dim))

    return sample


def choice_sampler(rng: np.random.Generator, points) -> Sampler:
    """Sampler drawing rows (with replacement) from a fixed set of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if pts.shape[0] == 1 and np.ndim(points) == 1:
        pts = pts.T

    def sample(size):
        return pts[rng.integers(0, pts.shape[0], size=size)]

    return sample


@dataclass
class AxiomReport:
    spec: DistanceSpec
    trials: int
    tolerance: float
    violations: dict
    witnesses: dict

    @property
    def ok(self) -> bool:
        return not any(self.violations.values())

    def summary(self) -> str:
        lines = [f"{self.spec.name}: {self.trials} trials, tolerance {self.tolerance:g}"]
        for ax in AXIOMS:
            line = f"  {ax:<15} {self.violations[ax]}"
            w = self.witnesses.get(ax)
            if w is not None:
                line += "  witness x=%s y=%s z=%s" % tuple(np.array2string(v, precision=6) for v in w)
            lines.append(line)
        return "\n".join(lines)


def check_metric_axioms(
    spec: DistanceSpec,
    sampler: Sampler,
    trials: int = 100_000,
    tolerance: float = 1e-9,
    batch_size: int = 20_000,
) -> AxiomReport:
    """Fuzz the four metric axioms on random triples ``(x, y, z)``.

    Symmetry and the triangle inequality are checked up to an additive
    ``tolerance``; ``d(x, x) == 0`` must hold exactly. Violations are counted
    per axiom and the first offending triple is kept as a witness.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    if tolerance < 0:
        raise ParameterError("tolerance must be >= 0")
    violations = dict.fromkeys(AXIOMS, 0)
    witnesses: dict = {}
    done = 0
    while done < trials:
        m = min(batch_size, trials - done)
        x, y, z = (np.asarray(sampler(m), dtype=np.float64) for _ in range(3))
        dxy = rowwise_distance(spec, x, y)
        dyx = rowwise_distance(spec, y, x)
        dyz = rowwise_distance(spec, y, z)
        dxz = rowwise_distance(spec, x, z)
        dxx = rowwise_distance(spec, x, x)
        masks = {
            "non_negativity": (dxy < 0) | (dyz < 0) | (dxz < 0),
            "identity": (dxx != 0) | ((dxy == 0) & np.any(x != y, axis=1)),
            "symmetry": np.abs(dxy - dyx) > tolerance,
            "triangle": dxz > dxy + dyz + tolerance,
        }
        for ax, mask in masks.items():
            hits = np.flatnonzero(mask)
            violations[ax] += int(hits.size)
            if hits.size and ax not in witnesses:
                i = hits[0]
                witnesses[ax] = (x[i].copy(), y[i].copy(), z[i].copy())
        done += m
    return AxiomReport(spec, trials, tolerance, violations, witnesses)
