"""Brute-force k-nearest-neighbour classification for any distance family.

Ranking is a stable sort of distances, so equal distances keep training
order. A vote tie between classes goes to the class whose nearest member
appears earliest in the ranking.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._accel import USE_NUMBA, jit
from .metrics import DistanceSpec, IncompatibleVectorsError, ParameterError, as_vector
from .pairwise import pairwise_distances


class DatasetError(ValueError):
    """A dataset violates its invariants or cannot be parsed."""


@dataclass(frozen=True)
class Instance:
    features: np.ndarray
    label: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """Numeric instances with integer labels indexing ``class_table``."""

    name: str
    class_table: tuple
    X: np.ndarray
    y: np.ndarray
    feature_names: Optional[tuple] = None
    label_name: str = "class"

    def __post_init__(self):
        X = np.array(self.X, dtype=np.float64, copy=True)
        y = np.array(self.y, dtype=np.int64, copy=True)
        table = tuple(str(c) for c in self.class_table)
        if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
            raise DatasetError(f"{self.name}: expected a non-empty 2-D feature matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DatasetError(f"{self.name}: {y.shape[0] if y.ndim else 0} labels for {X.shape[0]} instances")
        if not np.all(np.isfinite(X)):
            raise DatasetError(f"{self.name}: features must be finite")
        if len(set(table)) != len(table):
            raise DatasetError(f"{self.name}: duplicate class names in {table}")
        if y.min() < 0 or y.max() >= len(table):
            raise DatasetError(f"{self.name}: label outside the class table")
        if np.unique(y).size < 2:
            raise DatasetError(f"{self.name}: at least 2 distinct classes are required")
        names = self.feature_names
        if names is None:
            names = tuple(f"x{i}" for i in range(X.shape[1]))
        names = tuple(str(n) for n in names)
        if len(names) != X.shape[1]:
            raise DatasetError(f"{self.name}: {len(names)} feature names for {X.shape[1]} columns")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "class_table", table)
        object.__setattr__(self, "feature_names", names)

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_table)

    def __len__(self):
        return self.X.shape[0]

    @property
    def instances(self) -> list:
        return [Instance(x, int(c)) for x, c in zip(self.X, self.y)]

    def with_features(self, X) -> "Dataset":
        return Dataset(self.name, self.class_table, X, self.y, self.feature_names, self.label_name)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.class_table == other.class_table
            and self.feature_names == other.feature_names
            and self.label_name == other.label_name
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    __hash__ = None


@dataclass(frozen=True)
class ConfusionStats:
    """One-vs-rest counts per class plus accuracy and macro TP/TN rates.

    Rates average recall (TP rate) and specificity (TN rate) over the classes
    whose denominator is non-zero, so a class absent from the evaluated labels
    does not drag the mean towards zero.
    """

    tp: np.ndarray
    fp: np.ndarray
    tn: np.ndarray
    fn: np.ndarray
    accuracy: float
    macro_tp_rate: float
    macro_tn_rate: float

    @classmethod
    def from_predictions(cls, y_true, y_pred, n_classes: int) -> "ConfusionStats":
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape or y_true.size == 0:
            raise ParameterError("need equally sized, non-empty label vectors")
        cm = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(cm, (y_true, y_pred), 1)
        return cls.from_matrix(cm)

    @classmethod
    def from_matrix(cls, cm) -> "ConfusionStats":
        """Build from a confusion matrix indexed ``[true, predicted]``."""
        cm = np.asarray(cm, dtype=np.int64)
        total = int(cm.sum())
        tp = np.diag(cm).copy()
        fp = cm.sum(axis=0) - tp
        fn = cm.sum(axis=1) - tp
        tn = total - tp - fp - fn
        pos, neg = tp + fn, tn + fp
        tpr = tp[pos > 0] / pos[pos > 0]
        tnr = tn[neg > 0] / neg[neg > 0]
        return cls(
            tp, fp, tn, fn,
            accuracy=float(tp.sum() / total),
            macro_tp_rate=float(tpr.mean()) if tpr.size else 0.0,
            macro_tn_rate=float(tnr.mean()) if tnr.size else 0.0,
        )


# --- voting kernels -----------------------------------------------------------


@jit
def sweep_votes_loop(ranked_labels, n_classes, k_max):
    """Predictions for every k in 1..k_max from rows of labels in rank order.

    Counts grow one neighbour at a time; the leader only changes when the new
    neighbour's class overtakes it, or draws level while having an earlier
    first appearance.
    """
    m = ranked_labels.shape[0]
    out = np.empty((m, k_max), dtype=np.int64)
    counts = np.zeros(n_classes, dtype=np.int64)
    first = np.zeros(n_classes, dtype=np.int64)
    for i in range(m):
        counts[:] = 0
        best = ranked_labels[i, 0]
        for k in range(k_max):
            c = ranked_labels[i, k]
            if counts[c] == 0:
                first[c] = k
            counts[c] += 1
            if c != best:
                if counts[c] > counts[best] or (counts[c] == counts[best] and first[c] < first[best]):
                    best = c
            out[i, k] = best
    return out


def sweep_votes_numpy(ranked_labels, n_classes, k_max):
    ranked = np.asarray(ranked_labels)[:, :k_max]
    onehot = ranked[:, :, None] == np.arange(n_classes)[None, None, :]
    counts = np.cumsum(onehot, axis=1)
    seen = counts > 0
    first = np.where(seen.any(axis=1), np.argmax(onehot, axis=1), k_max)  # (m, C)
    # lexicographic max over (count, -first): count dominates, first breaks ties
    score = counts * (k_max + 1) - first[:, None, :]
    score = np.where(seen, score, -1)
    return np.argmax(score, axis=2).astype(np.int64)


def sweep_votes(ranked_labels, n_classes: int, k_max: int) -> np.ndarray:
    ranked = np.ascontiguousarray(ranked_labels, dtype=np.int64)
    if not 1 <= k_max <= ranked.shape[1]:
        raise ParameterError(f"k_max must lie in 1..{ranked.shape[1]}, got {k_max}")
    impl = sweep_votes_loop if USE_NUMBA else sweep_votes_numpy
    return impl(ranked, int(n_classes), int(k_max))


# --- public operations --------------------------------------------------------


def rank_matrix(train_X, spec: DistanceSpec, queries) -> np.ndarray:
    """Row ``i`` lists training indices by increasing distance to query ``i``."""
    dist = pairwise_distances(spec, queries, train_X)
    return np.argsort(dist, axis=1, kind="stable")


def neighbor_ranking(train: Dataset, spec: DistanceSpec, query) -> np.ndarray:
    q = as_vector(query)
    if q.size != train.n_features:
        raise IncompatibleVectorsError(f"query has {q.size} features, dataset has {train.n_features}")
    return rank_matrix(train.X, spec, q[None, :])[0]


def _check_k(k, n):
    if int(k) != k or not 1 <= k <= n:
        raise ParameterError(f"k must be an integer in 1..{n}, got {k!r}")
    return int(k)


def predict_index(train: Dataset, spec: DistanceSpec, k: int, query) -> int:
    k = _check_k(k, len(train))
    order = neighbor_ranking(train, spec, query)
    return int(sweep_votes(train.y[order][None, :k], train.n_classes, k)[0, k - 1])


def predict(train: Dataset, spec: DistanceSpec, k: int, query) -> str:
    """Modal class name among the ``k`` nearest training instances."""
    return train.class_table[predict_index(train, spec, k, query)]


def evaluate(train: Dataset, test: Dataset, spec: DistanceSpec, k: int) -> ConfusionStats:
    if train.class_table != test.class_table:
        raise DatasetError("train and test class tables differ")
    if train.n_features != test.n_features:
        raise IncompatibleVectorsError("train and test feature counts differ")
    k = _check_k(k, len(train))
    order = rank_matrix(train.X, spec, test.X)
    pred = sweep_votes(train.y[order[:, :k]], train.n_classes, k)[:, k - 1]
    return ConfusionStats.from_predictions(test.y, pred, train.n_classes)


def predict_all_k(train_X, train_y, n_classes: int, spec: DistanceSpec, queries, k_max: int) -> np.ndarray:
    """``(len(queries), k_max)`` predictions from a single ranking pass."""
    order = rank_matrix(train_X, spec, queries)
    return sweep_votes(np.asarray(train_y)[order[:, :k_max]], n_classes, k_max)


def majority_label(y: Sequence[int], n_classes: int) -> int:
    """Most frequent label, ties to the label seen first in ``y``."""
    y = np.asarray(y, dtype=np.int64)
    return int(sweep_votes(y[None, :], n_classes, y.size)[0, -1])
