"""Cross-validated k sweeps and survey-table aggregation.

For each (dataset, distance) pair every k from 1 to ``k_max`` is scored by
pooled stratified cross-validation, and the best k is kept. Summaries then
average over datasets, count how often each distance beats the per-dataset
mean or ties for the best accuracy, and attach a paired t-test p-value
against a reference distance.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .knn import ConfusionStats, Dataset, predict_all_k
from .metrics import DistanceSpec, ParameterError
from .stats import paired_t_test

log = logging.getLogger(__name__)

ROUND_DIGITS = 12


@dataclass(frozen=True, eq=False)
class FoldPlan:
    folds: np.ndarray
    n_folds: int
    seed: int
    warnings: tuple = ()

    def split(self, f: int):
        test = self.folds == f
        return np.flatnonzero(~test), np.flatnonzero(test)

    def __eq__(self, other):
        if not isinstance(other, FoldPlan):
            return NotImplemented
        return (self.n_folds, self.seed, self.warnings) == (other.n_folds, other.seed, other.warnings) and np.array_equal(
            self.folds, other.folds
        )

    __hash__ = None


def stratified_folds(dataset: Dataset, n_folds: int = 10, seed: int = 42) -> FoldPlan:
    """Seeded stratified assignment of instances to ``n_folds`` folds.

    Each class is shuffled and the classes are concatenated; fold ids are then
    dealt round-robin over that sequence. Per-class and overall fold sizes
    therefore differ by at most one.
    """
    if int(n_folds) != n_folds or n_folds < 2:
        raise ParameterError(f"fold count must be an integer >= 2, got {n_folds!r}")
    n_folds = int(n_folds)
    rng = np.random.default_rng(seed)
    order = []
    warnings = []
    for c in range(dataset.n_classes):
        members = np.flatnonzero(dataset.y == c)
        if members.size == 0:
            continue
        if members.size < n_folds:
            warnings.append(
                f"class {dataset.class_table[c]!r} has {members.size} instances for {n_folds} folds; "
                "some folds will not contain it"
            )
        order.append(rng.permutation(members))
    order = np.concatenate(order)
    folds = np.empty(len(dataset), dtype=np.int64)
    folds[order] = np.arange(order.size) % n_folds
    if len(dataset) < n_folds:
        warnings.append(f"{len(dataset)} instances for {n_folds} folds; some folds are empty")
    return FoldPlan(folds, n_folds, seed, tuple(warnings))


@dataclass(frozen=True)
class SweepResult:
    dataset: str
    spec: DistanceSpec
    accuracy_by_k: tuple
    best_k: int
    best_accuracy: float
    tp_at_best: float
    tn_at_best: float


def sweep_k(dataset: Dataset, spec: DistanceSpec, k_max: int = 200, plan: FoldPlan | None = None) -> SweepResult:
    """Pooled cross-validated accuracy for every k up to ``k_max``.

    ``k_max`` is clamped to the smallest training split. Each test instance is
    ranked once per fold and the votes for all k are read off that ranking.
    """
    if int(k_max) != k_max or k_max < 1:
        raise ParameterError(f"k_max must be an integer >= 1, got {k_max!r}")
    if plan is None:
        plan = stratified_folds(dataset)
    if plan.folds.shape != (len(dataset),):
        raise ParameterError("fold plan does not cover the dataset")
    splits = [plan.split(f) for f in range(plan.n_folds)]
    splits = [(tr, te) for tr, te in splits if te.size]
    min_train = min(tr.size for tr, _ in splits)
    if min_train == 0:
        raise ParameterError("a fold leaves no training data")
    k_eff = min(int(k_max), min_train)
    preds = np.empty((len(dataset), k_eff), dtype=np.int64)
    for tr, te in splits:
        preds[te] = predict_all_k(dataset.X[tr], dataset.y[tr], dataset.n_classes, spec, dataset.X[te], k_eff)
    correct = np.sum(preds == dataset.y[:, None], axis=0)
    best = int(np.argmax(correct))  # first maximum, i.e. the smallest k
    stats = ConfusionStats.from_predictions(dataset.y, preds[:, best], dataset.n_classes)
    return SweepResult(
        dataset=dataset.name,
        spec=spec,
        accuracy_by_k=tuple((correct / len(dataset)).tolist()),
        best_k=best + 1,
        best_accuracy=float(correct[best] / len(dataset)),
        tp_at_best=stats.macro_tp_rate,
        tn_at_best=stats.macro_tn_rate,
    )


@dataclass
class ExperimentResult:
    """Sweep results indexed by dataset and distance, plus skipped datasets."""

    datasets: list
    specs: list
    cells: dict  # (dataset name, spec) -> SweepResult
    skipped: list = field(default_factory=list)  # (dataset name, reason)

    def __getitem__(self, key):
        return self.cells[key]

    def results_for(self, spec: DistanceSpec) -> list:
        return [self.cells[(d, spec)] for d in self.datasets]

    def rows(self):
        for d in self.datasets:
            for s in self.specs:
                yield self.cells[(d, s)]


def run_experiment(
    datasets: Sequence[Dataset],
    specs: Sequence[DistanceSpec],
    k_max: int = 200,
    n_folds: int = 10,
    seed: int = 42,
) -> ExperimentResult:
    """Sweep every distance on every dataset, sharing one fold plan per dataset."""
    if not datasets or not specs:
        raise ParameterError("need at least one dataset and one distance")
    specs = list(dict.fromkeys(specs))
    names = [d.name for d in datasets]
    if len(set(names)) != len(names):
        raise ParameterError("dataset names must be unique")
    result = ExperimentResult([], specs, {})
    for ds in datasets:
        try:
            plan = stratified_folds(ds, n_folds, seed)
            for w in plan.warnings:
                log.warning("%s: %s", ds.name, w)
            cells = {(ds.name, s): sweep_k(ds, s, k_max, plan) for s in specs}
        except (ValueError, ArithmeticError) as exc:
            log.warning("skipping %s: %s", ds.name, exc)
            result.skipped.append((ds.name, str(exc)))
            continue
        result.datasets.append(ds.name)
        result.cells.update(cells)
    return result


@dataclass(frozen=True)
class EvalSummary:
    spec: DistanceSpec
    mean_accuracy: float
    mean_tp: float
    mean_tn: float
    mean_k: float
    max_k: int
    p_value: float
    better_than_average: int
    best: int


def aggregate(result: ExperimentResult, reference: DistanceSpec) -> list:
    """One summary row per distance, in the order the distances were run.

    "Better than average" counts datasets where a distance's best accuracy is
    strictly above the mean best accuracy of all distances on that dataset;
    "best" counts datasets where it equals the maximum. Both comparisons are
    made after rounding to 12 decimals. With fewer than two datasets the
    p-value is undefined (NaN) except for the reference row.
    """
    if reference not in result.specs:
        raise ParameterError(f"reference {reference.name} was not evaluated")
    if not result.datasets:
        raise ParameterError("no datasets were evaluated")
    acc = np.array([[c.best_accuracy for c in result.results_for(s)] for s in result.specs])
    rounded = np.round(acc, ROUND_DIGITS)
    per_dataset_mean = np.round(acc.mean(axis=0), ROUND_DIGITS)
    per_dataset_max = rounded.max(axis=0)
    ref_acc = acc[result.specs.index(reference)]
    summaries = []
    for i, spec in enumerate(result.specs):
        cells = result.results_for(spec)
        ks = np.array([c.best_k for c in cells])
        if spec == reference or np.array_equal(acc[i], ref_acc):
            p = 1.0
        elif acc.shape[1] < 2:
            p = float("nan")
        else:
            p = paired_t_test(acc[i], ref_acc)
        summaries.append(
            EvalSummary(
                spec=spec,
                mean_accuracy=float(acc[i].mean()),
                mean_tp=float(np.mean([c.tp_at_best for c in cells])),
                mean_tn=float(np.mean([c.tn_at_best for c in cells])),
                mean_k=float(ks.mean()),
                max_k=int(ks.max()),
                p_value=float(p),
                better_than_average=int(np.sum(rounded[i] > per_dataset_mean)),
                best=int(np.sum(rounded[i] == per_dataset_max)),
            )
        )
    return summaries


# --- CSV and text output ----------------------------------------------------

CELLS_HEADER = "dataset,family,p,w1,w2,best_k,best_accuracy,tp,tn"
PER_K_HEADER = "dataset,family,p,w1,w2,k,accuracy"
SUMMARY_HEADER = "distance,mean_acc,mean_tp,mean_tn,mean_k,max_k,p_value,better_than_average,best"


def _num(v) -> str:
    return "" if v is None else repr(float(v))


def _spec_cols(spec: DistanceSpec) -> str:
    return f"{spec.family.value},{_num(spec.p)},{_num(spec.w1)},{_num(spec.w2)}"


def _csv_text(value: str) -> str:
    return f'"{value}"' if any(ch in value for ch in ',"\n') else value


def cells_csv(result: ExperimentResult) -> str:
    out = io.StringIO()
    out.write(CELLS_HEADER + "\n")
    for c in result.rows():
        out.write(
            f"{_csv_text(c.dataset)},{_spec_cols(c.spec)},{c.best_k},"
            f"{_num(c.best_accuracy)},{_num(c.tp_at_best)},{_num(c.tn_at_best)}\n"
        )
    return out.getvalue()


def per_k_csv(result: ExperimentResult) -> str:
    out = io.StringIO()
    out.write(PER_K_HEADER + "\n")
    for c in result.rows():
        prefix = f"{_csv_text(c.dataset)},{_spec_cols(c.spec)}"
        for k, a in enumerate(c.accuracy_by_k, start=1):
            out.write(f"{prefix},{k},{_num(a)}\n")
    return out.getvalue()


def summary_csv(summaries: Sequence[EvalSummary]) -> str:
    out = io.StringIO()
    out.write(SUMMARY_HEADER + "\n")
    for s in summaries:
        out.write(
            f"{_csv_text(s.spec.name)},{_num(s.mean_accuracy)},{_num(s.mean_tp)},{_num(s.mean_tn)},"
            f"{_num(s.mean_k)},{s.max_k},{_num(s.p_value)},{s.better_than_average},{s.best}\n"
        )
    return out.getvalue()


def summary_table(summaries: Sequence[EvalSummary], n_datasets: int | None = None) -> str:
    head = ("Distance", "Mean Acc", "Mean TP", "Mean TN", "Mean k", "Max k", "P-Value", "Better than Average", "Best")
    rows = [
        (
            s.spec.name,
            f"{s.mean_accuracy:.3f}",
            f"{s.mean_tp:.3f}",
            f"{s.mean_tn:.3f}",
            f"{s.mean_k:.1f}",
            str(s.max_k),
            "n/a" if np.isnan(s.p_value) else f"{s.p_value:.3f}",
            str(s.better_than_average),
            str(s.best),
        )
        for s in summaries
    ]
    widths = [max(len(r[i]) for r in rows + [head]) for i in range(len(head))]
    lines = ["  ".join(h.ljust(w) if i == 0 else h.rjust(w) for i, (h, w) in enumerate(zip(head, widths)))]
    lines.append("  ".join("-" * w for w in widths))
    for r in rows:
        lines.append("  ".join(v.ljust(w) if i == 0 else v.rjust(w) for i, (v, w) in enumerate(zip(r, widths))))
    if n_datasets is not None:
        lines.append(f"({n_datasets} datasets)")
    return "\n".join(lines) + "\n"
