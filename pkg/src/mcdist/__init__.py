"""Distance metrics, Z^2 ring iteration and a k-NN survey harness.

Centred on the weighted Minkowski + Chebyshev distance
``w1 * d_p(x, y) + w2 * d_inf(x, y)``.
"""

from .evaluation import (
    EvalSummary,
    ExperimentResult,
    FoldPlan,
    SweepResult,
    aggregate,
    run_experiment,
    stratified_folds,
    sweep_k,
)
from .grid import (
    RingBucket,
    RingRun,
    TimingRecord,
    bench_rings,
    chebyshev_rings,
    euclidean_rings,
    iter_rings,
    manhattan_rings,
    oracle_rings,
    render_distance_field,
    rodrigues_bucket_label,
    rodrigues_rings,
)
from .ingest import minmax_rescale, parse_arff, parse_csv
from .knn import ConfusionStats, Dataset, Instance, evaluate, neighbor_ranking, predict
from .metrics import (
    AxiomReport,
    DistanceSpec,
    Family,
    IncompatibleVectorsError,
    ParameterError,
    canberra,
    chebyshev,
    check_metric_axioms,
    discrete_distance,
    distance,
    euclidean,
    manhattan,
    minkowski,
    rodrigues,
    squared_euclidean,
)
from .stats import paired_t_test

__version__ = "0.1.0"
