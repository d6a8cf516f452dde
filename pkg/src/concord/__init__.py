"""Scatter-matrix concordance diagnostics and divide-and-recombine
regression.

The library measures how well a subset of rows captures the
variance-covariance structure of a larger design matrix, provides the
closed-form distribution models of that statistic for Gaussian data, and
connects it to coefficient accuracy through block-averaged, pooled and
reference regression fits.
"""

from .concordance import (
    ConcordanceResult,
    concordance_direct,
    concordance_subset,
    concordance_trace,
)
from .estimators import (
    DivideAndRecombineRegressor,
    IRLSLogisticRegression,
    PooledGramRegressor,
    ReferenceLeastSquares,
    ScatterConcordance,
)
from .ingest import (
    ModelMatrixChunk,
    infer_levels,
    read_chunks,
    sample_rows,
    scatter_from_file,
)
from .linalg import (
    EigenDecomposition,
    ScatterSummary,
    SingularMatrixError,
    frobenius_sq,
    qr_solve,
    scatter_from_matrix,
    spd_solve,
    sym_eigen,
)
from .models import (
    ConcordanceModel,
    model_nonoverlapping_cauchy,
    model_nonoverlapping_f,
    model_overlapping,
    partition_size_heuristic,
)
from .montecarlo import (
    MonteCarloReport,
    simulate_concordance,
    simulate_heavy_tail_concordance,
)
from .regression import (
    ConvergenceError,
    FitResult,
    PartitionPlan,
    PerfectSeparationError,
    coefficient_log_mse,
    communication_cost,
    fit_dnr,
    fit_irls_logistic,
    fit_pooled_normal,
    fit_reference,
    make_partition,
)
from .schema import (
    ColumnSpec,
    ResponseRule,
    SchemaSpec,
    airline_benchmark_schema,
    load_schema,
    save_schema,
)
from .synthetic import (
    SyntheticSpec,
    generate,
    generate_categorical_demo,
    schema_for_synthetic,
    write_csv,
)

__version__ = "0.1.0"

__all__ = [
    "ColumnSpec",
    "ConcordanceModel",
    "ConcordanceResult",
    "ConvergenceError",
    "DivideAndRecombineRegressor",
    "EigenDecomposition",
    "FitResult",
    "IRLSLogisticRegression",
    "ModelMatrixChunk",
    "MonteCarloReport",
    "PartitionPlan",
    "PerfectSeparationError",
    "PooledGramRegressor",
    "ReferenceLeastSquares",
    "ResponseRule",
    "ScatterConcordance",
    "ScatterSummary",
    "SchemaSpec",
    "SingularMatrixError",
    "SyntheticSpec",
    "airline_benchmark_schema",
    "coefficient_log_mse",
    "communication_cost",
    "concordance_direct",
    "concordance_subset",
    "concordance_trace",
    "fit_dnr",
    "fit_irls_logistic",
    "fit_pooled_normal",
    "fit_reference",
    "frobenius_sq",
    "generate",
    "generate_categorical_demo",
    "infer_levels",
    "load_schema",
    "make_partition",
    "model_nonoverlapping_cauchy",
    "model_nonoverlapping_f",
    "model_overlapping",
    "partition_size_heuristic",
    "qr_solve",
    "read_chunks",
    "sample_rows",
    "save_schema",
    "scatter_from_file",
    "scatter_from_matrix",
    "schema_for_synthetic",
    "simulate_concordance",
    "simulate_heavy_tail_concordance",
    "spd_solve",
    "sym_eigen",
    "write_csv",
]
