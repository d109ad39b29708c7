"""Audit and correct worst-case equalized-odds violations with proxy attributes."""

from .bounds import (
    AssumptionReport,
    FrechetCellBox,
    WorstCaseBounds,
    check_assumption,
    frechet_cell_intervals,
    minimal_achievable_bound,
    oracle_bound,
    worst_case_bounds,
)
from .correction import (
    MODE_OPTIMAL,
    MODE_PROXY,
    CorrectionPolicy,
    CorrectionResult,
    LossModel,
    ProgramSpec,
    apply_policy,
    build_program,
    condition_residual,
    corrected_statistics,
    corrected_true_violation,
    expected_loss,
    run_correction,
    solve_program,
)
from .errors import (
    AllReplicatesDroppedError,
    AssumptionViolatedError,
    CalibrationFailedError,
    DegenerateDenominatorError,
    DegeneratePrevalenceError,
    EmptyDatasetError,
    EmptyStratumError,
    FairsealError,
    InfeasibleError,
    MixedSchemaError,
    NonBinaryValueError,
    TrueAttributeMissingError,
    UnboundedProgramError,
)
from .estimation import (
    AttributeErrorProfile,
    JointCounts,
    OutcomeRecord,
    ProxyGroupStatistics,
    TrueViolation,
    counts_from_arrays,
    profile_from_pairs,
    profile_from_rates,
    proxy_statistics,
    read_predictions_csv,
    read_profile,
    tabulate,
    true_violation,
    write_predictions_csv,
)
from .evaluation import (
    BootstrapConfig,
    ComparisonReport,
    MetricSummary,
    SummaryStats,
    bootstrap_metrics,
    compare_methods,
    evaluate_methods,
)
from .synthetic import (
    AttributePredictorConfig,
    ClassifierCoefficients,
    Population,
    PopulationConfig,
    RegimeExperimentResult,
    calibrate_attribute_predictor,
    draw_classifiers,
    evaluate_classifier,
    run_regime_experiment,
    sample_population,
)

__version__ = "0.1.0"
