"""Bootstrap evaluation of audits and corrections over a prediction table.

Each replicate redraws the table from the empirical cell distribution
(multinomial over the contingency cells), recomputes the statistics, and
reruns the requested corrections, so per-replicate numbers come from exactly
the same code paths as the point estimates.  The attribute error profile is
held fixed across replicates: it belongs to the attribute predictor's
designer and is not part of the resampled table (an optional binomial
perturbation is available for sensitivity analysis).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .bounds import check_assumption, worst_case_bounds
from .correction import (
    MODE_OPTIMAL,
    MODE_PROXY,
    LossModel,
    corrected_statistics,
    corrected_true_violation,
    expected_loss,
    run_correction,
)
from .errors import AllReplicatesDroppedError, AssumptionViolatedError, EmptyStratumError
from .estimation import AttributeErrorProfile, JointCounts, proxy_statistics, true_violation
from .rng import substream

METHOD_ORDER = ("uncorrected", "proxy_fair", "optimal")
BOUND_METRICS = ("b_tpr", "b_fpr", "expected_loss")
DELTA_METRICS = ("delta_tpr", "delta_fpr")


def evaluate_methods(
    counts: JointCounts,
    profile: AttributeErrorProfile,
    methods: tuple[str, ...],
    loss: LossModel,
    pseudo_count: float = 0.0,
) -> dict[str, dict[str, float]]:
    """Bounds, loss, and (when the true attribute is present) violations per method.

    Raises EmptyStratumError or AssumptionViolatedError when the table cannot
    be audited; callers decide whether that drops a replicate or a classifier.
    """
    unknown = set(methods) - set(METHOD_ORDER)
    if unknown:
        raise ValueError(f"unknown methods: {sorted(unknown)}")
    stats = proxy_statistics(counts, pseudo_count)
    report = check_assumption(stats, profile)
    if not report.passes:
        raise AssumptionViolatedError(report)
    with_delta = counts.has_true_attribute
    out: dict[str, dict[str, float]] = {}
    for method in methods:
        if method == "uncorrected":
            wb = worst_case_bounds(stats, profile)
            metrics = {
                "b_tpr": wb.b_tpr,
                "b_fpr": wb.b_fpr,
                "expected_loss": expected_loss(stats, loss),
            }
            if with_delta:
                tv = true_violation(counts)
                metrics["delta_tpr"] = tv.delta_tpr
                metrics["delta_fpr"] = tv.delta_fpr
        else:
            mode = MODE_OPTIMAL if method == "optimal" else MODE_PROXY
            result = run_correction(stats, profile, loss, mode)
            metrics = {
                "b_tpr": result.bounds_after.b_tpr,
                "b_fpr": result.bounds_after.b_fpr,
                "expected_loss": result.expected_loss,
            }
            if with_delta:
                tv = corrected_true_violation(result.policy, counts)
                metrics["delta_tpr"] = tv.delta_tpr
                metrics["delta_fpr"] = tv.delta_fpr
        out[method] = {name: float(value) for name, value in metrics.items()}
    return out


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int = 500
    seed: int = 0
    methods: tuple[str, ...] = METHOD_ORDER
    resample: bool = True
    # When set, each replicate redraws u0/u1 as binomial(profile_sample_size, u_i)
    # rates for sensitivity analysis.
    profile_sample_size: int | None = None
    pseudo_count: float = 0.0

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if not self.methods:
            raise ValueError("at least one method is required")


@dataclass(frozen=True)
class SummaryStats:
    median: float
    mean: float
    q025: float
    q975: float
    n_used: int


@dataclass(frozen=True)
class MetricSummary:
    """Per-method, per-metric bootstrap summaries plus drop accounting."""

    table: Mapping[str, Mapping[str, SummaryStats]]
    methods: tuple[str, ...]
    metrics: tuple[str, ...]
    replicates: int
    dropped_assumption: int
    dropped_stratum: int
    has_true_attribute: bool

    @property
    def surviving(self) -> int:
        return self.replicates - self.dropped_assumption - self.dropped_stratum

    def get(self, method: str, metric: str) -> SummaryStats:
        return self.table[method][metric]

    def to_csv(self, path: str | Path) -> None:
        lines = ["method,metric,median,mean,q025,q975,n_used"]
        for method in self.methods:
            for metric in self.metrics:
                s = self.table[method][metric]
                lines.append(
                    f"{method},{metric},{s.median!r},{s.mean!r},{s.q025!r},{s.q975!r},{s.n_used}"
                )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _resample_counts(counts: JointCounts, rng: np.random.Generator) -> JointCounts:
    if counts.n_full is not None:
        cells = counts.n_full.reshape(-1)
        drawn = rng.multinomial(counts.total, cells / counts.total)
        full = drawn.reshape(2, 2, 2, 2)
        return JointCounts(full.sum(axis=1), counts.total, full)
    cells = counts.n.reshape(-1)
    drawn = rng.multinomial(counts.total, cells / counts.total)
    return JointCounts(drawn.reshape(2, 2, 2), counts.total)


def bootstrap_metrics(
    counts: JointCounts,
    profile: AttributeErrorProfile,
    config: BootstrapConfig,
    loss: LossModel | None = None,
) -> MetricSummary:
    """Resample the table `config.replicates` times and summarize the metrics.

    Replicates whose table fails the assumption check or empties a stratum
    are dropped and counted.  Summaries are percentile-based over the
    survivors; AllReplicatesDroppedError if none survive.
    """
    loss = loss or LossModel.youden()
    metrics = BOUND_METRICS + (DELTA_METRICS if counts.has_true_attribute else ())
    values: dict[str, dict[str, list[float]]] = {
        m: {metric: [] for metric in metrics} for m in config.methods
    }
    dropped_assumption = 0
    dropped_stratum = 0
    for r in range(config.replicates):
        rng = substream(config.seed, r)
        replicate = _resample_counts(counts, rng) if config.resample else counts
        rep_profile = profile
        if config.profile_sample_size:
            m = config.profile_sample_size
            rep_profile = AttributeErrorProfile(
                rng.binomial(m, profile.u0) / m, rng.binomial(m, profile.u1) / m
            )
        try:
            outcome = evaluate_methods(replicate, rep_profile, config.methods, loss, config.pseudo_count)
        except EmptyStratumError:
            dropped_stratum += 1
            continue
        except AssumptionViolatedError:
            dropped_assumption += 1
            continue
        for method, row in outcome.items():
            for metric in metrics:
                values[method][metric].append(row[metric])
    survivors = config.replicates - dropped_assumption - dropped_stratum
    if survivors == 0:
        raise AllReplicatesDroppedError(
            f"all {config.replicates} replicates dropped "
            f"({dropped_assumption} assumption failures, {dropped_stratum} empty strata)"
        )
    table = {}
    for method in config.methods:
        table[method] = {}
        for metric in metrics:
            arr = np.asarray(values[method][metric])
            table[method][metric] = SummaryStats(
                median=float(np.median(arr)),
                mean=float(arr.mean()),
                q025=float(np.quantile(arr, 0.025)),
                q975=float(np.quantile(arr, 0.975)),
                n_used=int(arr.size),
            )
    return MetricSummary(
        table=table,
        methods=tuple(config.methods),
        metrics=metrics,
        replicates=config.replicates,
        dropped_assumption=dropped_assumption,
        dropped_stratum=dropped_stratum,
        has_true_attribute=counts.has_true_attribute,
    )


@dataclass(frozen=True)
class ComparisonReport:
    """Median orderings per metric and the qualitative flags they imply."""

    medians: Mapping[str, Mapping[str, float]]  # metric -> method -> median
    orderings: Mapping[str, tuple[str, ...]]    # metric -> methods sorted ascending
    flags: Mapping[str, bool]

    def to_dict(self) -> dict:
        return {
            "medians": {m: dict(v) for m, v in self.medians.items()},
            "orderings": {m: list(v) for m, v in self.orderings.items()},
            "flags": dict(self.flags),
        }


def compare_methods(summary: MetricSummary) -> ComparisonReport:
    """Rank methods per metric and flag the qualitative relationships.

    Flags (emitted when the involved methods are present):
      * optimal_has_smallest_bounds - optimal's medians are weakly smallest
        on both bound metrics,
      * proxy_fpr_bound_above_uncorrected - equalizing against the proxy
        certified a worse FPR bound than leaving the classifier alone,
      * loss_ordered_uncorrected_proxy_optimal - median loss is monotone in
        the strength of the intervention.
    """
    if len(summary.methods) < 2:
        raise ValueError("comparison needs at least two methods")
    medians: dict[str, dict[str, float]] = {}
    orderings: dict[str, tuple[str, ...]] = {}
    for metric in summary.metrics:
        per_method = {m: summary.get(m, metric).median for m in summary.methods}
        medians[metric] = per_method
        orderings[metric] = tuple(sorted(per_method, key=lambda m: (per_method[m], m)))
    flags: dict[str, bool] = {}
    methods = set(summary.methods)
    if "optimal" in methods:
        flags["optimal_has_smallest_bounds"] = all(
            medians[metric]["optimal"] <= medians[metric][m] + 1e-12
            for metric in ("b_tpr", "b_fpr")
            for m in summary.methods
        )
    if {"proxy_fair", "uncorrected"} <= methods:
        flags["proxy_fpr_bound_above_uncorrected"] = (
            medians["b_fpr"]["proxy_fair"] > medians["b_fpr"]["uncorrected"]
        )
    if {"uncorrected", "proxy_fair", "optimal"} <= methods:
        flags["loss_ordered_uncorrected_proxy_optimal"] = (
            medians["expected_loss"]["uncorrected"]
            <= medians["expected_loss"]["proxy_fair"] + 1e-12
            <= medians["expected_loss"]["optimal"] + 2e-12
        )
    return ComparisonReport(medians, orderings, flags)
