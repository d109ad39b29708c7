"""Synthetic population with a known sensitive attribute for end-to-end checks.

Three correlated Gaussian features drive everything: the attribute is a
threshold on the third feature, the label is a noisy sigmoid threshold on the
feature sum (noisier for group 0, which plants a real violation), and the
audited classifiers are sigmoid thresholds with randomly perturbed weights.
The attribute predictor is the same threshold as the attribute itself plus a
disturbance, calibrated by bisection to a requested total error in either an
even (balanced noise) or one-sided (constant shift) regime.

Because the attribute is observed here, every bound can be compared against
the violation it promises to dominate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from .correction import LossModel
from .errors import AssumptionViolatedError, CalibrationFailedError, EmptyStratumError
from .estimation import AttributeErrorProfile, counts_from_arrays
from .evaluation import METHOD_ORDER, evaluate_methods
from .rng import substream

REGIMES = ("equal", "unequal")


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class PopulationConfig:
    """Distribution parameters for the synthetic population."""

    mu: tuple[float, float, float] = (1.0, -1.0, 0.0)
    sigma: tuple[tuple[float, float, float], ...] = (
        (1.0, 0.05, 0.0),
        (0.05, 1.0, 0.0),
        (0.0, 0.0, 0.05),
    )
    y_threshold: float = 0.35
    a_offset: float = 0.1
    # Label-noise spreads are standard deviations; group 0 gets the wider one.
    eps0_scale: float = math.sqrt(2.0)
    eps1_scale: float = math.sqrt(1.5)

    def cholesky(self) -> np.ndarray:
        sigma = np.asarray(self.sigma, dtype=float)
        if not np.allclose(sigma, sigma.T):
            raise ValueError("sigma must be symmetric")
        return np.linalg.cholesky(sigma)


@dataclass(frozen=True)
class Population:
    """Sampled features with attribute and label columns."""

    x: np.ndarray  # (n, 3)
    a: np.ndarray  # (n,)
    y: np.ndarray  # (n,)

    @property
    def size(self) -> int:
        return self.x.shape[0]


def sample_population(config: PopulationConfig, n: int, seed: int) -> Population:
    """Draw n records; a fixed Cholesky factor keeps seeds portable."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = substream(seed, 0)
    z = rng.standard_normal((n, 3))
    x = np.asarray(config.mu) + z @ config.cholesky().T
    a = (x[:, 2] + config.a_offset >= 0).astype(np.int64)
    eps = np.where(
        a == 1,
        config.eps1_scale * rng.standard_normal(n),
        config.eps0_scale * rng.standard_normal(n),
    )
    score = sigmoid(x.sum(axis=1) + eps)
    y = (score >= config.y_threshold).astype(np.int64)
    return Population(x, a, y)


@dataclass(frozen=True)
class ClassifierCoefficients:
    c1: float
    c2: float
    c3: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c1, self.c2, self.c3])


def draw_classifiers(n: int, seed: int) -> list[ClassifierCoefficients]:
    """n coefficient triples from a normal law with mean 1, variance 0.01."""
    rng = substream(seed, 1)
    coeffs = 1.0 + 0.1 * rng.standard_normal((n, 3))
    return [ClassifierCoefficients(*row) for row in coeffs]


def evaluate_classifier(
    coeffs: ClassifierCoefficients, population: Population, threshold: float = 0.35
) -> np.ndarray:
    """Predictions of the sigmoid-threshold classifier on the population."""
    if population.size == 0:
        raise ValueError("population is empty")
    return (sigmoid(population.x @ coeffs.as_array()) >= threshold).astype(np.int64)


@dataclass(frozen=True)
class AttributePredictorConfig:
    """Disturbance applied inside the attribute threshold.

    `equal` adds fresh N(0, noise_sigma^2) noise per record, spreading errors
    over both proxy groups; `unequal` adds the constant `shift`, which (for a
    positive shift) turns records just below the attribute threshold into
    proxy-group-1 errors and produces none on the other side.
    """

    regime: str
    noise_sigma: float = 0.0
    shift: float = 0.0

    def __post_init__(self):
        if self.regime not in REGIMES:
            raise ValueError(f"regime must be one of {REGIMES}")


@dataclass(frozen=True)
class CalibratedAttributePredictor:
    config: AttributePredictorConfig
    profile: AttributeErrorProfile
    a_hat: np.ndarray


def _attribute_predictions(
    population: Population,
    config: PopulationConfig,
    disturbance: np.ndarray | float,
) -> np.ndarray:
    return (population.x[:, 2] + config.a_offset + disturbance >= 0).astype(np.int64)


def _profile_of(a_hat: np.ndarray, a: np.ndarray) -> AttributeErrorProfile:
    n = a.shape[0]
    u0 = float(((a_hat == 0) & (a == 1)).sum()) / n
    u1 = float(((a_hat == 1) & (a == 0)).sum()) / n
    return AttributeErrorProfile(u0, u1)


def calibrate_attribute_predictor(
    regime: str,
    target_u: float,
    population: Population,
    seed: int,
    config: PopulationConfig = PopulationConfig(),
    tolerance: float = 5e-4,
    max_iter: int = 100,
) -> CalibratedAttributePredictor:
    """Bisect the disturbance scale until the achieved error matches target_u.

    The equal regime scales one fixed vector of standard normals (common
    random numbers make the achieved error monotone in the scale); the
    unequal regime searches a positive constant shift, whose errors all land
    in proxy group 1, until U_1 matches.  CalibrationFailedError if the
    bracket cannot reach the target or the iteration cap is hit.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if target_u < 0:
        raise ValueError("target_u must be nonnegative")

    if regime == "equal":
        base_noise = substream(seed, 2).standard_normal(population.size)

        def achieved(scale: float) -> tuple[float, np.ndarray]:
            a_hat = _attribute_predictions(population, config, scale * base_noise)
            prof = _profile_of(a_hat, population.a)
            return prof.u, a_hat

    else:

        def achieved(scale: float) -> tuple[float, np.ndarray]:
            a_hat = _attribute_predictions(population, config, scale)
            prof = _profile_of(a_hat, population.a)
            return prof.u1, a_hat

    if target_u == 0:
        _, a_hat = achieved(0.0)
        cfg = AttributePredictorConfig(regime)
        return CalibratedAttributePredictor(cfg, _profile_of(a_hat, population.a), a_hat)

    lo, hi = 0.0, 1e-3
    value_hi, _ = achieved(hi)
    grow = 0
    while value_hi < target_u:
        hi *= 2.0
        value_hi, _ = achieved(hi)
        grow += 1
        if grow > 60:
            raise CalibrationFailedError(f"target_u={target_u} unreachable up to scale {hi}")
    best_scale = hi
    best_err = abs(value_hi - target_u)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        value, _ = achieved(mid)
        if abs(value - target_u) < best_err:
            best_scale, best_err = mid, abs(value - target_u)
        if value < target_u:
            lo = mid
        else:
            hi = mid
        if best_err <= tolerance:
            break
    else:
        if best_err > tolerance:
            raise CalibrationFailedError(
                f"bisection stalled at |achieved - target| = {best_err:.2e} > {tolerance}"
            )
    _, a_hat = achieved(best_scale)
    if regime == "equal":
        cfg = AttributePredictorConfig(regime, noise_sigma=best_scale)
    else:
        cfg = AttributePredictorConfig(regime, shift=best_scale)
    return CalibratedAttributePredictor(cfg, _profile_of(a_hat, population.a), a_hat)


@dataclass(frozen=True)
class MethodRow:
    classifier: int
    method: str
    delta_tpr: float
    delta_fpr: float
    b_tpr: float
    b_fpr: float
    expected_loss: float


@dataclass(frozen=True)
class RegimeExperimentResult:
    regime: str
    rows: tuple[MethodRow, ...]
    profile: AttributeErrorProfile
    predictor: AttributePredictorConfig
    n_classifiers: int
    n_samples: int
    seed: int
    excluded_assumption: int
    excluded_stratum: int

    def median(self, method: str, metric: str) -> float:
        values = [getattr(r, metric) for r in self.rows if r.method == method]
        if not values:
            raise ValueError(f"no rows for method {method}")
        return float(np.median(values))

    def to_csv(self, path: str | Path) -> None:
        lines = ["method,delta_tpr,delta_fpr,b_tpr,b_fpr,expected_loss"]
        for row in self.rows:
            lines.append(
                f"{row.method},{row.delta_tpr!r},{row.delta_fpr!r},"
                f"{row.b_tpr!r},{row.b_fpr!r},{row.expected_loss!r}"
            )
        Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")

    def sidecar_dict(self) -> dict:
        return {
            "regime": self.regime,
            "profile": {
                "u0": self.profile.u0,
                "u1": self.profile.u1,
                "u": self.profile.u,
                "delta_u": self.profile.delta_u,
            },
            "predictor": {
                "regime": self.predictor.regime,
                "noise_sigma": self.predictor.noise_sigma,
                "shift": self.predictor.shift,
            },
            "n_classifiers": self.n_classifiers,
            "n_samples": self.n_samples,
            "seed": self.seed,
            "excluded_assumption": self.excluded_assumption,
            "excluded_stratum": self.excluded_stratum,
        }


def _classifier_rows(
    index: int,
    coeffs: ClassifierCoefficients,
    population: Population,
    a_hat: np.ndarray,
    profile: AttributeErrorProfile,
) -> list[MethodRow] | str:
    """Rows for one classifier, or the reason it was excluded."""
    y_hat = evaluate_classifier(coeffs, population)
    counts = counts_from_arrays(a_hat, population.y, y_hat, population.a)
    try:
        outcome = evaluate_methods(counts, profile, METHOD_ORDER, LossModel.youden())
    except AssumptionViolatedError:
        return "assumption"
    except EmptyStratumError:
        return "stratum"
    rows = []
    for method in METHOD_ORDER:
        metrics = outcome[method]
        rows.append(
            MethodRow(
                classifier=index,
                method=method,
                delta_tpr=metrics["delta_tpr"],
                delta_fpr=metrics["delta_fpr"],
                b_tpr=metrics["b_tpr"],
                b_fpr=metrics["b_fpr"],
                expected_loss=metrics["expected_loss"],
            )
        )
    return rows


def run_regime_experiment(
    regime: str,
    n_classifiers: int,
    n_samples: int,
    seed: int,
    target_u: float = 0.04,
    workers: int = 1,
) -> RegimeExperimentResult:
    """Audit and correct a family of random classifiers on one population.

    One population and one calibrated attribute predictor serve every
    classifier; each classifier contributes one row per method (uncorrected,
    proxy_fair, optimal) unless the assumption check or a stratum emptied,
    in which case it is counted and skipped.  Deterministic in
    (regime, sizes, seed); `workers > 1` shards classifiers across processes
    without changing the result.
    """
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}")
    if n_classifiers < 1 or n_samples < 1:
        raise ValueError("sizes must be positive")
    config = PopulationConfig()
    population = sample_population(config, n_samples, seed)
    calibrated = calibrate_attribute_predictor(regime, target_u, population, seed, config)
    classifiers = draw_classifiers(n_classifiers, seed)

    outcomes: list[list[MethodRow] | str]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = np.array_split(np.arange(n_classifiers), min(workers, n_classifiers))
        args = [
            (list(chunk), [classifiers[k] for k in chunk], population, calibrated.a_hat, calibrated.profile)
            for chunk in chunks
            if len(chunk)
        ]
        with ProcessPoolExecutor(max_workers=len(args)) as pool:
            pieces = list(pool.map(_rows_for_chunk, args))
        outcomes = [item for piece in pieces for item in piece]
    else:
        outcomes = [
            _classifier_rows(k, classifiers[k], population, calibrated.a_hat, calibrated.profile)
            for k in range(n_classifiers)
        ]

    rows: list[MethodRow] = []
    excluded_assumption = 0
    excluded_stratum = 0
    for outcome in outcomes:
        if outcome == "assumption":
            excluded_assumption += 1
        elif outcome == "stratum":
            excluded_stratum += 1
        else:
            rows.extend(outcome)
    return RegimeExperimentResult(
        regime=regime,
        rows=tuple(rows),
        profile=calibrated.profile,
        predictor=calibrated.config,
        n_classifiers=n_classifiers,
        n_samples=n_samples,
        seed=seed,
        excluded_assumption=excluded_assumption,
        excluded_stratum=excluded_stratum,
    )


def _rows_for_chunk(args) -> list:
    indices, coeffs, population, a_hat, profile = args
    return [
        _classifier_rows(index, c, population, a_hat, profile)
        for index, c in zip(indices, coeffs)
    ]
