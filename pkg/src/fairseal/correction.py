"""Randomized post-processing of a classifier against a proxy attribute.

A derived predictor flips the base prediction at random with probabilities
`p[a_hat][y_hat] = P(Y_bar=1 | A_hat=a_hat, Y_hat=y_hat)`, which moves the
group conditionals along

    corrected_alpha[i][j] = p[i][1] * alpha_hat[i][j] + p[i][0] * (1 - alpha_hat[i][j]).

Two linear programs over the four probabilities are supported, both
minimizing expected misclassification loss:

* ``worst-case-optimal`` pins the corrected conditionals to the line on
  which the worst-case violation bound attains its minimum (C_0j + C_1j)/2,
* ``proxy-equalized-odds`` equalizes the corrected conditionals across the
  proxy groups (the classical post-processing baseline).

When the proxy's error masses are balanced (delta_u = 0) the two programs
coincide coefficient for coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import lp
from .bounds import WorstCaseBounds, check_assumption, minimal_achievable_bound, worst_case_bounds, _denominators
from .errors import (
    AssumptionViolatedError,
    DegenerateDenominatorError,
    DegeneratePrevalenceError,
    EmptyStratumError,
    InfeasibleError,
    TrueAttributeMissingError,
)
from .estimation import (
    AttributeErrorProfile,
    JointCounts,
    OutcomeRecord,
    ProxyGroupStatistics,
    TrueViolation,
    _frozen,
)
from .rng import substream

MODE_OPTIMAL = "worst-case-optimal"
MODE_PROXY = "proxy-equalized-odds"
MODES = (MODE_OPTIMAL, MODE_PROXY)


@dataclass(frozen=True)
class CorrectionPolicy:
    """The four randomization probabilities, indexed `p[a_hat][y_hat]`."""

    p: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2, 2) or (p < 0).any() or (p > 1).any():
            raise ValueError("policy entries must be probabilities in a (2, 2) table")
        object.__setattr__(self, "p", _frozen(p))

    @classmethod
    def identity(cls) -> "CorrectionPolicy":
        return cls(np.array([[0.0, 1.0], [0.0, 1.0]]))

    @classmethod
    def from_vector(cls, vec: Sequence[float]) -> "CorrectionPolicy":
        return cls(np.asarray(vec, dtype=float).reshape(2, 2))

    def as_vector(self) -> np.ndarray:
        """Flattened (p00, p01, p10, p11)."""
        return self.p.reshape(4).copy()

    def to_dict(self) -> dict:
        return {
            "p00": float(self.p[0, 0]),
            "p01": float(self.p[0, 1]),
            "p10": float(self.p[1, 0]),
            "p11": float(self.p[1, 1]),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CorrectionPolicy":
        return cls(np.array([[payload["p00"], payload["p01"]], [payload["p10"], payload["p11"]]], dtype=float))


@dataclass(frozen=True)
class LossModel:
    """Per-class misclassification penalties.

    `penalty[y]` is the cost of predicting the opposite of a true label `y`.
    The `youden` kind resolves the penalties against the label prevalence of
    the statistics at hand as penalty[y] = P(Y != y), which makes minimizing
    expected loss the same as maximizing Youden's index (TPR - FPR).
    """

    kind: str
    penalty: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("youden", "custom"):
            raise ValueError("loss kind must be 'youden' or 'custom'")
        if self.kind == "custom":
            pen = np.asarray(self.penalty, dtype=float)
            if pen.shape != (2,) or (pen < 0).any():
                raise ValueError("custom penalties must be two nonnegative numbers")
            object.__setattr__(self, "penalty", _frozen(pen))
        elif self.penalty is not None:
            raise ValueError("youden loss derives penalties from the statistics")

    @classmethod
    def youden(cls) -> "LossModel":
        return cls("youden")

    @classmethod
    def custom(cls, penalty0: float, penalty1: float) -> "LossModel":
        return cls("custom", np.array([penalty0, penalty1], dtype=float))

    def resolve(self, stats: ProxyGroupStatistics) -> np.ndarray:
        if self.kind == "custom":
            return self.penalty
        if not 0.0 < stats.p_y1 < 1.0:
            raise DegeneratePrevalenceError(f"P(Y=1) = {stats.p_y1} leaves Youden loss undefined")
        return np.array([stats.p_y1, 1.0 - stats.p_y1])


def expected_loss(stats: ProxyGroupStatistics, loss: LossModel) -> float:
    """E[L(Y_hat, Y)] = penalty[1] * P(Y_hat=0, Y=1) + penalty[0] * P(Y_hat=1, Y=0).

    For the youden kind this equals P(Y=1) P(Y=0) (1 - TPR + FPR).
    """
    pen = loss.resolve(stats)
    miss_pos = float((stats.r_hat[:, 1] * (1.0 - stats.alpha_hat[:, 1])).sum())
    false_pos = float((stats.r_hat[:, 0] * stats.alpha_hat[:, 0]).sum())
    return float(pen[1] * miss_pos + pen[0] * false_pos)


def corrected_statistics(policy: CorrectionPolicy, stats: ProxyGroupStatistics) -> ProxyGroupStatistics:
    """Group conditionals of the derived predictor; base rates are untouched."""
    alpha = policy.p[:, 1:2] * stats.alpha_hat + policy.p[:, 0:1] * (1.0 - stats.alpha_hat)
    return stats.replace_alpha(alpha)


def condition_residual(stats: ProxyGroupStatistics, profile: AttributeErrorProfile, side: int) -> float:
    """Signed residual of the minimal-bound condition on one side.

    Zero iff the group conditionals sit on the line where the worst-case
    bound is smallest; the worst-case bound exceeds its minimum by exactly
    the residual's magnitude.
    """
    dens = _denominators(stats, profile)
    d1, d0 = dens[side]
    lhs = (stats.r_hat[0, side] / d0) * stats.alpha_hat[0, side] - (
        stats.r_hat[1, side] / d1
    ) * stats.alpha_hat[1, side]
    rhs = 0.5 * profile.delta_u * (1.0 / d1 + 1.0 / d0)
    return float(lhs - rhs)


@dataclass(frozen=True)
class ProgramSpec:
    """Linear program over the policy vector (p00, p01, p10, p11).

    `a_eq`/`b_eq` hold one row per side; `a_ub`/`b_ub` hold the eight
    conditional-box rows followed by the eight variable-box rows, labelled in
    `row_labels`.  `equality_alpha_form[j]` records the same equality in
    conditional space as (coefficient on corrected_alpha[0][j], coefficient
    on corrected_alpha[1][j], right-hand side).
    """

    mode: str
    objective: np.ndarray
    objective_const: float
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ub: np.ndarray
    b_ub: np.ndarray
    row_labels: tuple[str, ...]
    equality_alpha_form: np.ndarray
    include_boxes: bool = True

    def __post_init__(self):
        for name, shape in (("objective", (4,)), ("a_eq", (2, 4)), ("b_eq", (2,)),
                            ("a_ub", (16, 4)), ("b_ub", (16,)), ("equality_alpha_form", (2, 3))):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != shape:
                raise ValueError(f"{name} must have shape {shape}")
            if not np.isfinite(arr).all():
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, _frozen(arr))


def build_program(
    stats: ProxyGroupStatistics,
    profile: AttributeErrorProfile,
    loss: LossModel,
    mode: str,
    include_boxes: bool = True,
) -> ProgramSpec:
    """Assemble the post-processing program for the requested mode.

    ``worst-case-optimal`` requires the error-dominance check to pass (its
    guarantees are meaningless otherwise).  ``proxy-equalized-odds`` is built
    regardless; if the boxes leave no equalized point the solver reports the
    program infeasible.  `include_boxes=False` drops the conditional boxes
    from the proxy baseline (the unconstrained classical variant).
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    report = check_assumption(stats, profile)
    if mode == MODE_OPTIMAL and not report.passes:
        raise AssumptionViolatedError(report)
    pen = loss.resolve(stats)
    if mode == MODE_OPTIMAL:
        dens = _denominators(stats, profile)

    # Objective: pen1 * sum_i r[i,1] (1 - ca[i,1]) + pen0 * sum_i r[i,0] ca[i,0],
    # expanded in p via ca[i,j] = p[i,1] a[i,j] + p[i,0] (1 - a[i,j]).
    objective = np.zeros(4)
    for i in (0, 1):
        gain = -pen[1] * stats.r_hat[i, 1]
        cost = pen[0] * stats.r_hat[i, 0]
        objective[2 * i] = gain * (1.0 - stats.alpha_hat[i, 1]) + cost * (1.0 - stats.alpha_hat[i, 0])
        objective[2 * i + 1] = gain * stats.alpha_hat[i, 1] + cost * stats.alpha_hat[i, 0]
    objective_const = float(pen[1] * (stats.r_hat[0, 1] + stats.r_hat[1, 1]))

    def alpha_row(i: int, j: int) -> np.ndarray:
        row = np.zeros(4)
        row[2 * i] = 1.0 - stats.alpha_hat[i, j]
        row[2 * i + 1] = stats.alpha_hat[i, j]
        return row

    a_eq = np.zeros((2, 4))
    b_eq = np.zeros(2)
    alpha_form = np.zeros((2, 3))
    for j in (0, 1):
        if mode == MODE_OPTIMAL:
            d1, d0 = dens[j]
            g0 = stats.r_hat[0, j] / d0
            g1 = stats.r_hat[1, j] / d1
            rhs = 0.5 * profile.delta_u * (1.0 / d1 + 1.0 / d0)
        else:
            g0, g1, rhs = 1.0, 1.0, 0.0
        a_eq[j] = g0 * alpha_row(0, j) - g1 * alpha_row(1, j)
        b_eq[j] = rhs
        alpha_form[j] = (g0, -g1, rhs)

    rows = []
    labels = []
    u = (profile.u0, profile.u1)
    for i in (0, 1):
        for j in (0, 1):
            lo = u[i] / stats.r_hat[i, j] if include_boxes else 0.0
            rows.append((-alpha_row(i, j), -lo))
            labels.append(f"alpha_min[{i}][{j}]")
            rows.append((alpha_row(i, j), 1.0 - lo))
            labels.append(f"alpha_max[{i}][{j}]")
    for k, name in enumerate(("p00", "p01", "p10", "p11")):
        e = np.zeros(4)
        e[k] = 1.0
        rows.append((-e, 0.0))
        labels.append(f"{name}_min")
        rows.append((e, 1.0))
        labels.append(f"{name}_max")
    a_ub = np.vstack([row for row, _ in rows])
    b_ub = np.array([rhs for _, rhs in rows])
    return ProgramSpec(mode, objective, objective_const, a_eq, b_eq, a_ub, b_ub, tuple(labels), alpha_form, include_boxes)


def _empty_boxes(program: ProgramSpec) -> tuple[str, ...]:
    """Labels of conditional boxes whose lower bound exceeds their upper bound."""
    binding = []
    for k in range(0, 16, 2):
        lo = -program.b_ub[k]
        hi = program.b_ub[k + 1]
        if lo > hi + 1e-12:
            binding.append(program.row_labels[k])
            binding.append(program.row_labels[k + 1])
    return tuple(binding)


def solve_program(program: ProgramSpec) -> CorrectionPolicy:
    """Optimal vertex of the program; ties broken toward the lexicographically
    smallest policy vector, so the result is deterministic.
    """
    try:
        x = lp.solve_linear_program(program.objective, program.a_eq, program.b_eq, program.a_ub, program.b_ub)
    except InfeasibleError as exc:
        binding = _empty_boxes(program)
        if binding:
            raise InfeasibleError(
                "no feasible policy: conditional boxes exclude every admissible point "
                f"(binding rows: {', '.join(binding)})",
                binding,
            ) from exc
        raise
    # Pin the optimum, then minimize each coordinate in turn; snapping pinned
    # values onto the 0/1 bounds keeps solver dust out of later steps.
    def snap(value: float) -> float:
        if abs(value) < 1e-9:
            return 0.0
        if abs(value - 1.0) < 1e-9:
            return 1.0
        return value

    a_eq = np.vstack([program.a_eq, program.objective])
    b_eq = np.append(program.b_eq, float(program.objective @ x))
    pinned = np.empty(4)
    for k in range(4):
        e = np.zeros(4)
        e[k] = 1.0
        x = lp.solve_linear_program(e, a_eq, b_eq, program.a_ub, program.b_ub)
        pinned[k] = snap(float(x[k]))
        a_eq = np.vstack([a_eq, e])
        b_eq = np.append(b_eq, pinned[k])
    cleaned = np.clip(pinned, 0.0, 1.0)
    if (np.abs(cleaned - x) > 1e-8).any():
        raise RuntimeError(f"solver returned an out-of-box policy: {x}")
    return CorrectionPolicy.from_vector(cleaned)


@dataclass(frozen=True)
class CorrectionResult:
    """Everything a caller needs to report a correction run."""

    mode: str
    policy: CorrectionPolicy
    corrected_alpha: np.ndarray
    expected_loss: float
    bounds_after: WorstCaseBounds | None
    condition_residual: np.ndarray  # [j]
    minimal_bound: np.ndarray       # [j]
    include_boxes: bool

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "boxes_enforced": self.include_boxes,
            "policy": self.policy.to_dict(),
            "corrected_alpha": np.asarray(self.corrected_alpha).tolist(),
            "expected_loss": self.expected_loss,
            "bounds_after": None if self.bounds_after is None else self.bounds_after.to_dict(),
            "condition_residual": np.asarray(self.condition_residual).tolist(),
            "minimal_achievable_bound": np.asarray(self.minimal_bound).tolist(),
        }


def run_correction(
    stats: ProxyGroupStatistics,
    profile: AttributeErrorProfile,
    loss: LossModel,
    mode: str,
    include_boxes: bool = True,
) -> CorrectionResult:
    """Build, solve, and summarize one correction in a single call."""
    program = build_program(stats, profile, loss, mode, include_boxes)
    policy = solve_program(program)
    corrected = corrected_statistics(policy, stats)
    if include_boxes:
        # A binding box leaves the exact vertex on the boundary; float dust
        # can land a hair outside, so snap back onto the admissible band.
        u = np.array([[profile.u0], [profile.u1]])
        lo = u / stats.r_hat
        snapped = np.clip(corrected.alpha_hat, lo, 1.0 - lo)
        if (np.abs(snapped - corrected.alpha_hat) > 1e-8).any():
            raise RuntimeError("solver left the admissible band by more than tolerance")
        corrected = corrected.replace_alpha(snapped)
    try:
        bounds_after = worst_case_bounds(corrected, profile)
    except AssumptionViolatedError:
        # Only reachable without boxes: the equalized point may sit outside
        # the admissible band, in which case no bound can be certified.
        if include_boxes:
            raise
        bounds_after = None
    try:
        residual = np.array([condition_residual(corrected, profile, j) for j in (0, 1)])
        minimal = np.array([minimal_achievable_bound(stats, profile, j) for j in (0, 1)])
    except DegenerateDenominatorError:
        if include_boxes:
            raise
        residual = np.array([np.nan, np.nan])
        minimal = np.array([np.nan, np.nan])
    return CorrectionResult(
        mode=mode,
        policy=policy,
        corrected_alpha=corrected.alpha_hat.copy(),
        expected_loss=expected_loss(corrected, loss),
        bounds_after=bounds_after,
        condition_residual=residual,
        minimal_bound=minimal,
        include_boxes=include_boxes,
    )


def apply_policy(policy: CorrectionPolicy, records: Sequence[OutcomeRecord], seed: int) -> list[OutcomeRecord]:
    """Redraw each record's prediction from the policy.

    Record k flips to 1 with probability p[a_hat_k][y_hat_k] using a
    counter-based stream, so the draw for a given (seed, record index) does
    not depend on evaluation order.  All other fields are preserved.
    """
    records = list(records)
    draws = substream(seed).random(len(records))
    out = []
    for rec, u in zip(records, draws):
        flip = 1 if u < policy.p[rec.a_hat, rec.y_hat] else 0
        out.append(OutcomeRecord(rec.a_hat, rec.y, flip, rec.a))
    return out


def corrected_true_violation(policy: CorrectionPolicy, counts: JointCounts) -> TrueViolation:
    """Exact true violation of the derived predictor, averaging over its randomness.

    P(Y_bar=1 | A=a, Y=y) = sum over (a_hat, y_hat) of
    p[a_hat][y_hat] * P(A_hat=a_hat, Y_hat=y_hat | A=a, Y=y), computed from
    the full table, so no sampling noise enters.
    """
    if counts.n_full is None:
        raise TrueAttributeMissingError("counts were tabulated without the true attribute")
    full = counts.n_full.astype(float)  # [a_hat, a, y, y_hat]
    stratum = full.sum(axis=(0, 3))  # [a, y]
    if (stratum == 0).any():
        a, y = divmod(int(np.argmin(stratum)), 2)
        raise EmptyStratumError(a, y, by="a")
    # weight cell (a_hat, a, y, y_hat) by p[a_hat][y_hat]
    weighted = np.einsum("hayt,ht->ay", full, policy.p)
    return TrueViolation(weighted / stratum)
