"""Worst-case violation bounds under an unobserved sensitive attribute.

The true group conditionals are unidentifiable when the attribute is only
available through an error-prone proxy.  Under an error-dominance assumption
on the proxy, the set of joint distributions consistent with the observable
statistics confines the true violation to a computable signed interval:

    delta_side in [B_j - C_1j,  B_j + C_0j]

with

    B_j   = r1j / (r1j + dU) * a1j  -  r0j / (r0j - dU) * a0j
    C_ij  = U_i * (1 / (r1j + dU) + 1 / (r0j - dU))

where `r = r_hat`, `a = alpha_hat`, `U_i` the proxy error masses and
`dU = U_0 - U_1`.  The worst-case bound is the larger endpoint magnitude.
The interval endpoints are attained by plugging the extreme points of the
per-cell Frechet boxes on the unidentifiable joint cells, which this module
also exposes, together with a grid-search oracle over those boxes that
re-derives the bound without the closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import AssumptionViolatedError, DegenerateDenominatorError
from .estimation import AttributeErrorProfile, ProxyGroupStatistics, _frozen

#: Grid points with a conditioning mass below this are skipped by the oracle;
#: they correspond to joints violating base-rate positivity.
_MASS_EPS = 1e-15


@dataclass(frozen=True)
class AssumptionReport:
    """Cellwise margins of the error-dominance check.

    margin[i][j] = min(alpha_hat[i][j] - U_i/r_hat[i][j],
                       1 - U_i/r_hat[i][j] - alpha_hat[i][j])

    The check passes iff every margin is >= 0 (boundary inclusive).  A
    necessary consequence is U_i <= r_hat[i][j] / 2, reported separately as
    `half_rate_ok` for diagnosis.
    """

    passes: bool
    margin: np.ndarray
    half_rate_ok: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "margin", _frozen(np.asarray(self.margin, dtype=float)))
        object.__setattr__(self, "half_rate_ok", _frozen(np.asarray(self.half_rate_ok, dtype=bool)))

    def failing_cells(self) -> list[tuple[int, int]]:
        return [(i, j) for i in (0, 1) for j in (0, 1) if self.margin[i, j] < 0]

    def to_dict(self) -> dict:
        return {
            "passes": bool(self.passes),
            "margin": self.margin.tolist(),
            "half_rate_ok": self.half_rate_ok.tolist(),
        }


def check_assumption(stats: ProxyGroupStatistics, profile: AttributeErrorProfile) -> AssumptionReport:
    """Evaluate the error-dominance condition U_i/r_ij <= alpha_ij <= 1 - U_i/r_ij.

    Always returns a report; nothing is raised here even on failure.
    """
    u = np.array([[profile.u0], [profile.u1]])  # broadcast over j
    u_over_r = u / stats.r_hat
    margin = np.minimum(stats.alpha_hat - u_over_r, 1.0 - u_over_r - stats.alpha_hat)
    half_rate_ok = u_over_r <= 0.5
    return AssumptionReport(bool((margin >= 0).all()), margin, half_rate_ok)


def _denominators(stats: ProxyGroupStatistics, profile: AttributeErrorProfile) -> np.ndarray:
    """Adjusted group masses [d1j, d0j] per side j; both must be positive.

    d1j = r_hat[1][j] + delta_u is the extremal mass of (A=1, Y=j), and
    d0j = r_hat[0][j] - delta_u the complementary one.
    """
    du = profile.delta_u
    dens = np.array(
        [
            [stats.r_hat[1, 0] + du, stats.r_hat[0, 0] - du],
            [stats.r_hat[1, 1] + du, stats.r_hat[0, 1] - du],
        ]
    )  # [j, (group1, group0)]
    if (dens <= 0).any():
        raise DegenerateDenominatorError(
            f"adjusted masses must be positive, got {dens.tolist()} with delta_u={du}"
        )
    return dens


@dataclass(frozen=True)
class WorstCaseBounds:
    """Signed interval and worst-case magnitude per side (j=1: TPR, j=0: FPR)."""

    b: np.ndarray          # [j]
    c: np.ndarray          # [i, j]
    interval: np.ndarray   # [j, (lo, hi)]
    b_tpr: float
    b_fpr: float

    def __post_init__(self):
        object.__setattr__(self, "b", _frozen(np.asarray(self.b, dtype=float)))
        object.__setattr__(self, "c", _frozen(np.asarray(self.c, dtype=float)))
        object.__setattr__(self, "interval", _frozen(np.asarray(self.interval, dtype=float)))

    def side(self, j: int) -> float:
        """Worst-case bound for side j."""
        return self.b_tpr if j == 1 else self.b_fpr

    def to_dict(self) -> dict:
        return {
            "b_tpr": self.b_tpr,
            "b_fpr": self.b_fpr,
            "b": self.b.tolist(),
            "c": self.c.tolist(),
            "interval": self.interval.tolist(),
        }


def worst_case_bounds(stats: ProxyGroupStatistics, profile: AttributeErrorProfile) -> WorstCaseBounds:
    """Closed-form worst-case violation bounds for both sides.

    Requires the error-dominance check to pass (AssumptionViolatedError
    otherwise, with the report attached) and the adjusted masses to be
    positive (DegenerateDenominatorError otherwise).
    """
    report = check_assumption(stats, profile)
    if not report.passes:
        raise AssumptionViolatedError(report)
    dens = _denominators(stats, profile)
    b = np.zeros(2)
    c = np.zeros((2, 2))
    interval = np.zeros((2, 2))
    for j in (0, 1):
        d1, d0 = dens[j]
        b[j] = (stats.r_hat[1, j] / d1) * stats.alpha_hat[1, j] - (
            stats.r_hat[0, j] / d0
        ) * stats.alpha_hat[0, j]
        k = 1.0 / d1 + 1.0 / d0
        c[0, j] = profile.u0 * k
        c[1, j] = profile.u1 * k
        interval[j] = (b[j] - c[1, j], b[j] + c[0, j])
    b_tpr = float(max(abs(interval[1, 0]), abs(interval[1, 1])))
    b_fpr = float(max(abs(interval[0, 0]), abs(interval[0, 1])))
    return WorstCaseBounds(b, c, interval, b_tpr, b_fpr)


def minimal_achievable_bound(stats: ProxyGroupStatistics, profile: AttributeErrorProfile, side: int) -> float:
    """Smallest worst-case bound any admissible classifier can certify.

    Equals (C_0j + C_1j) / 2: the interval width is fixed by the base rates
    and error masses, so the best any group conditionals can do is center the
    interval at zero.
    """
    dens = _denominators(stats, profile)
    d1, d0 = dens[side]
    k = 1.0 / d1 + 1.0 / d0
    return float(0.5 * profile.u * k)


@dataclass(frozen=True)
class FrechetCellBox:
    """Per-cell bounds on the unidentifiable joint cells for one side.

    Cell (y_hat, i) holds P(Y_hat=y_hat, A=1, Y=side | A_hat=i); `lo` and
    `hi` are its Frechet limits given the observable marginals.
    """

    side: int
    lo: np.ndarray  # [y_hat, i]
    hi: np.ndarray  # [y_hat, i]

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float)
        hi = np.asarray(self.hi, dtype=float)
        if (lo > hi + 1e-15).any() or (lo < -1e-15).any() or (hi > 1 + 1e-15).any():
            raise ValueError("cell boxes must satisfy 0 <= lo <= hi <= 1")
        object.__setattr__(self, "lo", _frozen(lo))
        object.__setattr__(self, "hi", _frozen(hi))


def frechet_cell_intervals(
    stats: ProxyGroupStatistics, profile: AttributeErrorProfile, side: int
) -> FrechetCellBox:
    """Frechet boxes for the four unidentifiable cells of one side.

    For each proxy group i, the observable conditionals P(Y_hat=q, Y=side | A_hat=i)
    and the reconstructed P(A=1 | A_hat=i) pin each joint cell between

        max(P(Y_hat=q, Y=side | A_hat=i) - P(A=0 | A_hat=i), 0)

    and

        min(P(Y_hat=q, Y=side | A_hat=i), P(A=1 | A_hat=i)).
    """
    report = check_assumption(stats, profile)
    if not report.passes:
        raise AssumptionViolatedError(report)
    lo = np.zeros((2, 2))
    hi = np.zeros((2, 2))
    for i in (0, 1):
        w = stats.p_a_hat(i)
        # P(A=1 | A_hat=1) = (w1 - U1)/w1; P(A=1 | A_hat=0) = U0/w0.
        p_a1 = (w - profile.u1) / w if i == 1 else profile.u0 / w
        p_a0 = 1.0 - p_a1
        p_y_side = stats.r_hat[i, side] / w
        for q in (0, 1):
            p_cell = stats.alpha_hat[i, side] * p_y_side if q == 1 else (1.0 - stats.alpha_hat[i, side]) * p_y_side
            lo[q, i] = max(p_cell - p_a0, 0.0)
            hi[q, i] = min(p_cell, p_a1)
    return FrechetCellBox(side, lo, hi)


def delta_from_cells(
    stats: ProxyGroupStatistics,
    side: int,
    q1: np.ndarray,
    q0: np.ndarray,
):
    """Reconstruct the true violation on one side from candidate cell values.

    `q1[i]` and `q0[i]` are P(Y_hat=1, A=1, Y=side | A_hat=i) and its
    Y_hat=0 counterpart; trailing broadcast dimensions are allowed so grids
    evaluate in one shot.  Positions whose conditioning mass for either group
    vanishes are returned as NaN.
    """
    w0 = stats.p_a_hat(0)
    w1 = stats.p_a_hat(1)
    s = float(stats.alpha_hat[0, side] * stats.r_hat[0, side] + stats.alpha_hat[1, side] * stats.r_hat[1, side])
    t = float(stats.r_hat[0, side] + stats.r_hat[1, side])
    pos = w0 * q1[0] + w1 * q1[1]            # P(Y_hat=1, A=1, Y=side)
    mass = pos + w0 * q0[0] + w1 * q0[1]     # P(A=1, Y=side)
    with np.errstate(divide="ignore", invalid="ignore"):
        alpha1 = np.where(mass > _MASS_EPS, pos / np.where(mass > _MASS_EPS, mass, 1.0), np.nan)
        rest = t - mass
        alpha0 = np.where(rest > _MASS_EPS, (s - pos) / np.where(rest > _MASS_EPS, rest, 1.0), np.nan)
    return alpha1 - alpha0


def oracle_bound(
    stats: ProxyGroupStatistics,
    profile: AttributeErrorProfile,
    side: int,
    grid_resolution: float = 1e-3,
    enforce_consistency: bool = False,
) -> float:
    """Worst-case violation on one side by grid search over the Frechet boxes.

    Walks the four unidentifiable cells independently over grids of step at
    most `grid_resolution` (box endpoints always included), reconstructs the
    violation at every combination, and returns the largest magnitude.  This
    deliberately ignores the monotonicity structure that yields the closed
    form, so it serves as an independent check of `worst_case_bounds`.

    `enforce_consistency` additionally discards combinations where a group's
    two cells exceed P(A=1 | A_hat=i); the default matches the cell-wise
    relaxation under which the closed form is derived.
    """
    if grid_resolution > 1e-2 or grid_resolution <= 0:
        raise ValueError("grid_resolution must be in (0, 1e-2]")
    box = frechet_cell_intervals(stats, profile, side)

    def axis(q: int, i: int) -> np.ndarray:
        lo, hi = box.lo[q, i], box.hi[q, i]
        if hi <= lo:
            return np.array([lo])
        steps = max(1, math.ceil((hi - lo) / grid_resolution))
        return np.linspace(lo, hi, steps + 1)

    g1 = [axis(1, 0), axis(1, 1)]
    g0 = [axis(0, 0), axis(0, 1)]
    cap = None
    if enforce_consistency:
        cap = []
        for i in (0, 1):
            w = stats.p_a_hat(i)
            cap.append((w - profile.u1) / w if i == 1 else profile.u0 / w)

    best = 0.0
    # The two outermost axes iterate in chunks; the inner two broadcast.
    b0 = g0[0][:, None]
    b1 = g0[1][None, :]
    inner = b0.size * b1.size
    chunk = max(1, int(4_000_000 // max(1, inner)))
    for v10 in g1[0]:
        for start in range(0, g1[1].size, chunk):
            a1 = g1[1][start : start + chunk][:, None, None]
            delta = delta_from_cells(stats, side, (np.array(v10), a1), (b0[None], b1[None]))
            if cap is not None:
                ok = (v10 + b0[None] <= cap[0] + 1e-12) & (a1 + b1[None] <= cap[1] + 1e-12)
                delta = np.where(ok, delta, np.nan)
            magnitude = np.abs(delta)
            finite = magnitude[np.isfinite(magnitude)]
            if finite.size and finite.max() > best:
                best = float(finite.max())
    return best
