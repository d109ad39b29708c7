"""Exception taxonomy shared by all fairseal modules."""

from __future__ import annotations


class FairsealError(Exception):
    """Base class for all errors raised by this package."""


class EmptyDatasetError(FairsealError):
    """An operation received zero records."""


class MixedSchemaError(FairsealError):
    """Some records carry the true attribute while others do not."""


class NonBinaryValueError(FairsealError):
    """A field that must be 0 or 1 held something else."""


class EmptyStratumError(FairsealError):
    """A conditioning stratum has zero mass, so a rate would be undefined."""

    def __init__(self, group: int, label: int, by: str = "a_hat"):
        self.group = group
        self.label = label
        self.by = by
        super().__init__(
            f"stratum ({by}={group}, y={label}) is empty; conditional rates undefined"
        )


class TrueAttributeMissingError(FairsealError):
    """The requested computation needs the true attribute, which is absent."""


class AssumptionViolatedError(FairsealError):
    """The error-dominance assumption does not hold for these inputs.

    Carries the full report so callers can surface the failing margins.
    """

    def __init__(self, report):
        self.report = report
        cells = ", ".join(f"(a_hat={i}, y={j})" for i, j in report.failing_cells())
        super().__init__(f"assumption check failed at cells: {cells}")


class DegenerateDenominatorError(FairsealError):
    """A bound denominator (r_hat adjusted by delta_u) is not positive."""


class DegeneratePrevalenceError(FairsealError):
    """Youden loss is undefined when P(Y=1) is 0 or 1."""


class InfeasibleError(FairsealError):
    """The linear program has no feasible point."""

    def __init__(self, message: str, binding: tuple[str, ...] = ()):
        self.binding = binding
        super().__init__(message)


class UnboundedProgramError(FairsealError):
    """The linear program is unbounded below (internal error for well-formed programs)."""


class CalibrationFailedError(FairsealError):
    """Bisection could not reach the target error rate within its search bounds."""


class AllReplicatesDroppedError(FairsealError):
    """Every bootstrap replicate was dropped (assumption failure or empty stratum)."""
