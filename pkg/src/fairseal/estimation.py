"""Finite-sample estimation from binary prediction records.

Turns raw `(a_hat, y, y_hat[, a])` records into exact integer contingency
tables and the plug-in probability estimates everything downstream consumes:
base rates `r_hat[i][j] = P(A_hat=i, Y=j)`, group conditionals
`alpha_hat[i][j] = P(Y_hat=1 | A_hat=i, Y=j)`, attribute-predictor error
profiles `(u0, u1)`, and, when the true attribute was observed, the true
violation `(delta_tpr, delta_fpr)` for validation.

Counts stay exact integers; division happens once, at the statistics
boundary.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    EmptyDatasetError,
    EmptyStratumError,
    MixedSchemaError,
    NonBinaryValueError,
    TrueAttributeMissingError,
)

CSV_FIELDS = ("a_hat", "y", "y_hat")
CSV_FIELDS_FULL = ("a_hat", "y", "y_hat", "a")


def _as_bit(value, name: str) -> int:
    if isinstance(value, (bool, np.bool_)):
        value = int(value)
    if not isinstance(value, (int, np.integer)) or value not in (0, 1):
        raise NonBinaryValueError(f"{name} must be 0 or 1, got {value!r}")
    return int(value)


@dataclass(frozen=True)
class OutcomeRecord:
    """One observation: proxy group, label, prediction, optional true group."""

    a_hat: int
    y: int
    y_hat: int
    a: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "a_hat", _as_bit(self.a_hat, "a_hat"))
        object.__setattr__(self, "y", _as_bit(self.y, "y"))
        object.__setattr__(self, "y_hat", _as_bit(self.y_hat, "y_hat"))
        if self.a is not None:
            object.__setattr__(self, "a", _as_bit(self.a, "a"))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class JointCounts:
    """Integer contingency table over (A_hat, Y, Y_hat), optionally over A too.

    `n[a_hat][y][y_hat]` always holds the 8-cell table; `n_full[a_hat][a][y][y_hat]`
    is present iff every ingested record carried the true attribute.
    """

    n: np.ndarray
    total: int
    n_full: np.ndarray | None = None

    def __post_init__(self):
        n = np.asarray(self.n, dtype=np.int64)
        if n.shape != (2, 2, 2) or (n < 0).any():
            raise ValueError("n must be a nonnegative (2, 2, 2) table")
        object.__setattr__(self, "n", _frozen(n))
        if int(n.sum()) != int(self.total):
            raise ValueError("total does not match the sum of cells")
        object.__setattr__(self, "total", int(self.total))
        if self.n_full is not None:
            full = np.asarray(self.n_full, dtype=np.int64)
            if full.shape != (2, 2, 2, 2) or (full < 0).any():
                raise ValueError("n_full must be a nonnegative (2, 2, 2, 2) table")
            if not np.array_equal(full.sum(axis=1), n):
                raise ValueError("n_full does not marginalize to n")
            object.__setattr__(self, "n_full", _frozen(full))

    @property
    def has_true_attribute(self) -> bool:
        return self.n_full is not None

    def __add__(self, other: "JointCounts") -> "JointCounts":
        if not isinstance(other, JointCounts):
            return NotImplemented
        if self.has_true_attribute != other.has_true_attribute:
            raise MixedSchemaError("cannot merge counts with and without the true attribute")
        full = None
        if self.n_full is not None:
            full = self.n_full + other.n_full
        return JointCounts(self.n + other.n, self.total + other.total, full)


def tabulate(records: Sequence[OutcomeRecord]) -> JointCounts:
    """Count records into a JointCounts table.

    Raises EmptyDatasetError on no records, MixedSchemaError when the true
    attribute is present on some records but not all, and NonBinaryValueError
    for out-of-alphabet values.
    """
    records = list(records)
    if not records:
        raise EmptyDatasetError("no records to tabulate")
    with_a = records[0].a is not None
    n = np.zeros((2, 2, 2), dtype=np.int64)
    full = np.zeros((2, 2, 2, 2), dtype=np.int64) if with_a else None
    for rec in records:
        a_hat = _as_bit(rec.a_hat, "a_hat")
        y = _as_bit(rec.y, "y")
        y_hat = _as_bit(rec.y_hat, "y_hat")
        if (rec.a is not None) != with_a:
            raise MixedSchemaError("true attribute must be present on all records or none")
        n[a_hat, y, y_hat] += 1
        if with_a:
            full[a_hat, _as_bit(rec.a, "a"), y, y_hat] += 1
    return JointCounts(n, len(records), full)


def counts_from_arrays(a_hat, y, y_hat, a=None) -> JointCounts:
    """Vectorized tabulation from parallel binary arrays."""
    arrays = {"a_hat": a_hat, "y": y, "y_hat": y_hat}
    if a is not None:
        arrays["a"] = a
    casted = {}
    length = None
    for name, arr in arrays.items():
        arr = np.asarray(arr)
        if arr.size == 0:
            raise EmptyDatasetError("no records to tabulate")
        if not np.isin(arr, (0, 1)).all():
            raise NonBinaryValueError(f"{name} must contain only 0/1 values")
        arr = arr.astype(np.int64)
        if length is None:
            length = arr.shape[0]
        elif arr.shape[0] != length:
            raise ValueError("input arrays must share a length")
        casted[name] = arr
    if a is None:
        idx = (casted["a_hat"] * 2 + casted["y"]) * 2 + casted["y_hat"]
        n = np.bincount(idx, minlength=8).reshape(2, 2, 2)
        return JointCounts(n, length)
    idx = ((casted["a_hat"] * 2 + casted["a"]) * 2 + casted["y"]) * 2 + casted["y_hat"]
    full = np.bincount(idx, minlength=16).reshape(2, 2, 2, 2)
    return JointCounts(full.sum(axis=1), length, full)


@dataclass(frozen=True)
class ProxyGroupStatistics:
    """Plug-in base rates and group conditionals over the proxy attribute.

    `r_hat[i][j] = P(A_hat=i, Y=j)` must be strictly positive in every cell;
    `alpha_hat[i][j] = P(Y_hat=1 | A_hat=i, Y=j)`; `p_y1 = P(Y=1)`.
    """

    r_hat: np.ndarray
    alpha_hat: np.ndarray
    p_y1: float

    def __post_init__(self):
        r = np.asarray(self.r_hat, dtype=float)
        alpha = np.asarray(self.alpha_hat, dtype=float)
        if r.shape != (2, 2) or alpha.shape != (2, 2):
            raise ValueError("r_hat and alpha_hat must be (2, 2)")
        if (r <= 0).any():
            i, j = divmod(int(np.argmin(r)), 2)
            raise EmptyStratumError(i, j)
        if abs(r.sum() - 1.0) > 1e-12:
            raise ValueError("r_hat must sum to 1")
        if (alpha < 0).any() or (alpha > 1).any():
            raise ValueError("alpha_hat entries must lie in [0, 1]")
        if abs(self.p_y1 - (r[0, 1] + r[1, 1])) > 1e-12:
            raise ValueError("p_y1 must equal r_hat[0][1] + r_hat[1][1]")
        object.__setattr__(self, "r_hat", _frozen(r))
        object.__setattr__(self, "alpha_hat", _frozen(alpha))
        object.__setattr__(self, "p_y1", float(self.p_y1))

    def p_a_hat(self, i: int) -> float:
        """Marginal P(A_hat=i)."""
        return float(self.r_hat[i, 0] + self.r_hat[i, 1])

    def replace_alpha(self, alpha_hat: np.ndarray) -> "ProxyGroupStatistics":
        """Same base rates with different group conditionals."""
        return ProxyGroupStatistics(self.r_hat.copy(), np.asarray(alpha_hat, dtype=float), self.p_y1)


def proxy_statistics(counts: JointCounts, pseudo_count: float = 0.0) -> ProxyGroupStatistics:
    """Estimate `r_hat` and `alpha_hat` from counts.

    The estimators are plain plug-in ratios; `pseudo_count` optionally adds a
    symmetric prior mass per cell (default 0, i.e. no smoothing).  A stratum
    with zero (smoothed) mass raises EmptyStratumError because downstream
    formulas require every r_hat > 0.
    """
    if pseudo_count < 0:
        raise ValueError("pseudo_count must be nonnegative")
    stratum = counts.n.sum(axis=2).astype(float)  # [i, j]
    positives = counts.n[:, :, 1].astype(float)
    if pseudo_count == 0 and (stratum == 0).any():
        i, j = divmod(int(np.argmin(stratum)), 2)
        raise EmptyStratumError(i, j)
    r_hat = (stratum + pseudo_count) / (counts.total + 4.0 * pseudo_count)
    alpha_hat = (positives + pseudo_count) / (stratum + 2.0 * pseudo_count)
    return ProxyGroupStatistics(r_hat, alpha_hat, float(r_hat[0, 1] + r_hat[1, 1]))


@dataclass(frozen=True)
class AttributeErrorProfile:
    """Error mass of the attribute predictor: `u_i = P(A_hat=i, A != i)`."""

    u0: float
    u1: float

    def __post_init__(self):
        if self.u0 < 0 or self.u1 < 0:
            raise ValueError("error masses must be nonnegative")
        if self.u0 + self.u1 > 1:
            raise ValueError("total error mass cannot exceed 1")
        object.__setattr__(self, "u0", float(self.u0))
        object.__setattr__(self, "u1", float(self.u1))

    @property
    def u(self) -> float:
        """Total misclassification mass of the attribute predictor."""
        return self.u0 + self.u1

    @property
    def delta_u(self) -> float:
        """Signed imbalance u0 - u1."""
        return self.u0 - self.u1

    def u_of(self, i: int) -> float:
        return self.u0 if i == 0 else self.u1

    def to_dict(self) -> dict:
        return {"u0": self.u0, "u1": self.u1}


def profile_from_pairs(pairs: Iterable[tuple[int, int]]) -> AttributeErrorProfile:
    """Exact error profile from paired (a_hat, a) observations."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyDatasetError("no (a_hat, a) pairs")
    n0 = n1 = 0
    for a_hat, a in pairs:
        a_hat = _as_bit(a_hat, "a_hat")
        a = _as_bit(a, "a")
        if a_hat == 0 and a != 0:
            n0 += 1
        elif a_hat == 1 and a != 1:
            n1 += 1
    count = len(pairs)
    return AttributeErrorProfile(n0 / count, n1 / count)


def profile_from_rates(u0: float, u1: float) -> AttributeErrorProfile:
    """Profile supplied directly as numeric error masses."""
    return AttributeErrorProfile(u0, u1)


@dataclass(frozen=True)
class TrueViolation:
    """Group conditionals and violation deltas measured against the true attribute."""

    alpha: np.ndarray
    delta_tpr: float = field(init=False)
    delta_fpr: float = field(init=False)

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.shape != (2, 2) or (alpha < 0).any() or (alpha > 1).any():
            raise ValueError("alpha must be a (2, 2) table of probabilities")
        object.__setattr__(self, "alpha", _frozen(alpha))
        object.__setattr__(self, "delta_tpr", float(alpha[1, 1] - alpha[0, 1]))
        object.__setattr__(self, "delta_fpr", float(alpha[1, 0] - alpha[0, 0]))


def true_violation(counts: JointCounts) -> TrueViolation:
    """True-group conditionals from a table that observed the true attribute.

    Validation-only: in the deployment regime the true attribute is never
    jointly observed with labels, so this is unavailable there by design.
    """
    if counts.n_full is None:
        raise TrueAttributeMissingError("counts were tabulated without the true attribute")
    by_a = counts.n_full.sum(axis=0)  # [a, y, y_hat]
    stratum = by_a.sum(axis=2).astype(float)  # [a, y]
    if (stratum == 0).any():
        a, y = divmod(int(np.argmin(stratum)), 2)
        raise EmptyStratumError(a, y, by="a")
    alpha = by_a[:, :, 1] / stratum
    return TrueViolation(alpha)


# ---------------------------------------------------------------------------
# File formats

def read_predictions_csv(path: str | Path) -> list[OutcomeRecord]:
    """Read a prediction table with header `a_hat,y,y_hat` or `a_hat,y,y_hat,a`.

    Values must be the strings "0" or "1"; any missing or extra field is an
    error.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        try:
            header = tuple(next(reader))
        except StopIteration:
            raise EmptyDatasetError(f"{path}: empty file") from None
        if header == CSV_FIELDS:
            with_a = False
        elif header == CSV_FIELDS_FULL:
            with_a = True
        else:
            raise MixedSchemaError(
                f"{path}: header must be {','.join(CSV_FIELDS)} or {','.join(CSV_FIELDS_FULL)}, "
                f"got {','.join(header)}"
            )
        records = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise MixedSchemaError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            values = []
            for name, text in zip(header, row):
                if text not in ("0", "1"):
                    raise NonBinaryValueError(f"{path}:{lineno}: {name} must be 0 or 1, got {text!r}")
                values.append(int(text))
            if with_a:
                records.append(OutcomeRecord(values[0], values[1], values[2], values[3]))
            else:
                records.append(OutcomeRecord(values[0], values[1], values[2]))
    if not records:
        raise EmptyDatasetError(f"{path}: no data rows")
    return records


def write_predictions_csv(path: str | Path, records: Sequence[OutcomeRecord]) -> None:
    """Write records back out in the ingestion schema (true attribute kept if present)."""
    if not records:
        raise EmptyDatasetError("no records to write")
    with_a = records[0].a is not None
    header = CSV_FIELDS_FULL if with_a else CSV_FIELDS
    lines = [",".join(header)]
    for rec in records:
        if (rec.a is not None) != with_a:
            raise MixedSchemaError("true attribute must be present on all records or none")
        fields = [rec.a_hat, rec.y, rec.y_hat] + ([rec.a] if with_a else [])
        lines.append(",".join(str(v) for v in fields))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_profile(path: str | Path) -> AttributeErrorProfile:
    """Read an error profile file: a JSON object with keys `u0` and `u1`."""
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not valid profile JSON: {exc}") from exc
    if not isinstance(payload, dict) or set(payload) != {"u0", "u1"}:
        raise ValueError(f"{path}: profile must contain exactly the keys u0 and u1")
    return AttributeErrorProfile(float(payload["u0"]), float(payload["u1"]))
