"""Confusion counts and per-class metrics with failed as the positive class.

A prediction is a true positive when a failed job is predicted failed. The
completed class swaps the roles, so its precision is tn / (tn + fn) and its
recall tn / (tn + fp). Any metric whose denominator is zero is defined as 0,
and the macro column is the unweighted mean of the two classes.

Monthly aggregation sums confusion counts inside each calendar month; the
headline summary is then the unweighted mean of the monthly metric values, so
low-traffic months weigh the same as busy ones. Pooled metrics over summed
counts are also produced for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyEvaluation


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def accumulate(self, y_true: np.ndarray, y_pred: np.ndarray) -> "ConfusionCounts":
        """New counts with the given labelled predictions added."""
        y_true = np.asarray(y_true, dtype=np.int64)
        y_pred = np.asarray(y_pred, dtype=np.int64)
        if y_true.shape != y_pred.shape:
            raise EmptyEvaluation(f"label shapes differ: {y_true.shape} vs {y_pred.shape}")
        return ConfusionCounts(
            tp=self.tp + int(np.sum((y_true == 1) & (y_pred == 1))),
            fp=self.fp + int(np.sum((y_true == 0) & (y_pred == 1))),
            tn=self.tn + int(np.sum((y_true == 0) & (y_pred == 0))),
            fn=self.fn + int(np.sum((y_true == 1) & (y_pred == 0))),
        )

    def merge(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}

    @classmethod
    def from_dict(cls, d: dict) -> "ConfusionCounts":
        return cls(tp=int(d["tp"]), fp=int(d["fp"]), tn=int(d["tn"]), fn=int(d["fn"]))


def _ratio(num: int, den: int) -> float:
    return num / den if den > 0 else 0.0


def _f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if (p + r) > 0.0 else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float

    def to_dict(self) -> dict:
        return {"p": self.precision, "r": self.recall, "f1": self.f1}

    @classmethod
    def from_dict(cls, d: dict) -> "ClassMetrics":
        return cls(precision=float(d["p"]), recall=float(d["r"]), f1=float(d["f1"]))


@dataclass(frozen=True)
class MetricsReport:
    counts: ConfusionCounts
    completed: ClassMetrics
    failed: ClassMetrics
    macro: ClassMetrics


def compute_metrics(counts: ConfusionCounts) -> MetricsReport:
    """Per-class and macro precision / recall / F1 from confusion counts."""
    if counts.total == 0:
        raise EmptyEvaluation("no predictions to evaluate")
    fp_, fr_ = _ratio(counts.tp, counts.tp + counts.fp), _ratio(counts.tp, counts.tp + counts.fn)
    cp_, cr_ = _ratio(counts.tn, counts.tn + counts.fn), _ratio(counts.tn, counts.tn + counts.fp)
    failed = ClassMetrics(fp_, fr_, _f1(fp_, fr_))
    completed = ClassMetrics(cp_, cr_, _f1(cp_, cr_))
    macro = ClassMetrics(
        (completed.precision + failed.precision) / 2.0,
        (completed.recall + failed.recall) / 2.0,
        (completed.f1 + failed.f1) / 2.0,
    )
    return MetricsReport(counts=counts, completed=completed, failed=failed, macro=macro)


@dataclass(frozen=True)
class MonthlyMetrics:
    month: str
    counts: ConfusionCounts
    completed: ClassMetrics
    failed: ClassMetrics
    macro: ClassMetrics

    def to_dict(self) -> dict:
        return {
            "month": self.month,
            "counts": self.counts.to_dict(),
            "completed": self.completed.to_dict(),
            "failed": self.failed.to_dict(),
            "macro": self.macro.to_dict(),
        }


@dataclass(frozen=True)
class MeanMetrics:
    completed: ClassMetrics
    failed: ClassMetrics
    macro: ClassMetrics

    def to_dict(self) -> dict:
        return {
            "completed": self.completed.to_dict(),
            "failed": self.failed.to_dict(),
            "macro": self.macro.to_dict(),
        }


def aggregate_monthly(
    per_month: Sequence[tuple[str, ConfusionCounts]],
) -> tuple[list[MonthlyMetrics], MeanMetrics, MetricsReport, list[str]]:
    """Turn per-month counts into monthly rows, their mean, and pooled totals.

    Months arriving in multiple pieces are summed first. Months with no
    predictions are dropped from the mean and flagged in the warnings list.
    """
    summed: dict[str, ConfusionCounts] = {}
    for month, counts in per_month:
        summed[month] = summed.get(month, ConfusionCounts()).merge(counts)

    rows: list[MonthlyMetrics] = []
    warnings_out: list[str] = []
    pooled_counts = ConfusionCounts()
    for month in sorted(summed):
        counts = summed[month]
        pooled_counts = pooled_counts.merge(counts)
        if counts.total == 0:
            warnings_out.append(f"month {month} had no evaluated jobs; excluded from monthly mean")
            continue
        report = compute_metrics(counts)
        rows.append(
            MonthlyMetrics(
                month=month,
                counts=counts,
                completed=report.completed,
                failed=report.failed,
                macro=report.macro,
            )
        )
    if not rows:
        raise EmptyEvaluation("no month contains evaluated jobs")
    mean = mean_of_monthly(rows)
    pooled = compute_metrics(pooled_counts)
    return rows, mean, pooled, warnings_out


def mean_of_monthly(rows: Iterable[MonthlyMetrics]) -> MeanMetrics:
    rows = list(rows)
    if not rows:
        raise EmptyEvaluation("cannot average zero monthly rows")

    def _mean(vals: list[float]) -> float:
        return float(sum(vals) / len(vals))

    def _cls(pick) -> ClassMetrics:
        return ClassMetrics(
            precision=_mean([pick(r).precision for r in rows]),
            recall=_mean([pick(r).recall for r in rows]),
            f1=_mean([pick(r).f1 for r in rows]),
        )

    return MeanMetrics(
        completed=_cls(lambda r: r.completed),
        failed=_cls(lambda r: r.failed),
        macro=_cls(lambda r: r.macro),
    )


def confusion_from_labels(y_true: np.ndarray, y_pred: np.ndarray) -> ConfusionCounts:
    return ConfusionCounts().accumulate(y_true, y_pred)
