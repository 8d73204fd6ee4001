"""Core domain types for HPC jobs, exit-code based labels, and label auditing.

A job's scheduler-assigned exit state may disagree with its exit code; labels
used for learning are always derived from the exit code, with cancelled and
node-failure jobs excluded entirely.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Union

from .errors import EmptyTrace, UnfinishedJob, ValidationError


class JobState(enum.Enum):
    """Exit state assigned by the scheduler at job termination."""

    COMPLETED = "COMPLETED"
    FAILED = "FAILED"
    CANCELLED = "CANCELLED"
    TIMEOUT = "TIMEOUT"
    OUT_OF_MEMORY = "OUT_OF_MEMORY"
    PREEMPTED = "PREEMPTED"
    NODE_FAIL = "NODE_FAIL"


class ExitOutcome(enum.Enum):
    """Binary label derived from the exit code. FAILED is the positive class."""

    COMPLETED = "COMPLETED"
    FAILED = "FAILED"


#: States whose jobs are removed before labeling: user-driven cancellations and
#: hardware-driven node failures are not workload-caused outcomes.
EXCLUDED_STATES = frozenset({JobState.CANCELLED, JobState.NODE_FAIL})


def _as_utc(ts: Optional[datetime]) -> Optional[datetime]:
    if ts is None:
        return None
    if ts.tzinfo is None:
        raise ValidationError(f"timestamp {ts!r} must be timezone-aware")
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class JobRecord:
    """One submitted job: submit-time features plus lifecycle and outcome fields.

    The fifteen submit-time features (name through submit_time) are the only
    inputs ever shown to a predictor; lifecycle timestamps, exit_code and
    original_state exist for labeling and for temporal bookkeeping.
    """

    job_id: int
    name: str
    command: str
    account: str
    user_id: int
    dependency: str
    group_id: int
    requested_nodes: tuple[str, ...]
    num_tasks_per_socket: Optional[int]
    partition: str
    time_limit: Optional[int]  # minutes; None means "infinite"
    qos: str
    num_cpu: int
    num_nodes: int
    num_gpus: int
    submit_time: datetime
    start_time: Optional[datetime] = None
    end_time: Optional[datetime] = None
    exit_code: Optional[int] = None  # first element of the scheduler's code pair
    original_state: Optional[JobState] = None  # None only for unfinished jobs

    def __post_init__(self):
        object.__setattr__(self, "requested_nodes", tuple(self.requested_nodes))
        object.__setattr__(self, "submit_time", _as_utc(self.submit_time))
        object.__setattr__(self, "start_time", _as_utc(self.start_time))
        object.__setattr__(self, "end_time", _as_utc(self.end_time))
        if self.num_cpu < 1:
            raise ValidationError(f"job {self.job_id}: num_cpu must be >= 1")
        if self.num_nodes < 1:
            raise ValidationError(f"job {self.job_id}: num_nodes must be >= 1")
        if self.num_gpus < 0:
            raise ValidationError(f"job {self.job_id}: num_gpus must be >= 0")
        if self.exit_code is not None and self.exit_code < 0:
            raise ValidationError(f"job {self.job_id}: exit_code must be >= 0")
        if self.start_time is not None and self.submit_time > self.start_time:
            raise ValidationError(f"job {self.job_id}: submit_time > start_time")
        if self.end_time is not None:
            lower = self.start_time if self.start_time is not None else self.submit_time
            if lower > self.end_time:
                raise ValidationError(f"job {self.job_id}: timestamps not monotonic")
            if self.exit_code is None:
                raise ValidationError(f"job {self.job_id}: finished job lacks exit_code")

    @property
    def finished(self) -> bool:
        return self.end_time is not None


@dataclass(frozen=True)
class LabeledJob:
    """A finished job together with its exit-code derived outcome."""

    record: JobRecord
    outcome: ExitOutcome

    def __post_init__(self):
        if not self.record.finished:
            raise ValidationError(f"job {self.record.job_id}: cannot label unfinished job")
        expected = ExitOutcome.COMPLETED if self.record.exit_code == 0 else ExitOutcome.FAILED
        if self.outcome is not expected:
            raise ValidationError(
                f"job {self.record.job_id}: outcome {self.outcome} inconsistent with "
                f"exit_code {self.record.exit_code}"
            )


@dataclass(frozen=True)
class Excluded:
    """A finished job dropped from the dataset before labeling."""

    record: JobRecord
    reason: JobState


def relabel(record: JobRecord) -> Union[LabeledJob, Excluded]:
    """Assign the exit-code label to one finished job, or exclude it.

    Cancelled and node-failure jobs are excluded. Every other job is labeled
    COMPLETED iff its exit code is 0; the scheduler's original state is
    otherwise ignored.

    Raises UnfinishedJob if end_time or exit_code is missing.
    """
    if record.end_time is None or record.exit_code is None:
        raise UnfinishedJob(f"job {record.job_id} has not finished")
    if record.original_state in EXCLUDED_STATES:
        return Excluded(record=record, reason=record.original_state)
    outcome = ExitOutcome.COMPLETED if record.exit_code == 0 else ExitOutcome.FAILED
    return LabeledJob(record=record, outcome=outcome)


@dataclass(frozen=True)
class AuditReport:
    """Counts of scheduler-state vs exit-code disagreements over a trace.

    zero_ec_not_completed counts records whose state is not COMPLETED while the
    exit code is 0; nonzero_ec_completed counts the reverse case. The per-state
    breakdown of the first group is kept so the dominant source of zero-EC
    disagreement can be inspected rather than assumed.
    """

    total: int
    zero_ec_not_completed: int
    nonzero_ec_completed: int
    state_distribution: dict[JobState, int] = field(default_factory=dict)
    zero_ec_breakdown: dict[JobState, int] = field(default_factory=dict)

    def state_percentages(self) -> dict[JobState, float]:
        return {s: 100.0 * n / self.total for s, n in self.state_distribution.items()}


def audit_labels(trace: list[JobRecord]) -> AuditReport:
    """Count state/exit-code discrepancies and the per-state distribution.

    Raises EmptyTrace on an empty input and UnfinishedJob if any record has
    not finished.
    """
    if not trace:
        raise EmptyTrace("cannot audit an empty trace")
    a = 0
    b = 0
    dist: dict[JobState, int] = {}
    breakdown: dict[JobState, int] = {}
    for rec in trace:
        if not rec.finished or rec.exit_code is None or rec.original_state is None:
            raise UnfinishedJob(f"job {rec.job_id} has not finished")
        dist[rec.original_state] = dist.get(rec.original_state, 0) + 1
        if rec.original_state is not JobState.COMPLETED and rec.exit_code == 0:
            a += 1
            breakdown[rec.original_state] = breakdown.get(rec.original_state, 0) + 1
        elif rec.original_state is JobState.COMPLETED and rec.exit_code != 0:
            b += 1
    return AuditReport(
        total=len(trace),
        zero_ec_not_completed=a,
        nonzero_ec_completed=b,
        state_distribution=dist,
        zero_ec_breakdown=breakdown,
    )


def month_key(ts: datetime) -> str:
    """Calendar month of a UTC timestamp as 'YYYY-MM'."""
    ts = ts.astimezone(timezone.utc)
    return f"{ts.year:04d}-{ts.month:02d}"


def monthly_distribution(jobs: list[LabeledJob]) -> list[tuple[str, int, int]]:
    """Per-calendar-month (completed, failed) counts, ordered chronologically."""
    buckets: dict[str, list[int]] = {}
    for job in jobs:
        key = month_key(job.record.submit_time)
        bucket = buckets.setdefault(key, [0, 0])
        if job.outcome is ExitOutcome.COMPLETED:
            bucket[0] += 1
        else:
            bucket[1] += 1
    return [(k, buckets[k][0], buckets[k][1]) for k in sorted(buckets)]
