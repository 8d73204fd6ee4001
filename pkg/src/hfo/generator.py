"""Deterministic synthetic workload generator for desk-scale experiments.

Jobs are emitted in per-user submission batches whose members share name and
command stems. Each job's failure outcome comes from the active failure rule,
a deterministic hash of (user_id, partition, time_limit) thresholded by the
month's target fail rate; a drift schedule swaps the rule (and jolts the rate)
at month boundaries. An optional correction pass then flips a small seeded
selection of labels so realized monthly rates hit their targets exactly, and a
configurable fraction of records receive a scheduler state inconsistent with
their exit code. All randomness derives from the config seed (PCG64), so a
config maps to exactly one trace.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Optional

import numpy as np

from .errors import ConfigError
from .trace import JobRecord, JobState

PRNG_NAME = "numpy-default-rng(PCG64)"

DEFAULT_START = datetime(2020, 5, 1, tzinfo=timezone.utc)

_PARTITIONS = ("batch", "gpu", "bigmem", "debug")
_QOS = ("normal", "high", "low")
_TIME_LIMITS = (None, 30, 60, 120, 240, 480, 720, 1440)
_APPS = ("job", "sim", "train", "eval", "proc")

_FAIL_EXIT_CODES = np.array([1, 2, 9, 125, 134, 137, 139, 143])
_FAIL_EXIT_P = np.array([0.50, 0.14, 0.08, 0.07, 0.06, 0.06, 0.05, 0.04])

_DAY = 86400


@dataclass(frozen=True)
class GeneratorConfig:
    seed: int
    n_users: int = 25
    months: int = 6
    jobs_per_day_mean: float = 60.0
    batch_size_mean: float = 4.0
    overall_fail_rate: float = 0.11
    monthly_fail_rate_jitter: float = 0.0
    drift_schedule: tuple[tuple[int, int], ...] = ()
    discrepancy_rate: float = 0.0
    cancelled_rate: float = 0.0
    node_fail_rate: float = 0.0
    exact_rates: bool = True
    start: datetime = DEFAULT_START

    def __post_init__(self):
        object.__setattr__(self, "drift_schedule", tuple((int(m), int(r)) for m, r in self.drift_schedule))
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("seed must fit in 64 unsigned bits")
        if self.n_users < 1:
            raise ConfigError("n_users must be >= 1")
        if self.months < 2:
            raise ConfigError("months must be >= 2")
        if self.jobs_per_day_mean <= 0:
            raise ConfigError("jobs_per_day_mean must be positive")
        if self.batch_size_mean < 1:
            raise ConfigError("batch_size_mean must be >= 1")
        if not (0.0 < self.overall_fail_rate < 1.0):
            raise ConfigError("overall_fail_rate must be in (0, 1)")
        if self.monthly_fail_rate_jitter < 0:
            raise ConfigError("monthly_fail_rate_jitter must be >= 0")
        if not (0.0 <= self.discrepancy_rate < 1.0):
            raise ConfigError("discrepancy_rate must be in [0, 1)")
        if self.cancelled_rate < 0 or self.node_fail_rate < 0:
            raise ConfigError("exclusion rates must be >= 0")
        if self.cancelled_rate + self.node_fail_rate >= 0.5:
            raise ConfigError("exclusion rates leave too few labelable jobs")
        for m, _ in self.drift_schedule:
            if not (0 <= m < self.months):
                raise ConfigError(f"drift month {m} outside [0, {self.months})")
        if self.start.tzinfo is None:
            raise ConfigError("start must be timezone-aware")


@dataclass
class MonthStats:
    month: str
    rule_id: int
    target_rate: float
    n_kept: int = 0
    n_failed: int = 0
    flips_to_failed: int = 0
    flips_to_completed: int = 0

    @property
    def realized_rate(self) -> float:
        return self.n_failed / self.n_kept if self.n_kept else 0.0


@dataclass
class GeneratorStats:
    """The generator's own bookkeeping, kept so tests and audits can check
    realized quantities against what was actually injected."""

    seed: int
    prng: str = PRNG_NAME
    n_jobs: int = 0
    n_cancelled: int = 0
    n_node_fail: int = 0
    n_unfinished: int = 0
    n_kept: int = 0
    n_failed: int = 0
    months: list[MonthStats] = field(default_factory=list)
    injected_zero_ec_not_completed: int = 0   # discrepancy type a, kept jobs
    injected_nonzero_ec_completed: int = 0    # discrepancy type b, kept jobs
    cancelled_zero_ec: int = 0                # cancellations that also carry EC 0
    noise_flipped_job_ids: set[int] = field(default_factory=set)
    discrepant_job_ids: set[int] = field(default_factory=set)
    n_straddling_day_boundary: int = 0

    @property
    def realized_fail_rate(self) -> float:
        return self.n_failed / self.n_kept if self.n_kept else 0.0

    @property
    def zero_ec_not_completed(self) -> int:
        # what a full-trace audit must find for the a-side discrepancy count
        return self.injected_zero_ec_not_completed + self.cancelled_zero_ec

    @property
    def nonzero_ec_completed(self) -> int:
        return self.injected_nonzero_ec_completed

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "prng": self.prng,
            "n_jobs": self.n_jobs,
            "n_cancelled": self.n_cancelled,
            "n_node_fail": self.n_node_fail,
            "n_unfinished": self.n_unfinished,
            "n_kept": self.n_kept,
            "n_failed": self.n_failed,
            "realized_fail_rate": self.realized_fail_rate,
            "zero_ec_not_completed": self.zero_ec_not_completed,
            "nonzero_ec_completed": self.nonzero_ec_completed,
            "n_straddling_day_boundary": self.n_straddling_day_boundary,
            "months": [
                {
                    "month": m.month,
                    "rule_id": m.rule_id,
                    "target_rate": m.target_rate,
                    "n_kept": m.n_kept,
                    "n_failed": m.n_failed,
                    "realized_rate": m.realized_rate,
                    "flips": m.flips_to_failed + m.flips_to_completed,
                }
                for m in self.months
            ],
        }


def rule_bucket(user_id: int, partition: str, time_limit: Optional[int], rule_id: int) -> float:
    """Deterministic value in [0, 1) for a job's rule-relevant features."""
    key = f"{user_id}|{partition}|{time_limit if time_limit is not None else 'inf'}|{rule_id}"
    digest = hashlib.blake2b(key.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") / 2.0**64


def _month_starts(start: datetime, months: int) -> list[datetime]:
    start = start.astimezone(timezone.utc).replace(day=1, hour=0, minute=0, second=0, microsecond=0)
    out = [start]
    for _ in range(months):
        prev = out[-1]
        year, month = (prev.year + 1, 1) if prev.month == 12 else (prev.year, prev.month + 1)
        out.append(prev.replace(year=year, month=month))
    return out


def _rule_for_month(schedule: tuple[tuple[int, int], ...], months: int) -> list[int]:
    rules = [0] * months
    for m_idx, rule_id in sorted(schedule):
        for m in range(m_idx, months):
            rules[m] = rule_id
    return rules


def _monthly_rates(config: GeneratorConfig, rng: np.random.Generator) -> list[float]:
    j = config.monthly_fail_rate_jitter
    rates = [config.overall_fail_rate + rng.uniform(-j, j) for _ in range(config.months)]
    # a rule change is accompanied by a rate jolt of the full jitter width,
    # so drift boundaries are visible in the monthly label distribution
    for m_idx, _ in sorted(config.drift_schedule):
        if m_idx >= 1:
            rates[m_idx - 1] = config.overall_fail_rate - j
            rates[m_idx] = config.overall_fail_rate + j
    return [float(np.clip(r, 0.005, 0.95)) for r in rates]


@dataclass
class _Draft:
    """Mutable job under construction, before ids and labels are final."""

    seq: int
    user_id: int
    group_id: int
    account: str
    name: str
    command: str
    partition: str
    qos: str
    time_limit: Optional[int]
    num_cpu: int
    num_nodes: int
    num_gpus: int
    num_tasks_per_socket: Optional[int]
    requested_nodes: tuple[str, ...]
    submit_epoch: int
    start_epoch: Optional[int]
    end_epoch: int
    month_index: int
    batch_prev: Optional["_Draft"] = None
    wants_dependency: bool = False
    job_id: int = 0
    failed: bool = False
    exit_code: int = 0
    state: JobState = JobState.COMPLETED
    excluded: bool = False
    unfinished: bool = False


def generate_with_stats(config: GeneratorConfig) -> tuple[list[JobRecord], GeneratorStats]:
    """Generate a trace plus the bookkeeping describing what was injected."""
    rng_skel = np.random.default_rng([config.seed, 0])
    rng_rates = np.random.default_rng([config.seed, 1])
    rng_labels = np.random.default_rng([config.seed, 2])
    rng_states = np.random.default_rng([config.seed, 3])

    month_starts = _month_starts(config.start, config.months)
    month_epochs = [int(m.timestamp()) for m in month_starts]
    total_days = (month_starts[-1] - month_starts[0]).days
    rates = _monthly_rates(config, rng_rates)
    rules = _rule_for_month(config.drift_schedule, config.months)

    users = _make_users(config, rng_skel)
    weights = np.array([1.0 / (i + 1) ** 0.6 for i in range(config.n_users)])
    weights /= weights.sum()

    batches_per_day = config.jobs_per_day_mean / config.batch_size_mean
    drafts: list[_Draft] = []
    seq = 0
    batch_no = 0
    base_epoch = month_epochs[0]
    for day in range(total_days):
        day_epoch = base_epoch + day * _DAY
        for _ in range(int(rng_skel.poisson(batches_per_day))):
            batch_no += 1
            user = users[int(rng_skel.choice(config.n_users, p=weights))]
            template = user["templates"][int(rng_skel.integers(len(user["templates"])))]
            size = 1 + int(rng_skel.poisson(config.batch_size_mean - 1.0))
            stem = f"{template['app']}{batch_no}"
            submit = day_epoch + int(rng_skel.integers(0, _DAY))
            prev: Optional[_Draft] = None
            for i in range(size):
                if i > 0:
                    submit += int(rng_skel.integers(5, 90))
                wait = int(rng_skel.exponential(600.0))
                duration = int(rng_skel.lognormal(np.log(600.0), 1.4))
                if rng_skel.random() < 0.006:
                    duration = int(rng_skel.uniform(1.0, 3.0) * _DAY)
                duration = min(max(duration, 10), 4 * _DAY)
                month_index = _month_of(submit, month_epochs)
                nodes: tuple[str, ...] = ()
                if rng_skel.random() < 0.05:
                    nodes = tuple(
                        f"n{int(rng_skel.integers(1, 200)):03d}"
                        for _ in range(int(rng_skel.integers(1, 3)))
                    )
                draft = _Draft(
                    seq=seq,
                    user_id=user["user_id"],
                    group_id=user["group_id"],
                    account=user["account"],
                    name=f"{stem}_{i}",
                    command=f"run_{stem}.sh",
                    partition=template["partition"],
                    qos=template["qos"],
                    time_limit=template["time_limit"],
                    num_cpu=template["num_cpu"],
                    num_nodes=template["num_nodes"],
                    num_gpus=template["num_gpus"],
                    num_tasks_per_socket=template["num_tasks_per_socket"],
                    requested_nodes=nodes,
                    submit_epoch=submit,
                    start_epoch=submit + wait,
                    end_epoch=submit + wait + duration,
                    month_index=month_index,
                    batch_prev=prev,
                    wants_dependency=prev is not None and rng_skel.random() < 0.12,
                )
                drafts.append(draft)
                prev = draft
                seq += 1

    drafts.sort(key=lambda d: (d.submit_epoch, d.seq))
    horizon = month_epochs[-1]  # the trace is a dump taken at this instant
    for idx, draft in enumerate(drafts):
        draft.job_id = 1 + idx
        if draft.end_epoch >= horizon:
            draft.unfinished = True
            if draft.start_epoch is not None and draft.start_epoch >= horizon:
                draft.start_epoch = None

    stats = GeneratorStats(seed=config.seed)
    stats.months = [
        MonthStats(month=f"{m.year:04d}-{m.month:02d}", rule_id=rules[i], target_rate=rates[i])
        for i, m in enumerate(month_starts[:-1])
    ]

    _assign_exclusions(drafts, config, rng_states, stats)
    _assign_outcomes(drafts, config, rates, rules, rng_labels, stats)
    _assign_states(drafts, config, rng_states, stats)

    records = [_to_record(d) for d in drafts]
    stats.n_jobs = len(records)
    stats.n_unfinished = sum(1 for d in drafts if d.unfinished)
    stats.n_straddling_day_boundary = sum(
        1 for d in drafts if d.end_epoch // _DAY > d.submit_epoch // _DAY
    )
    return records, stats


def generate(config: GeneratorConfig) -> list[JobRecord]:
    """Generate a trace; a fixed config always yields the identical job list."""
    return generate_with_stats(config)[0]


def _make_users(config: GeneratorConfig, rng: np.random.Generator) -> list[dict]:
    users = []
    for i in range(config.n_users):
        n_templates = 1 + int(rng.integers(0, 3))
        templates = []
        for _ in range(n_templates):
            num_nodes = int(rng.choice([1, 1, 1, 2, 4, 8]))
            on_gpu = rng.random() < 0.3
            templates.append(
                {
                    "app": str(rng.choice(_APPS)),
                    "partition": "gpu" if on_gpu else str(rng.choice(_PARTITIONS)),
                    "qos": str(rng.choice(_QOS)),
                    "time_limit": _TIME_LIMITS[int(rng.integers(len(_TIME_LIMITS)))],
                    "num_cpu": int(rng.choice([1, 2, 4, 8, 16, 32])) * num_nodes,
                    "num_nodes": num_nodes,
                    "num_gpus": 4 * num_nodes if on_gpu else 0,
                    "num_tasks_per_socket": int(rng.integers(1, 5)) if rng.random() < 0.6 else None,
                }
            )
        users.append(
            {
                "user_id": 1000 + i,
                "group_id": 100 + i % 12,
                "account": f"acct{i % 10:02d}",
                "templates": templates,
            }
        )
    return users


def _month_of(epoch: int, month_epochs: list[int]) -> int:
    for i in range(len(month_epochs) - 1):
        if epoch < month_epochs[i + 1]:
            return i
    return len(month_epochs) - 2


def _assign_exclusions(
    drafts: list[_Draft], config: GeneratorConfig, rng: np.random.Generator, stats: GeneratorStats
) -> None:
    for d in drafts:
        if d.unfinished:
            continue
        u = rng.random()
        if u < config.cancelled_rate:
            d.excluded = True
            d.state = JobState.CANCELLED
            d.start_epoch = None
            d.end_epoch = d.submit_epoch + int(rng.integers(10, 3600))
            d.exit_code = 0 if rng.random() < 0.5 else 15
            stats.n_cancelled += 1
            if d.exit_code == 0:
                stats.cancelled_zero_ec += 1
        elif u < config.cancelled_rate + config.node_fail_rate:
            d.excluded = True
            d.state = JobState.NODE_FAIL
            d.exit_code = 9
            stats.n_node_fail += 1


def _assign_outcomes(
    drafts: list[_Draft],
    config: GeneratorConfig,
    rates: list[float],
    rules: list[int],
    rng: np.random.Generator,
    stats: GeneratorStats,
) -> None:
    by_month: dict[int, list[_Draft]] = {}
    for d in drafts:
        if d.excluded or d.unfinished:
            continue
        d.failed = rule_bucket(d.user_id, d.partition, d.time_limit, rules[d.month_index]) < rates[d.month_index]
        by_month.setdefault(d.month_index, []).append(d)

    for m, group in sorted(by_month.items()):
        mstats = stats.months[m]
        mstats.n_kept = len(group)
        if config.exact_rates:
            target = int(round(rates[m] * len(group)))
            current = sum(1 for d in group if d.failed)
            if current < target:
                pool = [d for d in group if not d.failed]
                picks = rng.choice(len(pool), size=target - current, replace=False)
                for p in picks:
                    pool[int(p)].failed = True
                    stats.noise_flipped_job_ids.add(pool[int(p)].job_id)
                mstats.flips_to_failed = target - current
            elif current > target:
                pool = [d for d in group if d.failed]
                picks = rng.choice(len(pool), size=current - target, replace=False)
                for p in picks:
                    pool[int(p)].failed = False
                    stats.noise_flipped_job_ids.add(pool[int(p)].job_id)
                mstats.flips_to_completed = current - target
        mstats.n_failed = sum(1 for d in group if d.failed)
        stats.n_kept += mstats.n_kept
        stats.n_failed += mstats.n_failed

    for d in drafts:
        if d.excluded or d.unfinished:
            continue
        if d.failed:
            d.exit_code = int(rng.choice(_FAIL_EXIT_CODES, p=_FAIL_EXIT_P))
        else:
            d.exit_code = 0


def _assign_states(
    drafts: list[_Draft], config: GeneratorConfig, rng: np.random.Generator, stats: GeneratorStats
) -> None:
    fail_states = [JobState.FAILED, JobState.TIMEOUT, JobState.OUT_OF_MEMORY, JobState.PREEMPTED]
    for d in drafts:
        if d.excluded or d.unfinished:
            continue
        if d.failed:
            d.state = fail_states[int(rng.choice(4, p=[0.85, 0.08, 0.05, 0.02]))]
        else:
            d.state = JobState.COMPLETED
        if config.discrepancy_rate > 0 and rng.random() < config.discrepancy_rate:
            stats.discrepant_job_ids.add(d.job_id)
            if d.exit_code == 0:
                d.state = fail_states[int(rng.choice(4, p=[0.6, 0.2, 0.1, 0.1]))]
                stats.injected_zero_ec_not_completed += 1
            else:
                d.state = JobState.COMPLETED
                stats.injected_nonzero_ec_completed += 1


def _to_record(d: _Draft) -> JobRecord:
    dependency = ""
    if d.wants_dependency and d.batch_prev is not None:
        dependency = f"afterok:{d.batch_prev.job_id}"
    return JobRecord(
        job_id=d.job_id,
        name=d.name,
        command=d.command,
        account=d.account,
        user_id=d.user_id,
        dependency=dependency,
        group_id=d.group_id,
        requested_nodes=d.requested_nodes,
        num_tasks_per_socket=d.num_tasks_per_socket,
        partition=d.partition,
        time_limit=d.time_limit,
        qos=d.qos,
        num_cpu=d.num_cpu,
        num_nodes=d.num_nodes,
        num_gpus=d.num_gpus,
        submit_time=_dt(d.submit_epoch),
        start_time=_dt(d.start_epoch) if d.start_epoch is not None else None,
        end_time=None if d.unfinished else _dt(d.end_epoch),
        exit_code=None if d.unfinished else d.exit_code,
        original_state=None if d.unfinished else d.state,
    )


def _dt(epoch: int) -> datetime:
    return datetime.fromtimestamp(epoch, tz=timezone.utc)
