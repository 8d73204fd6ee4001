"""Synthetic trace generator: determinism, rates, injections, drift."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from hfo import (
    ConfigError,
    GeneratorConfig,
    JobState,
    audit_labels,
    generate,
    generate_with_stats,
    month_key,
    relabel,
)
from hfo.generator import rule_bucket
from hfo.trace import Excluded, LabeledJob


def test_same_seed_same_trace():
    cfg = GeneratorConfig(seed=5, months=2, jobs_per_day_mean=8.0)
    assert generate(cfg) == generate(cfg)


def test_different_seed_different_trace():
    a = generate(GeneratorConfig(seed=5, months=2, jobs_per_day_mean=8.0))
    b = generate(GeneratorConfig(seed=6, months=2, jobs_per_day_mean=8.0))
    assert a != b


def test_jobs_sorted_by_submit_with_sequential_ids(small_trace):
    ids = [r.job_id for r in small_trace]
    assert ids == list(range(1, len(small_trace) + 1))
    submits = [r.submit_time for r in small_trace]
    assert submits == sorted(submits)


def test_trace_spans_requested_months(small_trace):
    months = sorted({month_key(r.submit_time) for r in small_trace})
    assert months == ["2020-05", "2020-06", "2020-07"]


def test_exact_rates_hits_overall_rate():
    cfg = GeneratorConfig(seed=9, months=2, jobs_per_day_mean=30.0, overall_fail_rate=0.11)
    records, stats = generate_with_stats(cfg)
    assert stats.realized_fail_rate == pytest.approx(0.11, abs=0.002)
    for m in stats.months:
        # exact_rates forces each month within one job of its target
        assert abs(m.n_failed - round(m.target_rate * m.n_kept)) <= 1


def test_stats_agree_with_audit():
    cfg = GeneratorConfig(
        seed=12,
        months=2,
        jobs_per_day_mean=25.0,
        discrepancy_rate=0.03,
        cancelled_rate=0.05,
        node_fail_rate=0.004,
    )
    records, stats = generate_with_stats(cfg)
    finished = [r for r in records if r.finished]
    report = audit_labels(finished)
    assert report.zero_ec_not_completed == stats.zero_ec_not_completed
    assert report.nonzero_ec_completed == stats.nonzero_ec_completed
    assert report.state_distribution.get(JobState.CANCELLED, 0) == stats.n_cancelled
    assert report.state_distribution.get(JobState.NODE_FAIL, 0) == stats.n_node_fail
    # relabeling excludes exactly the injected exclusions
    outcomes = [relabel(r) for r in finished]
    excluded = [o for o in outcomes if isinstance(o, Excluded)]
    kept = [o for o in outcomes if isinstance(o, LabeledJob)]
    assert len(excluded) == stats.n_cancelled + stats.n_node_fail
    assert len(kept) == stats.n_kept
    assert sum(1 for o in kept if o.outcome.value == "FAILED") == stats.n_failed


def test_cancelled_jobs_may_lack_start_time():
    cfg = GeneratorConfig(seed=30, months=2, jobs_per_day_mean=25.0, cancelled_rate=0.08)
    records = generate(cfg)
    cancelled = [r for r in records if r.original_state is JobState.CANCELLED]
    assert cancelled
    assert any(r.start_time is None for r in cancelled)
    assert all(r.exit_code in (0, 15) for r in cancelled)


def test_node_fail_exit_code():
    cfg = GeneratorConfig(seed=31, months=2, jobs_per_day_mean=30.0, node_fail_rate=0.01)
    records = generate(cfg)
    node_fail = [r for r in records if r.original_state is JobState.NODE_FAIL]
    assert node_fail
    assert all(r.exit_code == 9 for r in node_fail)


def test_discrepancies_point_both_ways():
    cfg = GeneratorConfig(seed=32, months=2, jobs_per_day_mean=30.0, discrepancy_rate=0.05)
    _, stats = generate_with_stats(cfg)
    assert stats.injected_zero_ec_not_completed > 0
    assert stats.injected_nonzero_ec_completed > 0


def test_failure_rule_is_deterministic_in_features():
    """Without noise or drift, a job's outcome is a pure function of
    (user, partition, time_limit): identical feature triples never disagree."""
    cfg = GeneratorConfig(seed=14, months=2, jobs_per_day_mean=30.0, exact_rates=False)
    records = generate(cfg)
    seen: dict[tuple, int] = {}
    for rec in records:
        if not rec.finished:
            continue
        key = (rec.user_id, rec.partition, rec.time_limit)
        label = 0 if rec.exit_code == 0 else 1
        assert seen.setdefault(key, label) == label


def test_drift_changes_rule_at_boundary():
    base = dict(seed=15, months=4, jobs_per_day_mean=25.0, exact_rates=False)
    plain = generate(GeneratorConfig(**base))
    shifted = generate(GeneratorConfig(drift_schedule=((2, 1),), **base))
    by_month_plain: dict[str, list] = {}
    by_month_shift: dict[str, list] = {}
    for records, acc in ((plain, by_month_plain), (shifted, by_month_shift)):
        for rec in records:
            if rec.finished:
                acc.setdefault(month_key(rec.submit_time), []).append(rec.exit_code == 0)
    months = sorted(by_month_plain)
    # same seed, same arrival process: pre-drift months agree, post-drift differ
    assert by_month_shift[months[0]] == by_month_plain[months[0]]
    assert by_month_shift[months[1]] == by_month_plain[months[1]]
    assert by_month_shift[months[2]] != by_month_plain[months[2]]


def test_rule_bucket_uniform_and_deterministic():
    vals = [rule_bucket(u, "batch", 60, 0) for u in range(2000)]
    assert vals == [rule_bucket(u, "batch", 60, 0) for u in range(2000)]
    assert all(0.0 <= v < 1.0 for v in vals)
    assert abs(sum(vals) / len(vals) - 0.5) < 0.03
    assert rule_bucket(1, "batch", 60, 0) != rule_bucket(1, "batch", 60, 1)
    assert rule_bucket(1, "batch", None, 0) != rule_bucket(1, "batch", 60, 0)


def test_unfinished_tail_jobs_present():
    records = generate(GeneratorConfig(seed=44, months=2, jobs_per_day_mean=25.0))
    assert any(not r.finished for r in records)


def test_start_month_configurable():
    start = datetime(2023, 1, 1, tzinfo=timezone.utc)
    records = generate(GeneratorConfig(seed=1, months=2, jobs_per_day_mean=5.0, start=start))
    assert min(month_key(r.submit_time) for r in records) == "2023-01"


class TestConfigValidation:
    def test_bad_months(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(seed=1, months=1)

    def test_bad_fail_rate(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(seed=1, overall_fail_rate=0.0)
        with pytest.raises(ConfigError):
            GeneratorConfig(seed=1, overall_fail_rate=1.0)

    def test_drift_month_out_of_range(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(seed=1, months=3, drift_schedule=((3, 1),))

    def test_exclusions_cannot_swallow_trace(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(seed=1, cancelled_rate=0.6, node_fail_rate=0.5)

    def test_naive_start_rejected(self):
        with pytest.raises(ConfigError):
            GeneratorConfig(seed=1, start=datetime(2023, 1, 1))
