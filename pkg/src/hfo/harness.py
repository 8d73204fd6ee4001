"""Offline and online evaluation protocols with no-leakage enforcement.

Offline: jobs sort chronologically (submit time, then job id), the first
floor(split * n) become the single training set, and the rest are scored by
one fitted model.

Online: the first test boundary T0 sits alpha days after the earliest
submission. Jobs submitted from T0 on partition into consecutive omega-day
batches. Before each batch at boundary Tb, supervised models (and their
dictionaries, under the INT encoding) refit on the jobs submitted within
[Tb - alpha, Tb) that also finished before Tb; with window membership "end"
the bracket applies to end times instead. KNN never refits: its reference
set extends per test job with every job that finished before that job's
submission, and eviction (on by default) additionally drops references whose
membership time falls before submit - alpha. A batch whose training window
is empty is skipped, its jobs counted in the report's skipped field.

Leakage rules hold by construction; --verify re-checks every window and
every KNN reference against independently recomputed true boundaries and
raises LeakageError on any violation. OnlineConfig carries a private
boundary-shift hook used by the mutation tests: it distorts only window
construction, never the verifier, so a shifted boundary must trip the check.

Timing: train_s_per_day averages wall-clock refit time (dictionary fitting,
encoding of training windows, model fitting, KNN reference extension) over
retraining events, one per non-empty batch; offline has a single such event.
infer_s_per_job averages prediction time per scored job and includes the
encoding of test jobs, so SB embedding cost lands on inference as the timing
columns expect. Cached SB vectors are encoded once, at the phase where they
first appear.

Skipped accounting: unfinished records (no ground truth) plus jobs in
skipped batches. Cancelled and node-fail records are dropped before
windowing entirely and noted in warnings, not in skipped.
"""

from __future__ import annotations

import json
import time
import warnings as _warnings
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from .encoding import Encoding, HashEmbedder, IntEncoder, SbEncoder
from .errors import ConfigError, LeakageError
from .evaluation import (
    ClassMetrics,
    ConfusionCounts,
    MeanMetrics,
    MetricsReport,
    MonthlyMetrics,
    aggregate_monthly,
    compute_metrics,
)
from .generator import GeneratorConfig, generate
from .learners import (
    ClassifierSpec,
    Distance,
    ModelKind,
    fit_model,
)
from .learners.knn import knn_vote
from .trace import Excluded, JobRecord, LabeledJob, month_key, relabel
from .errors import UnfinishedJob

_DAY = 86400

SETTING_OFFLINE = "offline"
SETTING_ONLINE = "online"

WINDOW_BY_SUBMIT = "submit"
WINDOW_BY_END = "end"


@dataclass(frozen=True)
class OfflineConfig:
    split_fraction: float = 0.7
    verify: bool = False

    def __post_init__(self):
        if not (0.0 < self.split_fraction < 1.0):
            raise ConfigError(f"split_fraction must be in (0, 1), got {self.split_fraction}")


@dataclass(frozen=True)
class OnlineConfig:
    alpha_days: int = 30
    omega_days: int = 1
    knn_evict: bool = True
    window_membership: str = WINDOW_BY_SUBMIT
    verify: bool = False
    # test hook: shifts constructed window boundaries by whole days while the
    # verifier keeps using the true boundaries; None shifts every batch
    _boundary_shift_days: int = 0
    _shift_batch_index: Optional[int] = None
    # test hook: when set, receives (job_id, predicted_label) per scored job
    _prediction_sink: Optional[list] = None

    def __post_init__(self):
        if self.alpha_days < 1:
            raise ConfigError("alpha_days must be >= 1")
        if self.omega_days < 1:
            raise ConfigError("omega_days must be >= 1")
        if self.window_membership not in (WINDOW_BY_SUBMIT, WINDOW_BY_END):
            raise ConfigError(f"window_membership must be submit or end, got {self.window_membership!r}")
        if self.alpha_days < self.omega_days:
            _warnings.warn(
                f"alpha_days={self.alpha_days} < omega_days={self.omega_days}: training windows are shorter than test batches",
                stacklevel=3,
            )


@dataclass(frozen=True)
class TimingStats:
    train_s_per_day: float
    infer_s_per_job: float

    def to_dict(self) -> dict:
        return {"train_s_per_day": self.train_s_per_day, "infer_s_per_job": self.infer_s_per_job}


@dataclass
class EvalReport:
    model: str
    encoding: str
    setting: str
    config: dict
    monthly: list[MonthlyMetrics]
    monthly_mean: MeanMetrics
    pooled: MetricsReport
    timing: TimingStats
    skipped: int
    warnings: list[str]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "encoding": self.encoding,
            "setting": self.setting,
            "config": self.config,
            "monthly": [m.to_dict() for m in self.monthly],
            "monthly_mean": self.monthly_mean.to_dict(),
            "pooled": {
                "counts": self.pooled.counts.to_dict(),
                "completed": self.pooled.completed.to_dict(),
                "failed": self.pooled.failed.to_dict(),
                "macro": self.pooled.macro.to_dict(),
            },
            "timing": self.timing.to_dict(),
            "skipped": self.skipped,
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def display_name(model: str, encoding: str, distance: str = "minkowski") -> str:
    """Row label in the comparison tables: INT+DT, SB+MWD, Majority, ..."""
    if model == "majority":
        return "Majority"
    if model == "random":
        return "Random"
    abbrev = {"dt": "DT", "rf": "RF", "lr": "LR"}.get(model)
    if model == "knn":
        abbrev = "CD" if distance == "cosine" else "MWD"
    return f"{encoding.upper()}+{abbrev}"


# ---------------------------------------------------------------------------
# stream preparation


@dataclass
class _Stream:
    jobs: list[LabeledJob]
    submit: np.ndarray   # int64 epoch seconds
    end: np.ndarray      # int64 epoch seconds
    y: np.ndarray        # int64 labels
    months: list[str]
    n_unfinished: int
    n_excluded: int


def _epoch(ts: datetime) -> int:
    return int(ts.astimezone(timezone.utc).timestamp())


def _prepare_stream(records: Sequence[Union[JobRecord, LabeledJob]]) -> _Stream:
    labeled: list[LabeledJob] = []
    n_unfinished = 0
    n_excluded = 0
    for item in records:
        if isinstance(item, LabeledJob):
            labeled.append(item)
            continue
        try:
            result = relabel(item)
        except UnfinishedJob:
            n_unfinished += 1
            continue
        if isinstance(result, Excluded):
            n_excluded += 1
        else:
            labeled.append(result)
    labeled.sort(key=lambda lj: (_epoch(lj.record.submit_time), lj.record.job_id))
    submit = np.array([_epoch(lj.record.submit_time) for lj in labeled], dtype=np.int64)
    end = np.array([_epoch(lj.record.end_time) for lj in labeled], dtype=np.int64)
    y = np.array([int(lj.outcome.value == "FAILED") for lj in labeled], dtype=np.int64)
    months = [month_key(lj.record.submit_time) for lj in labeled]
    return _Stream(labeled, submit, end, y, months, n_unfinished, n_excluded)


def _base_warnings(stream: _Stream) -> list[str]:
    out = []
    if stream.n_excluded:
        out.append(f"dropped {stream.n_excluded} cancelled/node-fail records before windowing")
    if stream.n_unfinished:
        out.append(f"{stream.n_unfinished} unfinished records have no ground truth; counted as skipped")
    return out


def _config_dict(
    spec: ClassifierSpec,
    encoding: Encoding,
    *,
    alpha: Optional[int],
    omega: Optional[int],
    split: Optional[float],
    knn_evict: Optional[bool],
    window_membership: Optional[str],
    encoder_name: str,
) -> dict:
    return {
        "alpha": alpha,
        "omega": omega,
        "split": split,
        "seed": spec.seed,
        "k": spec.k,
        "p": spec.p,
        "distance": spec.distance.value,
        "knn_evict": knn_evict,
        "window_membership": window_membership,
        "encoder": encoder_name,
        "backend": kernels.BACKEND,
    }


_BASELINES = (ModelKind.MAJORITY, ModelKind.RANDOM)


class _Encoders:
    """Per-run encoding state: INT dictionaries refit per window, SB vectors
    cached by job id since they never change."""

    def __init__(self, spec: ClassifierSpec, encoding: Encoding, embedder):
        self.spec = spec
        self.encoding = encoding
        self.baseline = spec.kind in _BASELINES
        self.sb: Optional[SbEncoder] = None
        self._cache: dict[int, np.ndarray] = {}
        if not self.baseline and encoding is Encoding.SB:
            self.sb = SbEncoder(embedder if embedder is not None else HashEmbedder())

    @property
    def name(self) -> str:
        if self.baseline:
            return "none"
        if self.encoding is Encoding.INT:
            return "int-dict"
        return self.sb.embedder.name

    @property
    def dim(self) -> int:
        if self.baseline:
            return 1
        return self.encoding.dim

    def fit_int(self, jobs: Sequence[LabeledJob]) -> Optional[IntEncoder]:
        if self.baseline or self.encoding is not Encoding.INT:
            return None
        return IntEncoder().fit([lj.record for lj in jobs])

    def matrix(self, jobs: Sequence[LabeledJob], int_encoder: Optional[IntEncoder]) -> np.ndarray:
        if self.baseline:
            return np.zeros((len(jobs), 1), dtype=np.float64)
        if self.encoding is Encoding.INT:
            return int_encoder.transform_matrix([lj.record for lj in jobs])
        rows = []
        for lj in jobs:
            vec = self._cache.get(lj.record.job_id)
            if vec is None:
                vec = self.sb.transform(lj.record)
                self._cache[lj.record.job_id] = vec
            rows.append(vec)
        if not rows:
            return np.empty((0, self.dim), dtype=np.float64)
        return np.stack(rows)


# ---------------------------------------------------------------------------
# offline


def run_offline(
    records: Sequence[Union[JobRecord, LabeledJob]],
    spec: ClassifierSpec,
    encoding: Encoding = Encoding.INT,
    config: Optional[OfflineConfig] = None,
    embedder=None,
) -> EvalReport:
    """Single chronological split: train on the first fraction, test the rest."""
    config = config if config is not None else OfflineConfig()
    stream = _prepare_stream(records)
    n = len(stream.jobs)
    if n < 2:
        raise ConfigError(f"offline evaluation needs at least 2 labeled jobs, got {n}")
    n_train = int(np.floor(config.split_fraction * n))
    if n_train == 0 or n_train == n:
        raise ConfigError(f"split {config.split_fraction} leaves an empty side for {n} jobs")

    train = stream.jobs[:n_train]
    test = stream.jobs[n_train:]
    if config.verify and stream.submit[:n_train].max() > stream.submit[n_train:].min():
        raise LeakageError("offline split is not chronological")

    enc = _Encoders(spec, encoding, embedder)
    t0 = time.perf_counter()
    int_encoder = enc.fit_int(train)
    x_train = enc.matrix(train, int_encoder)
    model = fit_model(spec, x_train, stream.y[:n_train])
    train_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    x_test = enc.matrix(test, int_encoder)
    preds = model.predict_matrix(x_test)
    infer_seconds = time.perf_counter() - t0

    y_test = stream.y[n_train:]
    months_test = np.array(stream.months[n_train:])
    per_month: dict[str, ConfusionCounts] = {}
    for m in sorted(set(stream.months[n_train:])):
        sel = months_test == m
        per_month[m] = ConfusionCounts().accumulate(y_test[sel], preds[sel])
    monthly, mean, pooled, agg_warnings = aggregate_monthly(sorted(per_month.items()))

    return EvalReport(
        model=spec.kind.value,
        encoding=encoding.value,
        setting=SETTING_OFFLINE,
        config=_config_dict(
            spec,
            encoding,
            alpha=None,
            omega=None,
            split=config.split_fraction,
            knn_evict=None,
            window_membership=None,
            encoder_name=enc.name,
        ),
        monthly=monthly,
        monthly_mean=mean,
        pooled=pooled,
        # offline has exactly one training event
        timing=TimingStats(train_s_per_day=train_seconds, infer_s_per_job=infer_seconds / len(test)),
        skipped=stream.n_unfinished,
        warnings=_base_warnings(stream) + agg_warnings,
    )


# ---------------------------------------------------------------------------
# online


def _check_supervised_window(
    stream: _Stream, win_idx: np.ndarray, tb_true: int, alpha_s: int, membership: str
) -> None:
    """Independent no-leakage re-check against the true boundary."""
    sub = stream.submit[win_idx]
    end = stream.end[win_idx]
    if np.any(end >= tb_true):
        bad = win_idx[np.argmax(end >= tb_true)]
        raise LeakageError(
            f"job {stream.jobs[bad].record.job_id} in training window ends at {int(stream.end[bad])}, "
            f"on or after boundary {tb_true}"
        )
    member = sub if membership == WINDOW_BY_SUBMIT else end
    if np.any(member < tb_true - alpha_s) or np.any(member >= tb_true):
        bad = win_idx[int(np.argmax((member < tb_true - alpha_s) | (member >= tb_true)))]
        raise LeakageError(
            f"job {stream.jobs[bad].record.job_id} outside training window [{tb_true - alpha_s}, {tb_true})"
        )


def _check_knn_references(
    stream: _Stream,
    ref_idx: np.ndarray,
    query_submit_true: int,
    alpha_s: int,
    evict: bool,
    membership: str,
) -> None:
    end = stream.end[ref_idx]
    if np.any(end >= query_submit_true):
        bad = ref_idx[int(np.argmax(end >= query_submit_true))]
        raise LeakageError(
            f"reference job {stream.jobs[bad].record.job_id} ends at {int(stream.end[bad])}, "
            f"not before query submission {query_submit_true}"
        )
    if evict:
        member = stream.submit[ref_idx] if membership == WINDOW_BY_SUBMIT else end
        if np.any(member < query_submit_true - alpha_s):
            bad = ref_idx[int(np.argmax(member < query_submit_true - alpha_s))]
            raise LeakageError(
                f"reference job {stream.jobs[bad].record.job_id} should have been evicted "
                f"before query at {query_submit_true}"
            )


def _batch_groups(stream: _Stream, t0: int, omega_s: int) -> list[tuple[int, np.ndarray]]:
    test_idx = np.nonzero(stream.submit >= t0)[0]
    if test_idx.shape[0] == 0:
        raise ConfigError("no jobs submitted after the first test boundary")
    batch_ids = (stream.submit[test_idx] - t0) // omega_s
    groups = []
    for b in np.unique(batch_ids):
        groups.append((int(b), test_idx[batch_ids == b]))
    return groups


def run_online(
    records: Sequence[Union[JobRecord, LabeledJob]],
    spec: ClassifierSpec,
    encoding: Encoding = Encoding.INT,
    config: Optional[OnlineConfig] = None,
    embedder=None,
) -> EvalReport:
    """Streaming evaluation with sliding-window retraining per test batch."""
    config = config if config is not None else OnlineConfig()
    stream = _prepare_stream(records)
    if len(stream.jobs) < 2:
        raise ConfigError(f"online evaluation needs at least 2 labeled jobs, got {len(stream.jobs)}")
    alpha_s = config.alpha_days * _DAY
    omega_s = config.omega_days * _DAY
    if int(stream.submit[-1] - stream.submit[0]) <= alpha_s:
        raise ConfigError(
            f"trace spans {int(stream.submit[-1] - stream.submit[0])} s, need more than alpha = {alpha_s} s"
        )
    t0 = int(stream.submit[0]) + alpha_s
    groups = _batch_groups(stream, t0, omega_s)

    enc = _Encoders(spec, encoding, embedder)
    run_warnings = _base_warnings(stream)
    skipped = stream.n_unfinished

    if spec.kind is ModelKind.KNN:
        result = _online_knn(stream, spec, enc, config, groups, t0, alpha_s, omega_s)
    else:
        result = _online_supervised(stream, spec, enc, config, groups, t0, alpha_s, omega_s)
    per_day, train_seconds, infer_seconds, n_scored, n_batches, extra_warnings, extra_skipped = result
    run_warnings.extend(extra_warnings)
    skipped += extra_skipped

    monthly, mean, pooled, agg_warnings = aggregate_monthly(per_day)
    run_warnings.extend(agg_warnings)
    timing = TimingStats(
        train_s_per_day=train_seconds / n_batches if n_batches else 0.0,
        infer_s_per_job=infer_seconds / n_scored if n_scored else 0.0,
    )
    return EvalReport(
        model=spec.kind.value,
        encoding=encoding.value,
        setting=SETTING_ONLINE,
        config=_config_dict(
            spec,
            encoding,
            alpha=config.alpha_days,
            omega=config.omega_days,
            split=None,
            knn_evict=config.knn_evict,
            window_membership=config.window_membership,
            encoder_name=enc.name,
        ),
        monthly=monthly,
        monthly_mean=mean,
        pooled=pooled,
        timing=timing,
        skipped=skipped,
        warnings=run_warnings,
    )


def _shift_seconds(config: OnlineConfig, batch: int) -> int:
    if config._boundary_shift_days == 0:
        return 0
    if config._shift_batch_index is not None and batch != config._shift_batch_index:
        return 0
    return config._boundary_shift_days * _DAY


def _iso_day(epoch: int) -> str:
    return datetime.fromtimestamp(epoch, tz=timezone.utc).strftime("%Y-%m-%d")


def _online_supervised(stream, spec, enc, config, groups, t0, alpha_s, omega_s):
    per_day: dict[str, ConfusionCounts] = {}
    train_seconds = 0.0
    infer_seconds = 0.0
    n_scored = 0
    n_batches = 0
    warnings_out: list[str] = []
    skipped = 0
    persistent_model = None  # random baseline keeps one counted stream

    for b, q_idx in groups:
        tb_true = t0 + b * omega_s
        tb_eff = tb_true + _shift_seconds(config, b)
        if config.window_membership == WINDOW_BY_SUBMIT:
            win = (stream.submit >= tb_eff - alpha_s) & (stream.submit < tb_eff) & (stream.end < tb_eff)
        else:
            win = (stream.end >= tb_eff - alpha_s) & (stream.end < tb_eff)
        win_idx = np.nonzero(win)[0]
        if win_idx.shape[0] == 0:
            skipped += int(q_idx.shape[0])
            warnings_out.append(f"batch {_iso_day(tb_true)} skipped: empty training window")
            continue
        if config.verify:
            _check_supervised_window(stream, win_idx, tb_true, alpha_s, config.window_membership)

        window_jobs = [stream.jobs[i] for i in win_idx]
        t_start = time.perf_counter()
        int_encoder = enc.fit_int(window_jobs)
        x_win = enc.matrix(window_jobs, int_encoder)
        if spec.kind is ModelKind.RANDOM and persistent_model is not None:
            model = persistent_model
        else:
            model = fit_model(spec, x_win, stream.y[win_idx])
            if spec.kind is ModelKind.RANDOM:
                persistent_model = model
        train_seconds += time.perf_counter() - t_start
        n_batches += 1

        batch_jobs = [stream.jobs[i] for i in q_idx]
        t_start = time.perf_counter()
        x_batch = enc.matrix(batch_jobs, int_encoder)
        preds = model.predict_matrix(x_batch)
        infer_seconds += time.perf_counter() - t_start
        n_scored += int(q_idx.shape[0])
        if config._prediction_sink is not None:
            for gi, p in zip(q_idx, preds):
                config._prediction_sink.append((stream.jobs[gi].record.job_id, int(p)))

        y_batch = stream.y[q_idx]
        day_nums = stream.submit[q_idx] // _DAY
        for d in np.unique(day_nums):
            sel = day_nums == d
            day = _iso_day(int(d) * _DAY)
            per_day[day] = per_day.get(day, ConfusionCounts()).accumulate(y_batch[sel], preds[sel])

    per_month: dict[str, ConfusionCounts] = {}
    for day, counts in per_day.items():
        month = day[:7]
        per_month[month] = per_month.get(month, ConfusionCounts()).merge(counts)
    return sorted(per_month.items()), train_seconds, infer_seconds, n_scored, n_batches, warnings_out, skipped


class _GrowingRefs:
    """Amortized-growth reference store matching KnnModel semantics.

    Rows join in (end_time, job_id) order, the insertion order the stable
    distance tie-break is defined over. Kept outside KnnModel so per-query
    extension stays O(1) amortized instead of copying the whole set.
    """

    def __init__(self, dim: int):
        self.dim = dim
        self.capacity = 256
        self.refs = np.empty((self.capacity, dim), dtype=np.float64)
        self.labels = np.empty(self.capacity, dtype=np.int64)
        self.submit = np.empty(self.capacity, dtype=np.int64)
        self.end = np.empty(self.capacity, dtype=np.int64)
        self.idx = np.empty(self.capacity, dtype=np.int64)
        self.n = 0

    def append(self, vec: np.ndarray, label: int, submit: int, end: int, global_idx: int) -> None:
        if self.n == self.capacity:
            self.capacity *= 2
            for name in ("refs", "labels", "submit", "end", "idx"):
                old = getattr(self, name)
                grown = np.empty((self.capacity,) + old.shape[1:], dtype=old.dtype)
                grown[: self.n] = old[: self.n]
                setattr(self, name, grown)
        self.refs[self.n] = vec
        self.labels[self.n] = label
        self.submit[self.n] = submit
        self.end[self.n] = end
        self.idx[self.n] = global_idx
        self.n += 1


def _online_knn(stream, spec, enc, config, groups, t0, alpha_s, omega_s):
    """KNN streaming path: per-query reference extension with optional eviction.

    SB vectors never change, so references accumulate incrementally. INT
    dictionaries refit per batch on the supervised-style window, so all
    reference vectors are re-encoded per batch; query-level masks then apply
    the same temporal rules either way.
    """
    per_day: dict[str, ConfusionCounts] = {}
    train_seconds = 0.0
    infer_seconds = 0.0
    n_scored = 0
    n_batches = 0
    warnings_out: list[str] = []
    skipped = 0

    # candidate references in join order: sorted by (end, job_id)
    order = sorted(range(len(stream.jobs)), key=lambda i: (int(stream.end[i]), stream.jobs[i].record.job_id))
    pool_end = np.array([int(stream.end[i]) for i in order], dtype=np.int64)

    store = _GrowingRefs(enc.dim) if enc.encoding is Encoding.SB else None
    pointer = 0  # next pool position not yet appended (SB path)

    for b, q_idx in groups:
        tb_true = t0 + b * omega_s
        shift = _shift_seconds(config, b)
        tb_eff = tb_true + shift

        if enc.encoding is Encoding.INT:
            if config.window_membership == WINDOW_BY_SUBMIT:
                win = (stream.submit >= tb_eff - alpha_s) & (stream.submit < tb_eff) & (stream.end < tb_eff)
            else:
                win = (stream.end >= tb_eff - alpha_s) & (stream.end < tb_eff)
            win_idx = np.nonzero(win)[0]
            if win_idx.shape[0] == 0:
                skipped += int(q_idx.shape[0])
                warnings_out.append(f"batch {_iso_day(tb_true)} skipped: empty training window")
                continue
            if config.verify:
                _check_supervised_window(stream, win_idx, tb_true, alpha_s, config.window_membership)
            # rebuild the reference matrix under this batch's dictionaries
            max_q_submit = int(stream.submit[q_idx].max()) + shift
            t_start = time.perf_counter()
            int_encoder = enc.fit_int([stream.jobs[i] for i in win_idx])
            n_pool = int(np.searchsorted(pool_end, max_q_submit, side="left"))
            ref_global = np.array(order[:n_pool], dtype=np.int64)
            refs = enc.matrix([stream.jobs[i] for i in ref_global], int_encoder)
            ref_submit = stream.submit[ref_global]
            ref_end = stream.end[ref_global]
            ref_labels = stream.y[ref_global]
            train_seconds += time.perf_counter() - t_start
            n_batches += 1
        else:
            # SB path: extend the running store with everything finished
            # before this batch; mid-batch finishers join per query below
            t_start = time.perf_counter()
            while pointer < len(order) and pool_end[pointer] < tb_eff:
                gi = order[pointer]
                vec = enc.matrix([stream.jobs[gi]], None)[0]
                store.append(vec, int(stream.y[gi]), int(stream.submit[gi]), int(stream.end[gi]), gi)
                pointer += 1
            train_seconds += time.perf_counter() - t_start
            n_batches += 1

        scored_idx: list[int] = []
        scored_pred: list[int] = []
        for gi in q_idx:
            q_submit_true = int(stream.submit[gi])
            q_time = q_submit_true + shift

            if enc.encoding is Encoding.SB:
                t_start = time.perf_counter()
                while pointer < len(order) and pool_end[pointer] < q_time:
                    gj = order[pointer]
                    vec = enc.matrix([stream.jobs[gj]], None)[0]
                    store.append(vec, int(stream.y[gj]), int(stream.submit[gj]), int(stream.end[gj]), gj)
                    pointer += 1
                train_seconds += time.perf_counter() - t_start
                n_rows = store.n
                refs = store.refs[:n_rows]
                ref_submit = store.submit[:n_rows]
                ref_end = store.end[:n_rows]
                ref_labels = store.labels[:n_rows]
                ref_global = store.idx[:n_rows]

            t_start = time.perf_counter()
            active = ref_end < q_time
            if config.knn_evict:
                member = ref_submit if config.window_membership == WINDOW_BY_SUBMIT else ref_end
                active &= member >= q_time - alpha_s
            n_active = int(np.sum(active))
            if n_active == 0:
                skipped += 1
                infer_seconds += time.perf_counter() - t_start
                continue
            if config.verify:
                _check_knn_references(
                    stream,
                    np.asarray(ref_global)[active],
                    q_submit_true,
                    alpha_s,
                    config.knn_evict,
                    config.window_membership,
                )
            q_vec = enc.matrix([stream.jobs[gi]], int_encoder if enc.encoding is Encoding.INT else None)[0]
            # gather the active rows so the arithmetic below is exactly what
            # KnnModel.fit + predict_one would do on this reference subset;
            # computing over the full pool and masking afterwards can move
            # distances by an ulp and flip ties at the kth neighbour
            sub = refs[active]
            sub_labels = ref_labels[active]
            if spec.distance is Distance.COSINE:
                sub_norms = np.asarray(kernels.row_norms(sub))
                dist = np.asarray(kernels.cosine_distances(sub, sub_norms, q_vec))
            else:
                dist = np.asarray(kernels.minkowski_distances(sub, q_vec, spec.p))
            kk = min(spec.k, n_active)
            top = np.argsort(dist, kind="stable")[:kk]
            pred = knn_vote(
                int(np.sum(sub_labels[top])),
                kk,
                int(np.sum(sub_labels)),
                n_active,
            )
            infer_seconds += time.perf_counter() - t_start
            scored_idx.append(int(gi))
            scored_pred.append(pred)
            if config._prediction_sink is not None:
                config._prediction_sink.append((stream.jobs[gi].record.job_id, pred))
        if scored_idx:
            sell = np.array(scored_idx, dtype=np.int64)
            y_batch = stream.y[sell]
            preds = np.array(scored_pred, dtype=np.int64)
            day_nums = stream.submit[sell] // _DAY
            for d in np.unique(day_nums):
                sel = day_nums == d
                day = _iso_day(int(d) * _DAY)
                per_day[day] = per_day.get(day, ConfusionCounts()).accumulate(y_batch[sel], preds[sel])
        n_scored += len(scored_idx)

    per_month: dict[str, ConfusionCounts] = {}
    for day, counts in per_day.items():
        month = day[:7]
        per_month[month] = per_month.get(month, ConfusionCounts()).merge(counts)
    return sorted(per_month.items()), train_seconds, infer_seconds, n_scored, n_batches, warnings_out, skipped


# ---------------------------------------------------------------------------
# drift experiment


@dataclass(frozen=True)
class DriftEntry:
    label: str
    model: str
    encoding: str
    offline_failed_f1: float
    online_failed_f1: float

    @property
    def delta(self) -> float:
        return self.online_failed_f1 - self.offline_failed_f1

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "model": self.model,
            "encoding": self.encoding,
            "offline_failed_f1": self.offline_failed_f1,
            "online_failed_f1": self.online_failed_f1,
            "delta": self.delta,
        }


@dataclass
class DriftComparison:
    entries: list[DriftEntry]
    offline_reports: dict[str, EvalReport] = field(default_factory=dict)
    online_reports: dict[str, EvalReport] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries]}


def inject_drift_experiment(
    gen_config: GeneratorConfig,
    pairs: Sequence[tuple[ClassifierSpec, Encoding]],
    offline_config: Optional[OfflineConfig] = None,
    online_config: Optional[OnlineConfig] = None,
    embedder=None,
) -> DriftComparison:
    """Offline-vs-online comparison on one generated trace.

    The offline side contributes its pooled failed-class F1 (one split, one
    number); the online side contributes the monthly-mean failed-class F1,
    the headline aggregation. Requires a drift point so the comparison says
    something about adaptation.
    """
    if not gen_config.drift_schedule:
        raise ConfigError("drift experiment requires at least one drift point in the schedule")
    records = generate(gen_config)
    comparison = DriftComparison(entries=[])
    for spec, encoding in pairs:
        off = run_offline(records, spec, encoding, offline_config, embedder=embedder)
        on = run_online(records, spec, encoding, online_config, embedder=embedder)
        label = display_name(spec.kind.value, encoding.value, spec.distance.value)
        comparison.entries.append(
            DriftEntry(
                label=label,
                model=spec.kind.value,
                encoding=encoding.value,
                offline_failed_f1=off.pooled.failed.f1,
                online_failed_f1=on.monthly_mean.failed.f1,
            )
        )
        comparison.offline_reports[label] = off
        comparison.online_reports[label] = on
    return comparison
