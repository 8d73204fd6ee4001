"""Command-line entry point: generate, prepare, audit, run, report.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 external
service unavailable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .encoding import Encoding, ExternalEmbedder
from .errors import (
    ConfigError,
    EmbedderUnavailable,
    EmptyEvaluation,
    EmptyTraining,
    EmptyTrace,
    HfoError,
    LeakageError,
    ParseError,
    TraceIOError,
    UnfinishedJob,
    ValidationError,
)
from .generator import GeneratorConfig, generate_with_stats
from .harness import (
    OfflineConfig,
    OnlineConfig,
    SETTING_OFFLINE,
    display_name,
    run_offline,
    run_online,
)
from .learners import ClassifierSpec, Distance, ModelKind
from .trace import Excluded, audit_labels, monthly_distribution, relabel
from .trace_io import TraceFile, read_trace, write_trace

ENCODER_URL_ENV = "HFO_ENCODER_URL"

_DATA_ERRORS = (ParseError, ValidationError, TraceIOError, EmptyTrace, UnfinishedJob, EmptyTraining, EmptyEvaluation)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hfo", description="HPC job-failure prediction workbench")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="generate a synthetic job trace")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.add_argument("--months", type=int, default=6)
    g.add_argument("--users", type=int, default=25)
    g.add_argument("--jobs-per-day", type=float, default=60.0)
    g.add_argument("--batch-size", type=float, default=4.0)
    g.add_argument("--fail-rate", type=float, default=0.11)
    g.add_argument("--jitter", type=float, default=0.0)
    g.add_argument("--drift", action="append", default=[], metavar="MONTH:RULE",
                   help="switch to failure rule RULE at month index MONTH (repeatable)")
    g.add_argument("--discrepancy-rate", type=float, default=0.0)
    g.add_argument("--cancelled-rate", type=float, default=0.0)
    g.add_argument("--node-fail-rate", type=float, default=0.0)
    g.add_argument("--exact-rates", choices=["on", "off"], default="on")
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("prepare", help="relabel a trace and drop excluded records")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_prepare)

    a = sub.add_parser("audit", help="report exit-code / state discrepancies")
    a.add_argument("--in", dest="infile", required=True)
    a.add_argument("--monthly-csv", help="also write per-month completed/failed counts as CSV")
    a.set_defaults(func=cmd_audit)

    r = sub.add_parser("run", help="train and evaluate one predictor")
    r.add_argument("--in", dest="infile", required=True)
    r.add_argument("--out", help="write the EvalReport JSON here")
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--model", choices=[m.value for m in ModelKind], default="rf")
    r.add_argument("--encoding", choices=[e.value for e in Encoding], default="int")
    r.add_argument("--encoder", choices=["hash", "external"], default="hash")
    r.add_argument("--encoder-url", help=f"embedding service URL (or set {ENCODER_URL_ENV})")
    r.add_argument("--distance", choices=[d.value for d in Distance], default="minkowski")
    r.add_argument("--p", type=float, default=2.0)
    r.add_argument("--k", type=int, default=5)
    r.add_argument("--setting", choices=["offline", "online"], default="online")
    r.add_argument("--alpha", type=int, default=30)
    r.add_argument("--omega", type=int, default=1)
    r.add_argument("--split", type=float, default=0.7)
    r.add_argument("--knn-evict", choices=["on", "off"], default="on")
    r.add_argument("--window-membership", choices=["submit", "end"], default="submit")
    r.add_argument("--verify", action="store_true", help="re-check no-leakage invariants at runtime")
    r.add_argument("--jobs", type=int, help="cap worker threads used by compiled kernels")
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("report", help="merge EvalReport JSON files into one table")
    m.add_argument("files", nargs="+")
    m.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except EmbedderUnavailable as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except LeakageError as exc:
        print(f"leakage: {exc}", file=sys.stderr)
        return 3
    except HfoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _parse_drift(items: list[str]) -> tuple[tuple[int, int], ...]:
    out = []
    for item in items:
        try:
            month_s, rule_s = item.split(":", 1)
            out.append((int(month_s), int(rule_s)))
        except ValueError:
            raise ConfigError(f"--drift expects MONTH:RULE, got {item!r}")
    return tuple(out)


def cmd_generate(args) -> int:
    config = GeneratorConfig(
        seed=args.seed,
        n_users=args.users,
        months=args.months,
        jobs_per_day_mean=args.jobs_per_day,
        batch_size_mean=args.batch_size,
        overall_fail_rate=args.fail_rate,
        monthly_fail_rate_jitter=args.jitter,
        drift_schedule=_parse_drift(args.drift),
        discrepancy_rate=args.discrepancy_rate,
        cancelled_rate=args.cancelled_rate,
        node_fail_rate=args.node_fail_rate,
        exact_rates=args.exact_rates == "on",
    )
    records, stats = generate_with_stats(config)
    write_trace(records, TraceFile(Path(args.out)))
    meta = {
        "config": {
            "seed": config.seed,
            "n_users": config.n_users,
            "months": config.months,
            "jobs_per_day_mean": config.jobs_per_day_mean,
            "batch_size_mean": config.batch_size_mean,
            "overall_fail_rate": config.overall_fail_rate,
            "monthly_fail_rate_jitter": config.monthly_fail_rate_jitter,
            "drift_schedule": list(config.drift_schedule),
            "discrepancy_rate": config.discrepancy_rate,
            "cancelled_rate": config.cancelled_rate,
            "node_fail_rate": config.node_fail_rate,
            "exact_rates": config.exact_rates,
            "start": config.start.isoformat(),
        },
        "stats": stats.to_dict(),
    }
    Path(args.out + ".meta.json").write_text(json.dumps(meta, indent=2), encoding="utf-8")
    print(
        f"wrote {stats.n_jobs} jobs to {args.out} "
        f"(kept {stats.n_kept}, fail rate {stats.realized_fail_rate:.4f}, "
        f"cancelled {stats.n_cancelled}, node-fail {stats.n_node_fail})"
    )
    return 0


def cmd_prepare(args) -> int:
    records = read_trace(TraceFile(Path(args.infile)))
    kept = []
    n_cancelled = 0
    n_node_fail = 0
    n_unfinished = 0
    for record in records:
        if not record.finished or record.exit_code is None:
            n_unfinished += 1
            continue
        result = relabel(record)
        if isinstance(result, Excluded):
            if result.record.original_state is not None and result.record.original_state.value == "CANCELLED":
                n_cancelled += 1
            else:
                n_node_fail += 1
        else:
            kept.append(result.record)
    write_trace(kept, TraceFile(Path(args.out)))
    print(f"kept {len(kept)} labelable jobs -> {args.out}")
    print(f"excluded: {n_cancelled} cancelled, {n_node_fail} node-fail; dropped {n_unfinished} unfinished")
    return 0


def cmd_audit(args) -> int:
    records = read_trace(TraceFile(Path(args.infile)))
    finished = [r for r in records if r.finished and r.exit_code is not None]
    n_unfinished = len(records) - len(finished)
    report = audit_labels(finished)
    print(f"jobs audited: {report.total}" + (f" ({n_unfinished} unfinished rows ignored)" if n_unfinished else ""))
    print(f"exit code 0 but state not COMPLETED: {report.zero_ec_not_completed}")
    for state, count in sorted(report.zero_ec_breakdown.items(), key=lambda kv: kv[0].value):
        print(f"    {state.value}: {count}")
    print(f"exit code nonzero but state COMPLETED: {report.nonzero_ec_completed}")
    print("state distribution:")
    for state, pct in sorted(report.state_percentages().items(), key=lambda kv: -kv[1]):
        print(f"    {state.value}: {report.state_distribution[state]} ({pct:.2f}%)")
    if args.monthly_csv:
        labeled = []
        for r in finished:
            result = relabel(r)
            if not isinstance(result, Excluded):
                labeled.append(result)
        lines = ["month,completed,failed"]
        for month, n_completed, n_failed in monthly_distribution(labeled):
            lines.append(f"{month},{n_completed},{n_failed}")
        Path(args.monthly_csv).write_text("\n".join(lines) + "\n", encoding="utf-8")
        print(f"monthly distribution -> {args.monthly_csv}")
    return 0


def _resolve_embedder(args):
    if args.encoder == "hash":
        return None
    url = args.encoder_url or os.environ.get(ENCODER_URL_ENV)
    if not url:
        raise ConfigError(f"--encoder external requires --encoder-url or {ENCODER_URL_ENV}")
    embedder = ExternalEmbedder(url)
    embedder.validate()
    return embedder


def cmd_run(args) -> int:
    if args.jobs is not None:
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
        try:
            import numba

            numba.set_num_threads(args.jobs)
        except ImportError:
            pass
    spec = ClassifierSpec(
        kind=ModelKind(args.model),
        k=args.k,
        distance=Distance(args.distance),
        p=args.p,
        seed=args.seed,
    )
    encoding = Encoding(args.encoding)
    embedder = _resolve_embedder(args) if encoding is Encoding.SB else None
    records = read_trace(TraceFile(Path(args.infile)))
    if args.setting == "offline":
        report = run_offline(
            records, spec, encoding, OfflineConfig(split_fraction=args.split, verify=args.verify), embedder
        )
    else:
        report = run_online(
            records,
            spec,
            encoding,
            OnlineConfig(
                alpha_days=args.alpha,
                omega_days=args.omega,
                knn_evict=args.knn_evict == "on",
                window_membership=args.window_membership,
                verify=args.verify,
            ),
            embedder,
        )
    if args.out:
        Path(args.out).write_text(report.to_json() + "\n", encoding="utf-8")
    for warning in report.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(format_table([report.to_dict()]))
    return 0


def cmd_report(args) -> int:
    reports = []
    for path in args.files:
        try:
            reports.append(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            raise TraceIOError(f"cannot read report {path}: {exc}")
    print(format_table(reports))
    return 0


_COLUMNS = ("T F1m", "T Precm", "T Recm", "C F1", "C Prec", "C Rec", "F F1", "F Prec", "F Rec")


def _headline(report: dict) -> dict:
    return report["pooled"] if report["setting"] == SETTING_OFFLINE else report["monthly_mean"]


def _row_values(report: dict) -> list[float]:
    h = _headline(report)
    return [
        h["macro"]["f1"], h["macro"]["p"], h["macro"]["r"],
        h["completed"]["f1"], h["completed"]["p"], h["completed"]["r"],
        h["failed"]["f1"], h["failed"]["p"], h["failed"]["r"],
    ]


def format_table(reports: list[dict]) -> str:
    """Fixed-width comparison table, one row per report.

    The best value in each metric column (computed on the rounded, displayed
    numbers) is starred; ties star every row attaining the maximum.
    """
    names = [
        display_name(r["model"], r["encoding"], r["config"].get("distance", "minkowski"))
        for r in reports
    ]
    cells = [[f"{v:.2f}" for v in _row_values(r)] for r in reports]
    times = [
        f"{r['timing']['train_s_per_day']:.3g} + {r['timing']['infer_s_per_job']:.3g}"
        for r in reports
    ]
    for col in range(len(_COLUMNS)):
        best = max(float(row[col]) for row in cells)
        for row in cells:
            if float(row[col]) == best:
                row[col] = row[col] + "*"
    name_w = max(len("Model"), *(len(n) for n in names))
    widths = [max(len(_COLUMNS[c]), *(len(row[c]) for row in cells)) for c in range(len(_COLUMNS))]
    time_w = max(len("Time (s)"), *(len(t) for t in times))
    header = (
        "Model".ljust(name_w)
        + "  "
        + "  ".join(_COLUMNS[c].rjust(widths[c]) for c in range(len(_COLUMNS)))
        + "  "
        + "Time (s)".rjust(time_w)
    )
    lines = [header, "-" * len(header)]
    for name, row, t in zip(names, cells, times):
        lines.append(
            name.ljust(name_w)
            + "  "
            + "  ".join(row[c].rjust(widths[c]) for c in range(len(_COLUMNS)))
            + "  "
            + t.rjust(time_w)
        )
    return "\n".join(lines)


if __name__ == "__main__":
    sys.exit(main())
