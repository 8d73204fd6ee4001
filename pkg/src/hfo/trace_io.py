"""Bit-exact CSV ingestion and emission for job traces.

The on-disk format (CsvV1) is a 20-column RFC-4180 CSV with a fixed header.
Timestamps are ISO-8601 UTC with seconds ("2020-10-01T15:30:00Z"), optional
fields serialize as empty strings, and requested_nodes is a semicolon-joined
list inside a single field. Writing the same records twice yields identical
bytes.
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

from .errors import ParseError, TraceIOError, ValidationError
from .trace import JobRecord, JobState

CSV_COLUMNS = (
    "job_id",
    "name",
    "command",
    "account",
    "user_id",
    "dependency",
    "group_id",
    "requested_nodes",
    "num_tasks_per_socket",
    "partition",
    "time_limit",
    "qos",
    "num_cpu",
    "num_nodes",
    "num_gpus",
    "submit_time",
    "start_time",
    "end_time",
    "exit_code",
    "original_state",
)

_TS_FORMAT = "%Y-%m-%dT%H:%M:%SZ"


class TraceFormat(enum.Enum):
    CSV_V1 = "CsvV1"


@dataclass(frozen=True)
class TraceFile:
    path: Path
    format: TraceFormat = TraceFormat.CSV_V1


def _coerce_path(file: Union[TraceFile, str, Path]) -> Path:
    if isinstance(file, TraceFile):
        return Path(file.path)
    return Path(file)


def format_timestamp(ts: Optional[datetime]) -> str:
    if ts is None:
        return ""
    return ts.astimezone(timezone.utc).strftime(_TS_FORMAT)


def parse_timestamp(text: str) -> Optional[datetime]:
    if text == "":
        return None
    dt = datetime.strptime(text, _TS_FORMAT)
    return dt.replace(tzinfo=timezone.utc)


def _opt_int(text: str, column: str, line: int) -> Optional[int]:
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        raise ParseError(f"column {column!r}: not an integer: {text!r}", line=line)


def _req_int(text: str, column: str, line: int) -> int:
    value = _opt_int(text, column, line)
    if value is None:
        raise ParseError(f"column {column!r}: missing required integer", line=line)
    return value


def _record_to_row(rec: JobRecord) -> list[str]:
    return [
        str(rec.job_id),
        rec.name,
        rec.command,
        rec.account,
        str(rec.user_id),
        rec.dependency,
        str(rec.group_id),
        ";".join(rec.requested_nodes),
        "" if rec.num_tasks_per_socket is None else str(rec.num_tasks_per_socket),
        rec.partition,
        "" if rec.time_limit is None else str(rec.time_limit),
        rec.qos,
        str(rec.num_cpu),
        str(rec.num_nodes),
        str(rec.num_gpus),
        format_timestamp(rec.submit_time),
        format_timestamp(rec.start_time),
        format_timestamp(rec.end_time),
        "" if rec.exit_code is None else str(rec.exit_code),
        "" if rec.original_state is None else rec.original_state.value,
    ]


def _row_to_record(row: list[str], line: int) -> JobRecord:
    if len(row) != len(CSV_COLUMNS):
        raise ParseError(f"expected {len(CSV_COLUMNS)} fields, got {len(row)}", line=line)
    fields = dict(zip(CSV_COLUMNS, row))
    try:
        submit = parse_timestamp(fields["submit_time"])
        start = parse_timestamp(fields["start_time"])
        end = parse_timestamp(fields["end_time"])
    except ValueError as exc:
        raise ParseError(f"bad timestamp: {exc}", line=line)
    if submit is None:
        raise ParseError("submit_time is required", line=line)
    state_text = fields["original_state"]
    if state_text == "":
        state = None
    else:
        try:
            state = JobState(state_text)
        except ValueError:
            raise ParseError(f"unknown original_state {state_text!r}", line=line)
    nodes = tuple(n for n in fields["requested_nodes"].split(";") if n)
    try:
        return JobRecord(
            job_id=_req_int(fields["job_id"], "job_id", line),
            name=fields["name"],
            command=fields["command"],
            account=fields["account"],
            user_id=_req_int(fields["user_id"], "user_id", line),
            dependency=fields["dependency"],
            group_id=_req_int(fields["group_id"], "group_id", line),
            requested_nodes=nodes,
            num_tasks_per_socket=_opt_int(fields["num_tasks_per_socket"], "num_tasks_per_socket", line),
            partition=fields["partition"],
            time_limit=_opt_int(fields["time_limit"], "time_limit", line),
            qos=fields["qos"],
            num_cpu=_req_int(fields["num_cpu"], "num_cpu", line),
            num_nodes=_req_int(fields["num_nodes"], "num_nodes", line),
            num_gpus=_req_int(fields["num_gpus"], "num_gpus", line),
            submit_time=submit,
            start_time=start,
            end_time=end,
            exit_code=_opt_int(fields["exit_code"], "exit_code", line),
            original_state=state,
        )
    except ValidationError as exc:
        raise ValidationError(f"line {line}: {exc}")


def write_trace(jobs: list[JobRecord], file: Union[TraceFile, str, Path]) -> None:
    """Emit jobs as CsvV1, preserving list order. Deterministic byte output."""
    path = _coerce_path(file)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS)
            for rec in jobs:
                writer.writerow(_record_to_row(rec))
    except OSError as exc:
        raise TraceIOError(f"cannot write trace to {path}: {exc}")


def read_trace(file: Union[TraceFile, str, Path]) -> list[JobRecord]:
    """Parse a CsvV1 trace, one JobRecord per data row, in file order.

    Malformed rows raise ParseError with their 1-based line number;
    non-monotonic timestamps raise ValidationError.
    """
    path = _coerce_path(file)
    try:
        with open(path, "r", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ParseError("empty file: missing header", line=1)
            if tuple(header) != CSV_COLUMNS:
                raise ParseError(f"unexpected header {header!r}", line=1)
            records = []
            for line, row in enumerate(reader, start=2):
                if not row:
                    continue
                records.append(_row_to_record(row, line))
            return records
    except OSError as exc:
        raise TraceIOError(f"cannot read trace from {path}: {exc}")


# The synthetic generator is part of the trace I/O surface: its configs and
# records flow straight into write_trace. Re-exported here for that reason.
from .generator import (  # noqa: E402
    GeneratorConfig,
    GeneratorStats,
    generate,
    generate_with_stats,
)

__all__ = [
    "CSV_COLUMNS",
    "TraceFile",
    "TraceFormat",
    "format_timestamp",
    "parse_timestamp",
    "read_trace",
    "write_trace",
    "GeneratorConfig",
    "GeneratorStats",
    "generate",
    "generate_with_stats",
]
