"""Byte-deterministic CSV/JSON serialization of trial records."""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

from .experiments import TrialRecord

COLUMNS = ("trial", "seed", "T_or_N", "value", "centering", "norm_error", "micros")


def format_exact(x) -> str:
    """Integers as decimal, rationals as num/den, None as the empty string."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return str(x)


def parse_exact(text: str):
    if text == "":
        return None
    return Fraction(text)


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return format_exact(x)
    if isinstance(x, float):
        return repr(x)
    return x


def _row(r: TrialRecord) -> list[str]:
    return [format_exact(v) for v in (r.trial, r.seed, r.T_or_N, r.value, r.centering, r.norm_error, r.micros)]


def _json_row(r: TrialRecord) -> dict:
    row = dict(zip(COLUMNS, _row(r)))
    for k in ("trial", "seed", "T_or_N", "micros"):
        row[k] = int(row[k])
    return row


def emit_report(records, fmt: str = "csv", aggregate: dict | None = None) -> bytes:
    if fmt == "csv":
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(COLUMNS)
        for r in records:
            wr.writerow(_row(r))
        return buf.getvalue().encode("utf-8")
    if fmt == "json":
        doc = {"records": [_json_row(r) for r in records]}
        if aggregate is not None:
            doc["aggregate"] = _jsonable(aggregate)
        return (json.dumps(doc, sort_keys=True, indent=1) + "\n").encode("utf-8")
    raise ValueError(f"unknown report format {fmt!r}")


def emit_aggregate(aggregate: dict) -> bytes:
    return (json.dumps(_jsonable(aggregate), sort_keys=True, indent=1) + "\n").encode("utf-8")


def _record(row: dict) -> TrialRecord:
    return TrialRecord(int(row["trial"]), int(row["seed"]), int(row["T_or_N"]),
                       parse_exact(str(row["value"])), parse_exact(str(row["centering"])),
                       parse_exact(str(row["norm_error"])), int(row["micros"] or 0))


def parse_report(data: bytes, fmt: str = "csv") -> list[TrialRecord]:
    """Inverse of ``emit_report`` for the record rows."""
    text = data.decode("utf-8")
    if fmt == "csv":
        rows = list(csv.DictReader(io.StringIO(text)))
        return [_record(r) for r in rows]
    if fmt == "json":
        return [_record(r) for r in json.loads(text)["records"]]
    raise ValueError(f"unknown report format {fmt!r}")
