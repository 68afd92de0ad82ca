"""File formats: series and treatment CSVs, DAG text, configs, reports.

Everything here is deterministic plumbing. Reports are canonical JSON:
keys sorted, floats rounded to 12 significant digits, non-finite values
mapped to null, two-space indent, trailing newline. Writing the same
report twice therefore produces identical bytes.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .errors import ParseError
from .graphs import Dag, reachability
from .qte import TreatmentSample
from .tailstats import SeriesTable

__all__ = [
    "REPORT_FORMAT",
    "load_series_csv",
    "write_series_csv",
    "load_treatment_csv",
    "parse_dag_text",
    "load_dag_file",
    "load_structure",
    "write_matrix_csv",
    "parse_config",
    "load_config",
    "canonical",
    "emit_report",
    "parse_report",
    "write_report",
]

REPORT_FORMAT = "tailcausal-report/1"

_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_DATE_HEADERS = {"date", "dates", "day", "time"}


def _read_rows(path):
    """All CSV rows with their physical line numbers, header first."""
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for row in reader:
            rows.append((reader.line_num, [cell.strip() for cell in row]))
    if not rows:
        raise ParseError(f"{path}: empty file")
    return rows


def _parse_cell(cell: str, name: str, line: int) -> float:
    if cell == "":
        return np.nan
    try:
        return float(cell)
    except ValueError:
        raise ParseError(
            f"column {name}: cannot parse {cell!r} as a number", line=line
        ) from None


def load_series_csv(path, drop_columns=()) -> SeriesTable:
    """Read an observation table from CSV.

    The header row is mandatory. The first column holds ISO-8601 dates
    when its header is one of date/dates/day/time or its first value
    looks like a date; all other columns are numeric with empty cells
    treated as missing. ``drop_columns`` removes named columns after
    parsing, so a date index survives the drop.
    """
    rows = _read_rows(path)
    header_line, header = rows[0]
    data = rows[1:]
    if not data:
        raise ParseError(f"{path}: no data rows", line=header_line)
    if any(cell == "" for cell in header):
        raise ParseError("empty column name in header", line=header_line)

    has_dates = header[0].lower() in _DATE_HEADERS or bool(
        _DATE_RE.match(data[0][1][0] if data[0][1] else "")
    )
    names = header[1:] if has_dates else header
    if not names:
        raise ParseError("no value columns", line=header_line)
    if len(set(names)) != len(names):
        raise ParseError("duplicate column names in header", line=header_line)

    dates = [] if has_dates else None
    values = []
    seen_last = None
    for line, row in data:
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, found {len(row)}", line=line
            )
        cells = row
        if has_dates:
            raw = cells[0]
            if not _DATE_RE.match(raw):
                raise ParseError(f"cannot parse {raw!r} as an ISO date", line=line)
            stamp = np.datetime64(raw, "D")
            if seen_last is not None and stamp == seen_last:
                raise ParseError(f"duplicate date {raw}", line=line)
            if seen_last is not None and stamp < seen_last:
                raise ParseError(f"dates must increase at {raw}", line=line)
            seen_last = stamp
            dates.append(stamp)
            cells = cells[1:]
        values.append(
            [_parse_cell(c, names[k], line) for k, c in enumerate(cells)]
        )

    try:
        table = SeriesTable(
            np.array(values, dtype=float),
            names,
            dates=np.array(dates, dtype="datetime64[D]") if has_dates else None,
        )
    except ValueError as err:
        raise ParseError(f"{path}: {err}") from err
    for name in drop_columns:
        if name not in table.names:
            raise ValueError(f"no column named {name!r} to drop")
    if drop_columns:
        keep = [k for k, n in enumerate(table.names) if n not in set(drop_columns)]
        if not keep:
            raise ValueError("cannot drop every column")
        table = SeriesTable(
            table.values[:, keep],
            [table.names[k] for k in keep],
            dates=table.dates,
        )
    return table


def _format_value(v: float) -> str:
    if not np.isfinite(v):
        return ""
    if v == int(v) and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def write_series_csv(table: SeriesTable, path) -> None:
    """Write a table in the format load_series_csv reads back."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if table.dates is not None:
            writer.writerow(["date", *table.names])
            for stamp, row in zip(table.dates, table.values):
                writer.writerow([str(stamp), *(_format_value(v) for v in row)])
        else:
            writer.writerow(table.names)
            for row in table.values:
                writer.writerow([_format_value(v) for v in row])


def load_treatment_csv(path) -> TreatmentSample:
    """Read an outcome/treatment/covariate file.

    The header must start with ``y`` then ``d``; any further columns
    are covariates in order. No cell may be empty.
    """
    rows = _read_rows(path)
    header_line, header = rows[0]
    if len(header) < 2 or header[0].lower() != "y" or header[1].lower() != "d":
        raise ParseError(
            "treatment files need columns y, d, then covariates",
            line=header_line,
        )
    data = rows[1:]
    if not data:
        raise ParseError(f"{path}: no data rows", line=header_line)
    parsed = []
    for line, row in data:
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} cells, found {len(row)}", line=line
            )
        if any(c == "" for c in row):
            raise ParseError("missing value in treatment data", line=line)
        parsed.append([_parse_cell(c, header[k], line) for k, c in enumerate(row)])
    arr = np.array(parsed, dtype=float)
    return TreatmentSample(arr[:, 0], arr[:, 1], arr[:, 2:])


_EDGE_RE = re.compile(r"^(\d+)\s*->\s*(\d+)(?:\s+(\S+))?$")


def parse_dag_text(text: str):
    """Parse the graph fixture format into (Dag, weights or None).

    One ``i -> j`` per line with an optional trailing weight, 1-based
    labels, ``#`` starting a comment, and an optional ``vertices N``
    line for isolated vertices. Either every edge carries a weight or
    none does.
    """
    edges: dict[tuple[int, int], float | None] = {}
    declared = 0
    weighted_at = unweighted_at = None
    for line_num, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.lower().startswith("vertices"):
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit() or int(parts[1]) < 1:
                raise ParseError("vertices line needs a positive count", line=line_num)
            declared = max(declared, int(parts[1]))
            continue
        m = _EDGE_RE.match(line)
        if not m:
            raise ParseError(f"cannot parse {line!r} as an edge", line=line_num)
        i, j = int(m.group(1)), int(m.group(2))
        if i < 1 or j < 1:
            raise ParseError("vertex labels are 1-based", line=line_num)
        if (i, j) in edges:
            raise ParseError(f"duplicate edge {i} -> {j}", line=line_num)
        if m.group(3) is None:
            weight = None
            unweighted_at = unweighted_at or line_num
        else:
            try:
                weight = float(m.group(3))
            except ValueError:
                raise ParseError(
                    f"cannot parse weight {m.group(3)!r}", line=line_num
                ) from None
            weighted_at = weighted_at or line_num
        if weighted_at and unweighted_at:
            raise ParseError(
                "mix of weighted and unweighted edges",
                line=max(weighted_at, unweighted_at),
            )
        edges[(i, j)] = weight
    if not edges and not declared:
        raise ParseError("no edges and no vertices line")
    d = max([declared, *(max(e) for e in edges)]) if edges else declared
    try:
        dag = Dag(d, set(edges))
    except ValueError as err:
        raise ParseError(str(err)) from err
    weights = None
    if weighted_at:
        weights = {e: w for e, w in edges.items()}
    return dag, weights


def load_dag_file(path):
    return parse_dag_text(Path(path).read_text(encoding="utf-8"))


def load_structure(path):
    """Read a reachability matrix from a DAG file or a matrix CSV.

    Text containing ``->`` or a ``vertices`` line is treated as the
    graph fixture format and closed into its reachability; anything
    else is read as a square CSV with a header of names. Returns
    (names or None, 0/1 matrix).
    """
    text = Path(path).read_text(encoding="utf-8")
    meaningful = [
        ln.split("#", 1)[0].strip()
        for ln in text.splitlines()
        if ln.split("#", 1)[0].strip()
    ]
    if any("->" in ln or ln.lower().startswith("vertices") for ln in meaningful):
        dag, _ = parse_dag_text(text)
        return None, reachability(dag)
    table = load_series_csv(path)
    if table.n != table.d:
        raise ParseError(
            f"{path}: matrix must be square, got {table.n} rows x {table.d} columns"
        )
    return tuple(table.names), table.values


def write_matrix_csv(names, matrix, path) -> None:
    """Dump a named square matrix as CSV; integral values print as ints."""
    arr = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(names)
        for row in arr:
            writer.writerow([_format_value(v) for v in row])


def parse_config(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` lines are comments.

    Values stay strings; the consumer coerces them. Keys are
    normalized to underscores so ``edge-threshold`` and
    ``edge_threshold`` name the same knob.
    """
    out: dict[str, str] = {}
    for line_num, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ParseError(f"expected key = value, got {line!r}", line=line_num)
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key:
            raise ParseError("empty key", line=line_num)
        if key in out:
            raise ParseError(f"duplicate key {key!r}", line=line_num)
        out[key] = value.strip()
    return out


def load_config(path) -> dict[str, str]:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def canonical(obj):
    """Round floats to 12 significant digits, recursively.

    Non-finite floats become None, numpy scalars and arrays become
    plain Python values, and tuples become lists, so the result is
    exactly what json.dumps will emit.
    """
    if isinstance(obj, dict):
        out = {}
        for k, v in obj.items():
            if not isinstance(k, str):
                raise TypeError(f"report keys must be strings, got {k!r}")
            out[k] = canonical(v)
        return out
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        if not np.isfinite(f):
            return None
        return float(f"{f:.12g}")
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot put {type(obj).__name__} in a report")


def emit_report(report: dict) -> str:
    """Serialize a report dict to canonical JSON text."""
    return (
        json.dumps(canonical(report), sort_keys=True, indent=2, allow_nan=False)
        + "\n"
    )


def parse_report(text: str) -> dict:
    try:
        report = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid report JSON: {err}") from err
    if not isinstance(report, dict) or report.get("format") != REPORT_FORMAT:
        raise ParseError(f"not a {REPORT_FORMAT} document")
    return report


def write_report(report: dict, path) -> None:
    Path(path).write_text(emit_report(report), encoding="utf-8")
