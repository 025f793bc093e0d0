"""CSV input and output.

Inputs are daily case counts (``date,new_cases``) and biweekly variant
shares (``window_end_date,emerging_share``).  Outputs are headered CSV
tables written atomically; floats use the shortest repr that round-trips.
Lines starting with ``#`` are comments and are skipped by every loader.
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NegativeCases, NonMonotoneDates, ParseError, ShareOutOfRange, WindowMisaligned

CASE_HEADER = ("date", "new_cases")
SHARE_HEADER = ("window_end_date", "emerging_share")


@dataclass(frozen=True)
class CaseDataFile:
    dates: tuple
    new_cases: np.ndarray

    def __len__(self):
        return len(self.dates)


@dataclass(frozen=True)
class VariantShareFile:
    window_end_dates: tuple
    emerging_share: np.ndarray

    def __len__(self):
        return len(self.window_end_dates)


def _data_lines(path):
    """Yield ``(line_number, fields)`` for non-comment, non-blank rows."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(path, 0, f"not UTF-8: {exc}") from None
    for number, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or (len(row) == 1 and not row[0].strip()) or row[0].lstrip().startswith("#"):
            continue
        yield number, [f.strip() for f in row]


def _parse_date(path, line, text):
    try:
        return dt.date.fromisoformat(text)
    except ValueError:
        raise ParseError(path, line, f"bad ISO date {text!r}") from None


def _parse_float(path, line, text):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(path, line, f"bad number {text!r}") from None
    if not math.isfinite(value):
        raise ParseError(path, line, f"non-finite number {text!r}")
    return value


def _two_column(path, header):
    rows = _data_lines(path)
    first = next(rows, None)
    if first is None:
        raise ParseError(path, 0, "empty file")
    line, fields = first
    if tuple(fields) != header:
        raise ParseError(path, line, f"expected header {','.join(header)}")
    out = []
    for line, fields in rows:
        if len(fields) != 2:
            raise ParseError(path, line, f"expected 2 fields, got {len(fields)}")
        out.append((line, _parse_date(path, line, fields[0]), _parse_float(path, line, fields[1])))
    return out


def _check_increasing(path, rows):
    for (_, a, _), (line, b, _) in zip(rows, rows[1:]):
        if b <= a:
            raise NonMonotoneDates(f"{path}:{line}: date {b} does not follow {a}")


def load_case_data(path) -> CaseDataFile:
    """Read a ``date,new_cases`` file of daily counts.

    Raises
    ------
    ParseError
        On a malformed header, row, date or number (carries the line number).
    NonMonotoneDates
        If dates are not strictly increasing.
    NegativeCases
        If a count is negative.
    """
    rows = _two_column(path, CASE_HEADER)
    _check_increasing(path, rows)
    for line, _, count in rows:
        if count < 0:
            raise NegativeCases(f"{path}:{line}: negative count {count!r}")
    return CaseDataFile(tuple(r[1] for r in rows), np.array([r[2] for r in rows], dtype=float))


def load_variant_shares(path) -> VariantShareFile:
    """Read a ``window_end_date,emerging_share`` file with rows 14 days apart."""
    rows = _two_column(path, SHARE_HEADER)
    _check_increasing(path, rows)
    for (_, a, _), (line, b, _) in zip(rows, rows[1:]):
        if (b - a).days != 14:
            raise WindowMisaligned(f"{path}:{line}: window end {b} is not 14 days after {a}")
    for line, _, share in rows:
        if not 0.0 <= share <= 1.0:
            raise ShareOutOfRange(f"{path}:{line}: share {share!r} outside [0, 1]")
    return VariantShareFile(tuple(r[1] for r in rows), np.array([r[2] for r in rows], dtype=float))


# -- output ------------------------------------------------------------------

def format_value(v) -> str:
    """Shortest round-trip text for floats; ISO format for dates; str otherwise."""
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, dt.date):
        return v.isoformat()
    return str(v)


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def timestamp() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")


def write_csv(path, header, rows, reproducible: bool = True) -> None:
    """Write a headered CSV; without ``reproducible`` a ``# generated`` line comes first."""
    buf = io.StringIO()
    if not reproducible:
        buf.write(f"# generated: {timestamp()}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    atomic_write_text(path, buf.getvalue())


def _parse_cell(text):
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(path):
    """Load a CSV written by :func:`write_csv`: ``(header, rows)`` with numbers as floats."""
    rows = list(_data_lines(path))
    if not rows:
        raise ParseError(path, 0, "empty file")
    header = tuple(rows[0][1])
    body = []
    for line, fields in rows[1:]:
        if len(fields) != len(header):
            raise ParseError(path, line, f"expected {len(header)} fields, got {len(fields)}")
        body.append(tuple(_parse_cell(f) for f in fields))
    return header, body


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, dt.date):
        return obj.isoformat()
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _finite_json(obj):
    # JSON has no NaN/Infinity; encode them as strings
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        return {k: _finite_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite_json(v) for v in obj]
    if isinstance(obj, (float, np.floating)) and not math.isfinite(obj):
        return repr(float(obj))
    return obj


def write_json(path, payload: dict, reproducible: bool = True) -> None:
    payload = dict(payload)
    if not reproducible:
        payload["generated"] = timestamp()
    text = json.dumps(_finite_json(payload), indent=2, sort_keys=True, default=_json_default, allow_nan=False)
    atomic_write_text(path, text + "\n")
