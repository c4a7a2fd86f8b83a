"""Plain-text series files: non-negative integer symbols separated by whitespace."""

from pathlib import Path

import numpy as np

from ._validation import check_alphabet_size, check_symbols, infer_alphabet_size
from .exceptions import DataError
from .trees import TimeSeries


def read_symbols(path):
    text = Path(path).read_text()
    tokens = text.split()
    if not tokens:
        raise DataError(f"no data in {path}")
    try:
        values = np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError as exc:
        raise DataError(f"{path}: non-integer token ({exc})") from None
    return check_symbols(values, name=str(path))


def load_series(path, depth, alphabet_size=None, context_in_file=False):
    """Read a series file; returns ``(TimeSeries, warnings)``.

    With ``context_in_file`` the first ``depth`` symbols form the initial
    context.  Otherwise the context is the head of the series, reused.
    """
    x = read_symbols(path)
    notes = []
    m = infer_alphabet_size(x) if alphabet_size is None else check_alphabet_size(alphabet_size)
    x = check_symbols(x, m, str(path))
    if context_in_file:
        if x.size <= depth:
            raise DataError(f"{path}: {x.size} symbols cannot supply a {depth}-symbol context and data")
        series = TimeSeries(x[:depth], x[depth:], m)
    else:
        series = TimeSeries.from_sequence(x, depth, m)
        if depth:
            notes.append(f"no initial context given; reusing the first {depth} symbols of the series")
    unused = sorted(set(range(m)) - set(np.unique(series.body).tolist()))
    if unused:
        notes.append(f"alphabet size {m} but symbols {unused} never occur")
    return series, notes


def write_series(path, series, width=40):
    """Write context then body, so the file reads back with ``context_in_file=True``."""
    full = series.full.tolist()
    lines = [" ".join(str(a) for a in full[i:i + width]) for i in range(0, len(full), width)]
    Path(path).write_text("\n".join(lines) + "\n")


def format_records(records):
    """One ``key=value`` line per record (a sequence of ``(key, value)`` pairs)."""
    out = []
    for rec in records:
        out.append(" ".join(f"{k}={_fmt(v)}" for k, v in rec))
    return "\n".join(out) + ("\n" if out else "")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_histogram(path, rows):
    lines = ["bin_left,bin_right,count"]
    lines += [f"{lo!r},{hi!r},{c}" for lo, hi, c in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def read_histogram(path):
    lines = Path(path).read_text().splitlines()[1:]
    rows = []
    for line in lines:
        lo, hi, c = line.split(",")
        rows.append((float(lo), float(hi), int(c)))
    return rows
