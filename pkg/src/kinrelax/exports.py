"""Delimited-text exports: UTF-8, LF line ends, ``.`` decimals, one header row.

Metadata go in leading ``#`` comment lines, so every file loads with
``numpy.loadtxt(path, delimiter=",", skiprows=...)`` or any CSV reader that skips
comments.  Numbers are written with 17 significant digits so that a re-run with
the same inputs reproduces the file byte for byte.
"""
import csv
import io
from pathlib import Path

import numpy as np
import yaml


def _fmt(x):
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def table_text(columns, rows, meta=None, footer=None):
    """Header comments from ``meta``, one column row, data rows, footer comments from ``footer``."""
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    for k, v in (footer or {}).items():
        buf.write(f"# {k}: {_fmt(v)}\n")
    return buf.getvalue()


def write_table(path, columns, rows, meta=None, footer=None):
    """Write a table; returns the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(table_text(columns, rows, meta, footer))
    return path


def read_table(path):
    """``(columns, array, notes)`` from a file written by :func:`write_table`.

    ``notes`` collects the ``# key: value`` comment lines (header and footer).
    """
    notes = {}
    body = []
    with open(path, encoding="utf-8") as fh:
        for ln in fh:
            if ln.startswith("#"):
                key, _, val = ln[1:].strip().partition(": ")
                notes[key] = val
            else:
                body.append(ln)
    cols = body[0].rstrip("\n").split(",")
    data = np.loadtxt(body[1:], delimiter=",", ndmin=2) if len(body) > 1 else np.empty((0, len(cols)))
    return cols, data, notes


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "value") and not isinstance(obj, (str, int)):
        return obj.value
    return obj


def write_summary(path, summary):
    """Key-value YAML summary document."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(_plain(summary), fh, sort_keys=False, width=100)
    return path
