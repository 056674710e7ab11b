"""Plain-text file formats: labeled matrix CSVs, JSON reports, plot data.

A labeled CSV has a header row with the column coordinates (after an empty
corner cell) and one row per matrix row, led by its row coordinate. Values
are written with 17 significant digits, so a write/read round trip is exact.
"""

import csv
import json
from pathlib import Path

import numpy as np

__all__ = [
    "write_labeled_csv",
    "read_labeled_csv",
    "write_measurement",
    "read_measurement",
    "write_json",
    "read_json",
    "write_columns",
]

FLOAT_FMT = "%.17g"


def _fmt(x):
    return FLOAT_FMT % x


def write_labeled_csv(path, matrix, row_labels, col_labels, corner=""):
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {matrix.shape}")
    if matrix.shape != (len(row_labels), len(col_labels)):
        raise ValueError(f"labels {len(row_labels)}x{len(col_labels)} do not fit matrix {matrix.shape}")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([corner] + [lab if isinstance(lab, str) else _fmt(lab) for lab in col_labels])
        for lab, row in zip(row_labels, matrix):
            w.writerow([lab if isinstance(lab, str) else _fmt(lab)] + [_fmt(v) for v in row])


def read_labeled_csv(path):
    """Returns ``(matrix, row_labels, col_labels)``.

    Labels come back as floats when they all parse as numbers, else as strings.
    """
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise ValueError(f"{path} is not a text CSV file") from None
    if len(rows) < 2:
        raise ValueError(f"{path}: need a header row and at least one data row")
    header = rows[0][1:]
    if not header:
        raise ValueError(f"{path}: header row has no column labels")
    body, row_labels = [], []
    for k, r in enumerate(rows[1:], start=2):
        if len(r) != len(header) + 1:
            raise ValueError(f"{path}, line {k}: expected {len(header) + 1} fields, got {len(r)}")
        row_labels.append(r[0])
        try:
            body.append([float(v) for v in r[1:]])
        except ValueError:
            raise ValueError(f"{path}, line {k}: non-numeric value") from None
    return np.array(body), _maybe_numeric(row_labels), _maybe_numeric(header)


def _maybe_numeric(labels):
    try:
        return np.array([float(x) for x in labels])
    except ValueError:
        return list(labels)


def write_measurement(path, frequencies, times, M):
    write_labeled_csv(path, M, np.asarray(frequencies, float), np.asarray(times, float))


def read_measurement(path):
    """Measurement CSV -> ``(frequencies, times, M)`` with grid checks."""
    M, freqs, times = read_labeled_csv(path)
    if isinstance(freqs, list) or isinstance(times, list):
        raise ValueError(f"{path}: frequency and time labels must be numeric")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{path}: non-finite intensities")
    if np.any(M < 0):
        raise ValueError(f"{path}: negative intensities")
    if len(times) > 1 and not np.all(np.diff(times) > 0):
        raise ValueError(f"{path}: time points must be strictly increasing")
    if len(freqs) > 1 and not np.all(np.diff(freqs) > 0):
        raise ValueError(f"{path}: frequencies must be strictly increasing")
    return freqs, times, M


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, default=_jsonable)
        fh.write("\n")


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})") from None


def write_columns(path, columns, names):
    """Whitespace-separated numeric columns with a ``#`` header line."""
    data = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    np.savetxt(path, data, fmt=FLOAT_FMT, header=" ".join(names))
