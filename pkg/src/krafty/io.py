"""Plain-text readers and writers for matrices, labels, spectra and dendrograms.

Floats are written with ``repr`` so that a write/read round trip is exact
and re-running a command produces byte-identical files.
"""
from __future__ import annotations

import csv
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from .errors import InputError
from .types import Assignment, Dendrogram, Spectrum, as_matrix

__all__ = [
    "read_matrix",
    "write_matrix",
    "read_assignment",
    "write_assignment",
    "read_spectrum",
    "write_spectrum",
    "read_dendrogram",
    "write_dendrogram",
    "atomic_write_text",
    "format_float",
]


def format_float(x: float) -> str:
    return repr(float(x))


def atomic_write_text(path, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _rows(path) -> List[List[str]]:
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            return [row for row in csv.reader(fh)]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None


def _float(path, lineno: int, raw: str) -> float:
    try:
        val = float(raw)
    except ValueError:
        raise InputError(f"{path}:{lineno}: cannot parse {raw!r} as a number") from None
    return val


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    lines = [",".join(header)] if header else []
    lines.extend(",".join(str(c) for c in row) for row in rows)
    return "\n".join(lines) + "\n"


def read_matrix(path) -> np.ndarray:
    """Header-free numeric CSV, one matrix row per line."""
    data = []
    width = None
    for lineno, row in enumerate(_rows(path), start=1):
        if not row or all(not c.strip() for c in row):
            continue
        vals = [_float(path, lineno, c) for c in row]
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise InputError(f"{path}:{lineno}: expected {width} columns, found {len(vals)}")
        data.append(vals)
    if not data:
        raise InputError(f"{path}: matrix file is empty")
    return as_matrix(np.array(data), str(path))


def write_matrix(path, m) -> None:
    m = np.asarray(m, dtype=np.float64)
    atomic_write_text(path, _csv_text((), ([format_float(x) for x in row] for row in m)))


def read_assignment(path) -> Assignment:
    """One nonnegative integer label per line; labels are renumbered densely
    in order of first appearance."""
    labels = []
    for lineno, row in enumerate(_rows(path), start=1):
        if not row or not row[0].strip():
            continue
        if len(row) != 1:
            raise InputError(f"{path}:{lineno}: expected one label per line")
        try:
            lab = int(row[0])
        except ValueError:
            raise InputError(f"{path}:{lineno}: cannot parse {row[0]!r} as an integer label") from None
        if lab < 0:
            raise InputError(f"{path}:{lineno}: labels must be nonnegative")
        labels.append(lab)
    if not labels:
        raise InputError(f"{path}: assignment file is empty")
    return Assignment.from_labels(np.array(labels))


def write_assignment(path, a) -> None:
    labels = a.labels if isinstance(a, Assignment) else np.asarray(a)
    atomic_write_text(path, "".join(f"{int(x)}\n" for x in labels))


def write_spectrum(path, s) -> None:
    """``index,value,gap`` with 1-based index; the gap of the last value is empty."""
    s = s if isinstance(s, Spectrum) else Spectrum(s)
    v = s.values
    rows = []
    for i, x in enumerate(v):
        gap = format_float(v[i] - v[i + 1]) if i + 1 < v.size else ""
        rows.append((i + 1, format_float(x), gap))
    atomic_write_text(path, _csv_text(("index", "value", "gap"), rows))


def read_spectrum(path) -> Spectrum:
    """Spectrum CSV with an ``index,value[,gap]`` header, or a bare column of values."""
    rows = [r for r in _rows(path) if r and any(c.strip() for c in r)]
    if not rows:
        raise InputError(f"{path}: spectrum file is empty")
    col = 0
    start = 0
    header = [c.strip().lower() for c in rows[0]]
    if "value" in header:
        col = header.index("value")
        start = 1
    vals = []
    for lineno, row in enumerate(rows[start:], start=start + 1):
        if col >= len(row):
            raise InputError(f"{path}:{lineno}: missing value column")
        vals.append(_float(path, lineno, row[col]))
    if not vals:
        raise InputError(f"{path}: spectrum file has no values")
    return Spectrum(np.array(vals))


_DENDRO_HEADER = ("step", "left", "right", "new_id", "height")


def write_dendrogram(path, d: Dendrogram) -> None:
    rows = ((t, i, j, c, format_float(h)) for t, i, j, c, h in d.records())
    atomic_write_text(path, _csv_text(_DENDRO_HEADER, rows))


def read_dendrogram(path) -> Dendrogram:
    """Dendrogram CSV as written by :func:`write_dendrogram`."""
    rows = [r for r in _rows(path) if r and any(c.strip() for c in r)]
    if not rows or tuple(c.strip() for c in rows[0]) != _DENDRO_HEADER:
        raise InputError(f"{path}: expected header {','.join(_DENDRO_HEADER)}")
    body = rows[1:]
    left, right, new_id, heights = [], [], [], []
    for lineno, row in enumerate(body, start=2):
        if len(row) != 5:
            raise InputError(f"{path}:{lineno}: expected 5 columns, found {len(row)}")
        try:
            left.append(int(row[1]))
            right.append(int(row[2]))
            new_id.append(int(row[3]))
        except ValueError:
            raise InputError(f"{path}:{lineno}: cluster ids must be integers") from None
        heights.append(_float(path, lineno, row[4]))
    if not body:
        raise InputError(f"{path}: dendrogram has no merges")
    return Dendrogram(n=len(body) + 1, left=left, right=right, new_id=new_id, heights=heights)
