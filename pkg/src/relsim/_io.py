"""CSV helpers shared by the modules and the CLI."""
from __future__ import annotations

import csv
import io
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError


def fmt(value) -> str:
    """Integers verbatim, floats with 17 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return "" if value is None else str(value)


def to_csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def vector_csv(values: np.ndarray) -> str:
    """Complex vector dump with columns vertex, re, im."""
    values = np.asarray(values, dtype=complex)
    return to_csv(
        ["vertex", "re", "im"],
        ((k, float(z.real), float(z.imag)) for k, z in enumerate(values)),
    )


def read_vector_csv(text: str) -> np.ndarray:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty CSV")
    if [h.strip() for h in header] != ["vertex", "re", "im"]:
        raise ParseError(f"expected header vertex,re,im, got {header}", 1)
    entries = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        try:
            k, re, im = int(row[0]), float(row[1]), float(row[2])
        except (ValueError, IndexError):
            raise ParseError(f"bad row {row}", lineno)
        entries[k] = complex(re, im)
    if sorted(entries) != list(range(len(entries))):
        raise ParseError("vertex column must cover 0..n-1")
    return np.array([entries[k] for k in range(len(entries))], dtype=complex)
