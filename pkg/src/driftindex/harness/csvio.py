"""Two-pass CSV ingestion with per-column z-score normalisation."""
from __future__ import annotations

import csv
from typing import Iterator, List, Optional, Sequence

import numpy as np

from ..exceptions import ConfigError, DataError
from ..stream import DataPoint

CHUNK = 8192


def parse_columns(spec: Optional[str]) -> Optional[List[int]]:
    """Parse a 1-based column list such as ``"1,5-9"`` into 0-based indices."""
    if spec is None or not spec.strip():
        return None
    out: List[int] = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            if "-" in tok:
                a, b = (int(x) for x in tok.split("-", 1))
                if a < 1 or b < a:
                    raise ValueError
                out.extend(range(a - 1, b))
            else:
                a = int(tok)
                if a < 1:
                    raise ValueError
                out.append(a - 1)
        except ValueError:
            raise ConfigError(f"bad column range {tok!r} (columns are 1-based)") from None
    if len(set(out)) != len(out):
        raise ConfigError(f"column list {spec!r} selects a column twice")
    return out


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


class _Reader:
    def __init__(self, path, columns, skip_header, drop_non_numeric):
        self.path = path
        self.columns = columns
        self.skip_header = skip_header
        self.drop_non_numeric = drop_non_numeric

    def _rows(self):
        try:
            fh = open(self.path, newline="", encoding="utf-8")
        except OSError as exc:
            raise DataError(f"cannot read {self.path}: {exc}") from exc
        with fh:
            reader = csv.reader(fh)
            for lineno, row in enumerate(reader, start=1):
                if lineno == 1 and self.skip_header:
                    continue
                if not row or all(not c.strip() for c in row):
                    continue
                yield lineno, row

    def _resolve(self, lineno, row):
        if self.columns is not None:
            missing = [c + 1 for c in self.columns if c >= len(row)]
            if missing:
                raise DataError(f"line {lineno}: no column {missing[0]}")
            return list(self.columns)
        cols = list(range(len(row)))
        if self.drop_non_numeric:
            cols = [c for c in cols if _is_number(row[c])]
        if not cols:
            raise DataError("no numeric columns selected")
        return cols

    def chunks(self) -> Iterator[np.ndarray]:
        cols = None
        buf: List[List[float]] = []
        for lineno, row in self._rows():
            if cols is None:
                cols = self._resolve(lineno, row)
            vals = []
            for c in cols:
                try:
                    vals.append(float(row[c]))
                except (ValueError, IndexError):
                    cell = row[c] if c < len(row) else "<missing>"
                    raise DataError(
                        f"line {lineno}, column {c + 1}: non-numeric value {cell!r}"
                    ) from None
            buf.append(vals)
            if len(buf) == CHUNK:
                yield np.array(buf, dtype=float)
                buf = []
        if buf:
            yield np.array(buf, dtype=float)


def column_stats(chunks) -> tuple:
    """Count, mean and population stddev merged chunk by chunk (Chan et al.)."""
    count, mean, m2 = 0, None, None
    for X in chunks:
        n_b = X.shape[0]
        mean_b = X.mean(axis=0)
        m2_b = ((X - mean_b) ** 2).sum(axis=0)
        if mean is None:
            count, mean, m2 = n_b, mean_b, m2_b
            continue
        total = count + n_b
        delta = mean_b - mean
        mean = mean + delta * (n_b / total)
        m2 = m2 + m2_b + delta * delta * (count * n_b / total)
        count = total
    if mean is None:
        return 0, None, None
    return count, mean, np.sqrt(m2 / count)


def _normalized_chunks(path, columns=None, skip_header=False, drop_non_numeric=False):
    reader = _Reader(path, columns, skip_header, drop_non_numeric)
    count, mean, std = column_stats(reader.chunks())
    if count == 0:
        return
    scale = np.where(std > 0, std, 1.0)
    for X in reader.chunks():
        Z = (X - mean) / scale
        Z[:, std == 0] = 0.0
        yield Z


def ingest_csv(path, columns: Optional[Sequence[int]] = None, skip_header: bool = False,
               drop_non_numeric: bool = False) -> Iterator[DataPoint]:
    """Stream normalised points from a CSV file in file order.

    Pass one computes per-column mean and population stddev; pass two emits
    z-scores. Columns with zero spread map to 0. Ordinals count data rows from
    1, so a skipped header does not consume an ordinal. ``columns`` holds
    0-based indices (see :func:`parse_columns`).
    """
    ord_ = 0
    for Z in _normalized_chunks(path, columns, skip_header, drop_non_numeric):
        for row in Z:
            ord_ += 1
            yield DataPoint(ord_, row)


def load_csv(path, columns: Optional[Sequence[int]] = None, skip_header: bool = False,
             drop_non_numeric: bool = False) -> np.ndarray:
    """Same as :func:`ingest_csv` but returns the normalised rows as one array."""
    parts = list(_normalized_chunks(path, columns, skip_header, drop_non_numeric))
    if not parts:
        return np.zeros((0, len(columns) if columns else 0))
    return np.concatenate(parts)
