"""Canonical panel files, CSV ingestion and matrix output.

Panel file layout::

    # panel d=<d> N=<N> preprocessing=<mode>
    id_1,id_2,...,id_N
    <d rows of N comma-separated floats, shortest round-trip repr>
"""
from __future__ import annotations

import csv
import datetime as dt
import io
import re
from pathlib import Path

import numpy as np

from .errors import DimensionError, DomainError, RandFactorError
from .stats import DataPanel, log_returns, standardize

_HEADER = re.compile(r"^# panel d=(\d+) N=(\d+) preprocessing=(\w+)$")


class PanelFormatError(RandFactorError, ValueError):
    """A panel or input CSV file is malformed."""


def _fmt(x: float) -> str:
    return repr(float(x))


def format_panel(panel: DataPanel) -> str:
    buf = io.StringIO()
    buf.write(f"# panel d={panel.d} N={panel.N} preprocessing={panel.preprocessing}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(panel.ids())
    for row in panel.values:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_panel(panel: DataPanel, path) -> None:
    Path(path).write_text(format_panel(panel))


def read_panel(path) -> DataPanel:
    with open(path, newline="") as fh:
        first = fh.readline().rstrip("\r\n")
        m = _HEADER.match(first)
        if not m:
            raise PanelFormatError(f"{path}:1: expected '# panel d=<d> N=<N> preprocessing=<mode>'")
        d, N, mode = int(m.group(1)), int(m.group(2)), m.group(3)
        reader = csv.reader(fh)
        try:
            ids = next(reader)
        except StopIteration:
            raise PanelFormatError(f"{path}:2: missing series-id header") from None
        rows = []
        for lineno, row in enumerate(reader, start=3):
            if len(row) != N:
                raise PanelFormatError(f"{path}:{lineno}: expected {N} values, got {len(row)}")
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise PanelFormatError(f"{path}:{lineno}: {exc}") from None
    if len(ids) != N or len(rows) != d:
        raise PanelFormatError(f"{path}: header says d={d} N={N}, file has {len(rows)} rows and {len(ids)} ids")
    return DataPanel(np.array(rows), mode, tuple(ids))


def read_timeseries_csv(path) -> tuple[list[str], list[str], np.ndarray]:
    """Read ``date,id_1,...`` CSV; returns dates, series ids and a float matrix.

    Missing or non-numeric cells and non-increasing dates raise
    :class:`PanelFormatError` listing every offending (row, column).
    """
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PanelFormatError(f"{path}: empty file") from None
        ids = [h.strip() for h in header[1:]]
        if not ids:
            raise PanelFormatError(f"{path}: no series columns")
        dates, values, missing = [], [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                date = dt.date.fromisoformat(row[0].strip())
            except ValueError:
                raise PanelFormatError(f"{path}:{lineno}: bad ISO-8601 date {row[0]!r}") from None
            if dates and date <= dates[-1]:
                raise PanelFormatError(f"{path}:{lineno}: dates not strictly increasing ({date} after {dates[-1]})")
            dates.append(date)
            cells = row[1:] + [""] * (len(ids) - len(row) + 1)
            vals = []
            for j, cell in enumerate(cells[: len(ids)]):
                try:
                    x = float(cell)
                    if not np.isfinite(x):
                        raise ValueError
                except ValueError:
                    missing.append((lineno, ids[j]))
                    x = np.nan
                vals.append(x)
            if len(row) - 1 > len(ids):
                raise PanelFormatError(f"{path}:{lineno}: more cells than header columns")
            values.append(vals)
    if missing:
        listing = ", ".join(f"(row {r}, column {c})" for r, c in missing)
        raise PanelFormatError(f"{path}: missing or non-numeric values at {listing}")
    return [d.isoformat() for d in dates], ids, np.array(values, dtype=np.float64).reshape(len(values), len(ids))


def ingest(path, mode: str = "prices") -> DataPanel:
    """Prices -> log returns -> standardized panel; returns are standardized directly."""
    if mode not in ("prices", "returns"):
        raise ValueError("mode must be 'prices' or 'returns'")
    _, ids, values = read_timeseries_csv(path)
    if mode == "prices":
        try:
            values = log_returns(values)
        except DomainError as exc:
            raise DomainError(f"{path}: {exc}") from None
    if values.shape[0] < 2:
        raise DimensionError(f"{path}: need at least 2 observations after ingestion")
    return standardize(DataPanel(values, "raw", tuple(ids)))


def format_matrix(values: np.ndarray, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in np.atleast_2d(values):
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def write_matrix(values: np.ndarray, columns, path) -> None:
    Path(path).write_text(format_matrix(values, columns))
