"""CSV ingestion for return and price panels.

Expected layout: UTF-8, comma-separated, a header row whose first column is
the date label and remaining columns are tickers; dates are ISO-8601 and must
strictly increase. Empty cells are missing values; rows containing any missing
value are dropped (listwise) and the drop count is reported.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import DataError

MODE_RETURNS = "returns"
MODE_PRICES = "prices"


@dataclass(frozen=True)
class LoadedReturns:
    """Return matrix (rows = periods, columns = tickers) plus provenance."""

    x: np.ndarray
    dates: list
    tickers: list
    dropped_rows: int
    mode: str
    centered: bool


def _parse_date(token: str, row: int):
    try:
        return date.fromisoformat(token.strip())
    except ValueError as exc:
        raise DataError(f"row {row}: bad ISO-8601 date {token!r}") from exc


def _parse_cell(token: str, row: int, col: int, header: list):
    token = token.strip()
    if token == "" or token.upper() in ("NA", "NAN"):
        return np.nan
    try:
        return float(token)
    except ValueError as exc:
        raise DataError(
            f"row {row}, column {col} ({header[col]}): non-numeric cell {token!r}"
        ) from exc


def load_returns(csv_path, mode: str = MODE_RETURNS, center: bool = False) -> LoadedReturns:
    """Read a date-by-ticker CSV and produce an observation matrix.

    mode="prices" converts each retained row pair into log returns
    log(p_t / p_{t-1}); mode="returns" uses the values as-is. Column means
    are subtracted only when `center` is set.
    """
    if mode not in (MODE_RETURNS, MODE_PRICES):
        raise DataError(f"unknown load mode {mode!r}")
    with open(csv_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if len(rows) < 2:
        raise DataError(f"{csv_path}: need a header row plus data rows")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise DataError(f"{csv_path}: need a date column plus at least one ticker")
    tickers = header[1:]

    dates = []
    values = []
    dropped = 0
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(cell.strip() == "" for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"row {i}: expected {len(header)} cells, got {len(row)}")
        parsed = [_parse_cell(cell, i, j + 1, header) for j, cell in enumerate(row[1:])]
        if any(np.isnan(v) for v in parsed):
            dropped += 1
            continue
        dates.append(_parse_date(row[0], i))
        values.append(parsed)

    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise DataError(f"{csv_path}: dates must be strictly increasing")
    data = np.asarray(values, dtype=float)
    if data.shape[0] < 2:
        raise DataError(f"{csv_path}: fewer than 2 usable rows after dropping missing data")

    if mode == MODE_PRICES:
        if np.any(data <= 0):
            raise DataError(f"{csv_path}: prices must be positive")
        x = np.log(data[1:] / data[:-1])
        out_dates = dates[1:]
    else:
        x = data
        out_dates = dates

    if center:
        x = x - np.mean(x, axis=0)
    return LoadedReturns(
        x=x, dates=out_dates, tickers=tickers, dropped_rows=dropped,
        mode=mode, centered=center,
    )


@dataclass(frozen=True)
class LoadedMatrix:
    """Plain numeric observation matrix."""

    x: np.ndarray
    columns: list
    dropped_rows: int
    centered: bool


def load_matrix(csv_path, center: bool = False) -> LoadedMatrix:
    """Read a plain numeric CSV (optional header row) of observations.

    Rows with any missing cell are dropped and counted, mirroring the
    returns loader.
    """
    with open(csv_path, newline="", encoding="utf-8") as fh:
        rows = [row for row in csv.reader(fh) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{csv_path}: empty file")

    def _is_numeric(cell: str) -> bool:
        cell = cell.strip()
        if cell == "" or cell.upper() in ("NA", "NAN"):
            return True
        try:
            float(cell)
            return True
        except ValueError:
            return False

    if all(_is_numeric(cell) for cell in rows[0]):
        columns = [f"x{j + 1}" for j in range(len(rows[0]))]
        body = rows
        first_row = 1
    else:
        columns = [c.strip() for c in rows[0]]
        body = rows[1:]
        first_row = 2

    values = []
    dropped = 0
    for i, row in enumerate(body, start=first_row):
        if len(row) != len(columns):
            raise DataError(f"row {i}: expected {len(columns)} cells, got {len(row)}")
        parsed = [_parse_cell(cell, i, j, columns) for j, cell in enumerate(row)]
        if any(np.isnan(v) for v in parsed):
            dropped += 1
            continue
        values.append(parsed)
    if not values:
        raise DataError(f"{csv_path}: no usable rows")
    x = np.asarray(values, dtype=float)
    if center:
        x = x - np.mean(x, axis=0)
    return LoadedMatrix(x=x, columns=columns, dropped_rows=dropped, centered=center)
