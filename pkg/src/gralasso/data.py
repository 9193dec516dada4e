"""Numeric data table shared by the estimators, the simulator and the CLI.

A DataMatrix is an n x (p+1) array of finite floats with named columns and
the response stored in column 0. CSV ingestion reorders the user's columns
so that downstream partition extraction never needs an index argument.
"""

import csv
from dataclasses import dataclass

import numpy as np

__all__ = ["DataMatrix"]

# 17 significant digits round-trip any IEEE double exactly.
_FLOAT_FMT = "{:.17g}"


@dataclass(frozen=True)
class DataMatrix:
    values: np.ndarray
    columns: tuple

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 2:
            raise ValueError("values must be a 2-D array")
        if arr.shape[0] < 1:
            raise ValueError("empty input")
        if arr.shape[1] < 2:
            raise ValueError("need a response column and at least one predictor")
        cols = tuple(str(c) for c in self.columns)
        if len(cols) != arr.shape[1]:
            raise ValueError(
                f"{len(cols)} column names for {arr.shape[1]} columns"
            )
        if len(set(cols)) != len(cols):
            raise ValueError("column names must be unique")
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            i, j = bad[0]
            raise ValueError(
                f"non-finite value at row {i + 1}, column {cols[j]!r}"
            )
        object.__setattr__(self, "values", arr)
        object.__setattr__(self, "columns", cols)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1] - 1

    @property
    def response_name(self) -> str:
        return self.columns[0]

    @property
    def predictor_names(self) -> tuple:
        return self.columns[1:]

    @property
    def y(self) -> np.ndarray:
        return self.values[:, 0]

    @property
    def X(self) -> np.ndarray:
        return self.values[:, 1:]

    @classmethod
    def from_arrays(cls, y, X, predictor_names=None, response_name="y"):
        y = np.asarray(y, dtype=float).ravel()
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.size:
            raise ValueError("X must be 2-D with one row per response entry")
        if predictor_names is None:
            predictor_names = [f"x{j + 1}" for j in range(X.shape[1])]
        cols = (response_name, *predictor_names)
        return cls(np.column_stack([y, X]), cols)

    @classmethod
    def from_csv(cls, path, response):
        """Read a headered CSV, putting `response` first.

        Every cell must parse as a finite float; the error message names the
        offending row (1-based, excluding the header) and column.
        """
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise ValueError("empty input") from None
            header = [h.strip() for h in header]
            if response not in header:
                raise ValueError(f"response column {response!r} not in header")
            rows = []
            for i, row in enumerate(reader, start=1):
                if not row or (len(row) == 1 and row[0].strip() == ""):
                    continue
                if len(row) != len(header):
                    raise ValueError(
                        f"row {i} has {len(row)} cells, expected {len(header)}"
                    )
                parsed = []
                for name, cell in zip(header, row):
                    try:
                        val = float(cell)
                    except ValueError:
                        raise ValueError(
                            f"non-numeric value {cell.strip()!r} at row {i}, "
                            f"column {name!r}"
                        ) from None
                    if not np.isfinite(val):
                        raise ValueError(
                            f"non-finite value at row {i}, column {name!r}"
                        )
                    parsed.append(val)
                rows.append(parsed)
        if not rows:
            raise ValueError("empty input")
        arr = np.asarray(rows, dtype=float)
        ridx = header.index(response)
        order = [ridx] + [j for j in range(len(header)) if j != ridx]
        return cls(arr[:, order], tuple(header[j] for j in order))

    def to_csv(self, path):
        """Write response-first CSV; floats at 17 significant digits so a
        write-then-read round trip is bit-identical."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(self.columns)
            for row in self.values:
                writer.writerow([_FLOAT_FMT.format(v) for v in row])
