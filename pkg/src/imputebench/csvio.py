"""CSV interchange for datasets and masks.

First row is the header. Missing cells are an empty string or the
literal ``NA``; everything else parses as a decimal real. Values are
written with 17 significant digits so that read(write(d)) reproduces
every observed cell bit-for-bit.
"""

import csv

import numpy as np

from .dataset import Dataset
from .errors import DataError

_MISSING_TOKENS = {"", "NA"}


def read_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        rows = []
        masks = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
                )
            vals = np.empty(len(row))
            miss = np.zeros(len(row), dtype=bool)
            for j, cell in enumerate(row):
                token = cell.strip()
                if token in _MISSING_TOKENS:
                    vals[j] = np.nan
                    miss[j] = True
                else:
                    try:
                        vals[j] = float(token)
                    except ValueError:
                        raise DataError(
                            f"{path}:{lineno}: cannot parse {cell!r} as a real"
                        ) from None
            rows.append(vals)
            masks.append(miss)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return Dataset(header, np.vstack(rows), np.vstack(masks))


def write_csv(data: Dataset, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.column_names)
        for i in range(data.n_rows):
            writer.writerow(
                "NA" if data.mask[i, j] else format(data.values[i, j], ".17g")
                for j in range(data.n_cols)
            )


def write_mask_csv(data: Dataset, path):
    """Companion 0/1 mask (1 = missing) under the same header."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(data.column_names)
        for i in range(data.n_rows):
            writer.writerow(int(v) for v in data.mask[i])


def read_mask_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                rows.append([bool(int(c)) for c in row])
            except ValueError:
                raise DataError(f"{path}:{lineno}: mask cells must be 0 or 1") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=bool)
