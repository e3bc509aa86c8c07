"""CSV datasets, JSON-lines traces, JSON reports and atomic output directories."""
from __future__ import annotations

import contextlib
import csv
import json
import math
import os
import shutil
import tempfile
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .linmodel import Dataset


class DataFormatError(ValueError):
    pass


def read_matrix(path) -> np.ndarray:
    """Numeric CSV with one header row; errors name the offending line."""
    path = Path(path)
    rows = []
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: file is empty") from None
        width = len(header)
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != width:
                raise DataFormatError(f"{path}: line {line} has {len(row)} fields, expected {width}")
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                bad = next(i for i, c in enumerate(row) if not _is_float(c))
                raise DataFormatError(
                    f"{path}: line {line}, column {bad + 1}: {row[bad]!r} is not a number"
                ) from None
    if not rows:
        raise DataFormatError(f"{path}: no data rows")
    return np.array(rows, dtype=float)


def _is_float(text):
    try:
        float(text)
    except ValueError:
        return False
    return True


def write_matrix(path, matrix, header: Optional[list] = None):
    """Write with shortest round-trip float formatting, so reading back is exact."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    header = header or [f"x{j + 1}" for j in range(matrix.shape[1])]
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in matrix:
            writer.writerow([repr(float(v)) for v in row])


def load_csv(x_path, z_path, sigma2: float = 1.0) -> Dataset:
    X = read_matrix(x_path)
    z = read_matrix(z_path)
    if z.shape[1] != 1:
        raise DataFormatError(f"{z_path}: response file must have one column, found {z.shape[1]}")
    if z.shape[0] != X.shape[0]:
        raise DataFormatError(
            f"design has {X.shape[0]} rows but response has {z.shape[0]}"
        )
    return Dataset(X, z[:, 0], sigma2)


def write_dataset(directory, data: Dataset):
    directory = Path(directory)
    write_matrix(directory / "X.csv", data.X)
    write_matrix(directory / "z.csv", data.z[:, None], ["z"])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def to_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True)


class TraceWriter:
    """JSON-lines sink: call it with a :class:`TraceRecord` per recorded sweep."""

    def __init__(self, path):
        self.path = Path(path)
        self._fh = self.path.open("w")

    def __call__(self, record):
        self._fh.write(to_json(record.to_dict()) + "\n")

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_trace(path, records: Iterable):
    with TraceWriter(path) as sink:
        for r in records:
            sink(r)


def read_trace(path) -> list:
    with Path(path).open() as fh:
        return [json.loads(line) for line in fh if line.strip()]


def write_report(path, report: dict):
    Path(path).write_text(json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n")


@contextlib.contextmanager
def atomic_output_dir(target):
    """Yield a scratch directory that replaces ``target`` only on success."""
    target = Path(target)
    target.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=f".{target.name}.", dir=target.parent))
    try:
        yield tmp
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    if target.exists():
        backup = target.with_name(f".{target.name}.old")
        shutil.rmtree(backup, ignore_errors=True)
        os.replace(target, backup)
        os.replace(tmp, target)
        shutil.rmtree(backup, ignore_errors=True)
    else:
        os.replace(tmp, target)
