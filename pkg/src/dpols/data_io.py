"""Flat-file ingestion for the CLI: headered CSV in, bounded dataset out."""

import csv

import numpy as np

from .exceptions import InvalidInputError, RowBoundViolationError
from .projection import BoundedDataset

BOUND_POLICIES = ("reject", "clip")


def load_csv(path, label, row_bound: float | None = None, policy: str = "reject") -> BoundedDataset:
    """Read a headered CSV of finite numbers into a bounded dataset.

    ``label`` selects the label column by header name or integer index.
    With ``row_bound=None`` the declared bound is the empirical maximum
    row norm; otherwise rows above the bound are rejected (with their
    indices) or clipped onto it, per ``policy``.
    """
    if policy not in BOUND_POLICIES:
        raise InvalidInputError(f"policy must be one of {BOUND_POLICIES}, got {policy!r}")
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInputError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise InvalidInputError(
                    f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise InvalidInputError(f"{path}:{line_no}: {exc}") from None
    if not rows:
        raise InvalidInputError(f"{path}: no data rows")
    data = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(data)):
        bad = int(np.flatnonzero(~np.all(np.isfinite(data), axis=1))[0])
        raise InvalidInputError(f"{path}:{bad + 2}: non-finite value")

    if isinstance(label, str):
        try:
            label_column = header.index(label)
        except ValueError:
            raise InvalidInputError(
                f"{path}: no column named {label!r}; columns are {header}"
            ) from None
    else:
        label_column = int(label)
        if not -len(header) <= label_column < len(header):
            raise InvalidInputError(f"{path}: label index {label} out of range")

    norms = np.linalg.norm(data, axis=1)
    if row_bound is None:
        bound = float(np.max(norms))
        if bound == 0.0:
            bound = 1.0
        return BoundedDataset(data, bound, label_column=label_column)
    bound = float(row_bound)
    if policy == "reject":
        bad = np.flatnonzero(norms > bound * (1.0 + 1e-12))
        if bad.size:
            raise RowBoundViolationError(bad.tolist(), bound)
        return BoundedDataset(data, bound, label_column=label_column)
    return BoundedDataset.from_matrix(data, bound, label_column=label_column, clip=True)
