"""Data loading and plain-text output."""

import csv
import json
import math

import numpy as np

__all__ = [
    "DataError",
    "load_observations",
    "load_adjacency",
    "write_matrix_csv",
    "write_json",
    "fmt",
]


class DataError(ValueError):
    """Malformed input file."""


def fmt(x):
    """Float with 17 significant digits (round-trips exactly)."""
    return "%.17g" % x


def _is_number(s):
    try:
        float(s)
    except ValueError:
        return False
    return True


def _read_rows(path):
    with open(path, newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{path}: file is empty")
    return rows


def load_observations(path, header=None, columns=None):
    """Read a numeric CSV into an ``(n, d)`` array.

    Parameters
    ----------
    path : str
    header : bool or None
        Whether the first row is a header; ``None`` detects a non-numeric
        first row.
    columns : list of str or int, optional
        Subset of columns by header name or 0-based position.

    Raises
    ------
    DataError
        On empty input, ragged rows, non-numeric or missing values; the
        message names the offending line.
    """
    rows = _read_rows(path)
    first = [c.strip() for c in rows[0][1]]
    if header is None:
        header = not all(_is_number(c) for c in first)
    names = first if header else None
    body = rows[1:] if header else rows
    if not body:
        raise DataError(f"{path}: no data rows")
    width = len(body[0][1])
    out = np.empty((len(body), width))
    for r, (line, row) in enumerate(body):
        if len(row) != width:
            raise DataError(f"{path}:{line}: expected {width} fields, found {len(row)}")
        for c, cell in enumerate(row):
            cell = cell.strip()
            try:
                value = float(cell)
            except ValueError:
                raise DataError(f"{path}:{line}: non-numeric value {cell!r}") from None
            if not math.isfinite(value):
                raise DataError(f"{path}:{line}: missing or non-finite value {cell!r}")
            out[r, c] = value
    if columns:
        idx = []
        for col in columns:
            if isinstance(col, str) and not col.lstrip("-").isdigit():
                if names is None or col not in names:
                    raise DataError(f"{path}: unknown column {col!r}")
                idx.append(names.index(col))
            else:
                idx.append(int(col))
        out = out[:, idx]
    return out


def load_adjacency(path, fmt="edges", n_nodes=None):
    """Read an undirected simple graph as a symmetric 0/1 matrix.

    ``fmt="edges"`` expects rows ``i,j`` of 1-based node indices (an
    optional non-numeric header row is skipped) and symmetrises them;
    ``fmt="dense"`` expects a square 0/1 matrix that must already be
    symmetric.  Self-loops are rejected in both formats.
    """
    rows = _read_rows(path)
    if fmt == "dense":
        A = load_observations(path, header=False)
        if A.shape[0] != A.shape[1]:
            raise DataError(f"{path}: dense adjacency must be square, got {A.shape}")
        if not np.all((A == 0) | (A == 1)):
            raise DataError(f"{path}: dense adjacency entries must be 0 or 1")
        if not np.array_equal(A, A.T):
            raise DataError(f"{path}: dense adjacency is not symmetric")
        if np.any(np.diag(A) != 0):
            raise DataError(f"{path}: self-loop on the diagonal")
        return A.astype(np.int64)
    if fmt != "edges":
        raise ValueError(f"unknown adjacency format {fmt!r}")
    if not all(_is_number(c) for c in rows[0][1]):
        rows = rows[1:]
    edges = []
    for line, row in rows:
        if len(row) != 2:
            raise DataError(f"{path}:{line}: an edge needs exactly two node indices")
        try:
            i, j = (int(c.strip()) for c in row)
        except ValueError:
            raise DataError(f"{path}:{line}: node indices must be integers") from None
        if i < 1 or j < 1:
            raise DataError(f"{path}:{line}: node indices are 1-based")
        if i == j:
            raise DataError(f"{path}:{line}: self-loop ({i},{j}) is not allowed")
        edges.append((i - 1, j - 1))
    if not edges:
        raise DataError(f"{path}: no edges")
    e = np.asarray(edges)
    n = int(e.max()) + 1
    if n_nodes is not None:
        if n > n_nodes:
            raise DataError(f"{path}: node index {n} exceeds n_nodes={n_nodes}")
        n = int(n_nodes)
    A = np.zeros((n, n), dtype=np.int64)
    A[e[:, 0], e[:, 1]] = 1
    A[e[:, 1], e[:, 0]] = 1
    return A


def write_matrix_csv(path, matrix):
    with open(path, "w") as fh:
        for row in np.atleast_2d(matrix):
            fh.write(",".join(fmt(x) for x in row) + "\n")


def write_json(path, obj):
    # json writes floats with repr, the shortest string that round-trips
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")
