"""CSV schemas of the sampler/diagnostics outputs this package consumes.

Each loader validates the header against the documented schema and fails
naming the first offending column, so a mismatched or stale file is
reported precisely rather than plotted wrong.
"""

from __future__ import annotations

import csv

import numpy as np

__all__ = ["SchemaError", "load_columns", "load_trace", "load_ess", "load_ranks", "load_curve", "load_prior_theta"]


class SchemaError(ValueError):
    """An input file does not match its documented schema."""


def load_columns(path, required, optional_extra=True):
    """Read a CSV with a header; returns (header, list-of-string-rows).

    ``required`` columns must appear as the leading header fields in order;
    extra trailing columns are allowed when ``optional_extra``.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise SchemaError(f"{path}: empty file")
        header = [h.strip() for h in header]
        for pos, want in enumerate(required):
            if pos >= len(header):
                raise SchemaError(f"{path}: missing column {want!r}")
            if header[pos] != want:
                raise SchemaError(f"{path}: expected column {want!r}, found {header[pos]!r}")
        if not optional_extra and len(header) != len(required):
            raise SchemaError(f"{path}: unexpected extra column {header[len(required)]!r}")
        rows = [row for row in reader if row and any(f.strip() for f in row)]
    return header, rows


def _floats(rows, col, path, name):
    try:
        return np.array([float(row[col]) for row in rows])
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path}: column {name!r} has a non-numeric entry") from exc


def load_trace(path, column="total"):
    """loglik.csv-style trace: iter plus named numeric columns."""
    header, rows = load_columns(path, ["iter"])
    if column not in header:
        raise SchemaError(f"{path}: missing column {column!r}")
    col = header.index(column)
    return _floats(rows, 0, path, "iter"), _floats(rows, col, path, column)


def load_ess(path):
    """ess.csv: legislator_id, ess, status; degenerate rows are skipped."""
    _, rows = load_columns(path, ["legislator_id", "ess", "status"], optional_extra=False)
    kept = [row for row in rows if row[2].strip() == "ok"]
    return _floats(kept, 1, path, "ess")


def load_ranks(path):
    """ranks.csv: legislator_id, mean_rank."""
    _, rows = load_columns(path, ["legislator_id", "mean_rank"], optional_extra=False)
    ids = [row[0].strip() for row in rows]
    return ids, _floats(rows, 1, path, "mean_rank")


def load_curve(path):
    """curve_<item>.csv: beta, mean, lower, upper."""
    _, rows = load_columns(path, ["beta", "mean", "lower", "upper"], optional_extra=False)
    return tuple(_floats(rows, c, path, name) for c, name in enumerate(("beta", "mean", "lower", "upper")))


def load_prior_theta(path):
    """prior_theta.csv: a single theta column of probabilities."""
    _, rows = load_columns(path, ["theta"], optional_extra=False)
    theta = _floats(rows, 0, path, "theta")
    if theta.size and (theta.min() < 0.0 or theta.max() > 1.0):
        raise SchemaError(f"{path}: column 'theta' must lie in [0, 1]")
    return theta
