"""Small input-validation helpers used throughout the package."""

from __future__ import annotations

import numpy as np

from .errors import DegenerateRowError, ValidationError

MIN_ROW_NORM = 1e-12
NORM_TOL = 1e-5
PROB_ROW_TOL = 1e-6


def as_2d_float(x, name: str = "array") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"{name} must be non-empty, got shape {arr.shape}")
    return arr


def check_finite(arr: np.ndarray, name: str = "array") -> None:
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains NaN or Inf entries")


def check_rows_normalized(arr: np.ndarray, tol: float = NORM_TOL,
                          name: str = "matrix") -> None:
    norms = np.linalg.norm(np.asarray(arr, dtype=np.float64), axis=1)
    bad = np.nonzero(np.abs(norms - 1.0) > tol)[0]
    if bad.size:
        raise ValidationError(
            f"{name} flagged normalized but row {int(bad[0])} has "
            f"L2 norm {norms[bad[0]]:.6g}")


def row_norms(arr: np.ndarray) -> np.ndarray:
    return np.linalg.norm(np.asarray(arr, dtype=np.float64), axis=1)


def check_no_degenerate_rows(arr: np.ndarray, min_norm: float = MIN_ROW_NORM) -> None:
    norms = row_norms(arr)
    bad = np.nonzero(norms < min_norm)[0]
    if bad.size:
        raise DegenerateRowError(int(bad[0]))


def check_prob_rows(p: np.ndarray, tol: float = PROB_ROW_TOL,
                    name: str = "probability matrix") -> None:
    p = np.asarray(p, dtype=np.float64)
    if np.any(p < 0):
        raise ValidationError(f"{name} has negative entries")
    sums = p.sum(axis=1)
    bad = np.nonzero(np.abs(sums - 1.0) > tol)[0]
    if bad.size:
        raise ValidationError(
            f"{name} row {int(bad[0])} sums to {sums[bad[0]]:.9g}, expected 1")
