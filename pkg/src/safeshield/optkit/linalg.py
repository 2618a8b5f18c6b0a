"""Shared dense linear-algebra helpers."""

from __future__ import annotations

import numpy as np


def pseudoinverse(M: np.ndarray) -> np.ndarray:
    """Moore-Penrose inverse via SVD; defined for every real matrix."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    return np.linalg.pinv(M, rcond=1e-12)


def penrose_residual(M: np.ndarray, P: np.ndarray) -> float:
    """Worst violation of the four Penrose identities."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    r = [
        np.max(np.abs(M @ P @ M - M), initial=0.0),
        np.max(np.abs(P @ M @ P - P), initial=0.0),
        np.max(np.abs((M @ P).T - M @ P), initial=0.0),
        np.max(np.abs((P @ M).T - P @ M), initial=0.0),
    ]
    return float(max(r))
