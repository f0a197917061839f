"""Partition-space fusion: rotation alignment, consensus indicator update,
and residual-proportional view weights.

Each view's continuous partition is aligned to the discrete consensus
through an orthogonal rotation (a Procrustes problem with an SVD closed
form); the consensus itself is the row-wise argmax of the weighted sum of
aligned partitions; weights are proportional to the alignment residuals,
which minimizes the weighted residual sum on the simplex.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import InvalidInputError, NumericalError

logger = logging.getLogger(__name__)

# Weights are floored so the per-view alignment coefficient gamma/w stays
# bounded even when a view aligns perfectly (residual 0).
WEIGHT_FLOOR = 1e-8


def validate_indicator(y: np.ndarray) -> None:
    """Check binary entries with exactly one 1 per row."""
    if y.ndim != 2:
        raise InvalidInputError("indicator must be a 2-d matrix")
    is_binary = np.all((y == 0.0) | (y == 1.0))
    if not is_binary or not np.all(y.sum(axis=1) == 1.0):
        raise InvalidInputError("indicator rows must be one-hot")


def validate_rotation(r: np.ndarray, tol: float = 1e-10) -> None:
    c = r.shape[0]
    if r.shape != (c, c) or np.linalg.norm(r.T @ r - np.eye(c)) > tol:
        raise InvalidInputError("rotation must be a square orthogonal matrix")


def update_rotation(f: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Orthogonal matrix minimizing ||Y - F R||_F: R = U V^T from the SVD
    of F^T Y."""
    validate_indicator(y)
    try:
        u, _, vt = np.linalg.svd(f.T @ y)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed in rotation update: {exc}") from exc
    return u @ vt


def alignment_residual(f: np.ndarray, r: np.ndarray, y: np.ndarray) -> float:
    """Frobenius norm of Y - F R."""
    return float(np.linalg.norm(y - f @ r))


def update_indicator(
    fs: list[np.ndarray],
    rs: list[np.ndarray],
    w: np.ndarray,
    repair_empty: bool = True,
) -> np.ndarray:
    """Consensus indicator: one-hot row argmax of sum_i F_i R_i / w_i.

    Ties break toward the lowest column index.  The plain argmax is the
    exact minimizer of the weighted alignment residual over indicator
    matrices; with `repair_empty` (the solver default), a column that ends
    up empty additionally receives the sample with the largest score gap
    toward it (one per empty column, ascending column order) so the
    partition keeps exactly c clusters.  Repairs are logged.
    """
    if len(fs) != len(rs) or len(fs) != len(w):
        raise InvalidInputError("fs, rs and w must have equal length")
    n, c = fs[0].shape
    p = np.zeros((n, c))
    for f, r, wi in zip(fs, rs, w):
        p += (f @ r) / wi

    assigned = np.argmax(p, axis=1)  # ties -> smallest index
    y = np.zeros((n, c))
    y[np.arange(n), assigned] = 1.0
    if not repair_empty:
        return y

    for j in np.flatnonzero(y.sum(axis=0) == 0):
        sizes = np.bincount(assigned, minlength=c)
        gaps = p[:, j] - p[np.arange(n), assigned]
        # Only rows whose cluster keeps >= 1 member may move.
        gaps[sizes[assigned] < 2] = -np.inf
        i = int(np.argmax(gaps))
        logger.info(
            "empty cluster %d repaired: moved sample %d from cluster %d",
            j, i, assigned[i],
        )
        y[i, assigned[i]] = 0.0
        y[i, j] = 1.0
        assigned[i] = j

    return y


def update_weights(qs: np.ndarray) -> np.ndarray:
    """Simplex weights proportional to the alignment residuals.

    w_i = q_i / sum(q) minimizes sum_i q_i^2 / w_i over the simplex
    (Cauchy-Schwarz equality case); residuals are floored so no weight
    collapses to zero.
    """
    qs = np.asarray(qs, dtype=np.float64)
    if np.any(qs < 0):
        raise InvalidInputError("residuals must be nonnegative")
    floored = np.maximum(qs, WEIGHT_FLOOR)
    return floored / floored.sum()
