"""Per-view self-expressive graph learning and Laplacian construction.

Each sample is reconstructed as a ridge-regularized linear combination of
the others, optionally biased by the current spectral embedding.  The raw
coefficient matrix can be negative and asymmetric; before building the
Laplacian it is symmetrized and clamped at zero so the spectral subproblem
stays well-posed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalError


@dataclass(frozen=True)
class SimilarityGraph:
    """Raw self-expression coefficients plus the derived affinity/Laplacian.

    Attributes
    ----------
    s : ndarray (n, n)
        Raw coefficients, zero diagonal.
    w_sym : ndarray (n, n)
        Symmetrized nonnegative affinity, zero diagonal.
    laplacian : ndarray (n, n)
        Degree-minus-affinity Laplacian of `w_sym`; symmetric PSD with
        zero row sums.
    """

    s: np.ndarray
    w_sym: np.ndarray
    laplacian: np.ndarray


@dataclass(frozen=True)
class ViewFactorization:
    """Cached Cholesky factorization of (alpha*I + X^T X).

    Computed once per view per run; the matrix never changes across outer
    iterations, so every coefficient update reduces to triangular solves.
    """

    factor: tuple
    gram: np.ndarray
    alpha: float

    @property
    def n(self) -> int:
        return self.gram.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve (alpha*I + X^T X) z = rhs."""
        return scipy.linalg.cho_solve(self.factor, rhs)


def build_factorization(x: np.ndarray, alpha: float) -> ViewFactorization:
    """Factor (alpha*I + X^T X) for an (m, n) view matrix.

    alpha > 0 guarantees positive definiteness regardless of the data.
    """
    if alpha <= 0:
        raise InvalidInputError(f"alpha must be > 0, got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    gram = x.T @ x
    n = gram.shape[0]
    a = gram + alpha * np.eye(n)
    try:
        factor = scipy.linalg.cho_factor(a, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"Cholesky factorization failed: {exc}") from exc
    return ViewFactorization(factor=factor, gram=gram, alpha=float(alpha))


def embedding_distances(f: np.ndarray) -> np.ndarray:
    """Pairwise squared Euclidean distances between the rows of f."""
    sq = np.sum(f * f, axis=1)
    d = sq[:, None] + sq[None, :] - 2.0 * (f @ f.T)
    np.fill_diagonal(d, 0.0)
    return np.maximum(d, 0.0)


def _check_orthonormal(f: np.ndarray, tol: float = 1e-6) -> None:
    c = f.shape[1]
    err = np.linalg.norm(f.T @ f - np.eye(c))
    if err > tol:
        raise InvalidInputError(
            f"embedding columns not orthonormal (||F^T F - I|| = {err:.2e})"
        )


def solve_self_expression(
    fact: ViewFactorization,
    f: np.ndarray | None,
    beta: float,
) -> np.ndarray:
    """Closed-form coefficient solve, before any feasibility projection.

    Column i solves the ridge self-expression problem for sample i with a
    linear penalty coupling it to the embedding distances: the whole matrix
    is (alpha*I + X^T X)^{-1} (X^T X - (beta/4) * H) where H holds the
    pairwise squared row distances of f.
    """
    rhs = fact.gram
    if beta != 0.0:
        if f is None:
            raise InvalidInputError("an embedding is required when beta != 0")
        _check_orthonormal(f)
        rhs = rhs - (beta / 4.0) * embedding_distances(f)
    return fact.solve(rhs)


def build_laplacian(s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Symmetrize-and-clamp affinity, then degree-minus-affinity Laplacian."""
    w_sym = np.maximum((s + s.T) / 2.0, 0.0)
    np.fill_diagonal(w_sym, 0.0)
    lap = np.diag(w_sym.sum(axis=1)) - w_sym
    return w_sym, lap


def update_s(
    fact: ViewFactorization,
    f: np.ndarray | None,
    beta: float,
) -> SimilarityGraph:
    """One coefficient update for a view: closed-form solve, zero the
    diagonal, rebuild the affinity and Laplacian."""
    s = solve_self_expression(fact, f, beta)
    np.fill_diagonal(s, 0.0)
    w_sym, lap = build_laplacian(s)
    return SimilarityGraph(s=s, w_sym=w_sym, laplacian=lap)


def connectivity_defect(
    laplacian: np.ndarray,
    c: int,
    tol: float = 1e-8,
) -> tuple[int, np.ndarray]:
    """Count near-zero eigenvalues among the c smallest of the Laplacian.

    A graph with exactly c connected components has exactly c zero
    eigenvalues, the ideal similarity structure for c clusters.  Diagnostic
    only; never feeds back into the optimization.
    """
    n = laplacian.shape[0]
    c = min(c, n)
    try:
        eigvals = scipy.linalg.eigh(
            laplacian, eigvals_only=True, subset_by_index=(0, c - 1)
        )
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc
    count = int(np.sum(eigvals < tol))
    return count, eigvals
