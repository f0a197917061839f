"""Feasible curvilinear search for quadratic-plus-linear objectives over
matrices with orthonormal columns.

Minimizes Tr(F^T M F) - 2 Tr(F^T B) subject to F^T F = I with a Cayley
retraction: every iterate stays exactly on the constraint set (up to
linear-solve roundoff), so no projection or post-hoc orthonormalization
step is needed.  Step sizes come from alternating Barzilai-Borwein
estimates safeguarded by Armijo backtracking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True)
class StiefelProblem:
    """Objective data: symmetric quadratic term `m`, linear term `b`.

    objective(F) = Tr(F^T m F) - 2 Tr(F^T b), the variable part of
    beta*Tr(F^T L F) + (gamma/w)*||Y - F R||_F^2 once the constant
    ||Y||^2 + ||F R||^2 is dropped (||F R||_F^2 = c on the manifold).
    """

    m: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.m, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        if np.linalg.norm(m - m.T) > 1e-10 * (1.0 + np.linalg.norm(m)):
            raise InvalidInputError("quadratic term must be symmetric")
        if b.shape[0] != m.shape[0]:
            raise InvalidInputError(
                f"linear term rows {b.shape[0]} != matrix size {m.shape[0]}"
            )
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "b", b)

    def objective(self, f: np.ndarray) -> float:
        return float(np.sum(f * (self.m @ f)) - 2.0 * np.sum(f * self.b))

    def gradient(self, f: np.ndarray) -> np.ndarray:
        return 2.0 * (self.m @ f) - 2.0 * self.b


@dataclass
class StiefelSolverConfig:
    max_inner_iters: int = 200
    grad_tol: float = 1e-6
    armijo_c: float = 1e-4
    step_init: float = 1e-2
    bb_steps: bool = True

    def __post_init__(self):
        if self.max_inner_iters <= 0 or self.grad_tol <= 0 or self.step_init <= 0:
            raise InvalidInputError("solver knobs must be positive")
        if not 0.0 < self.armijo_c < 1.0:
            raise InvalidInputError("armijo_c must lie in (0, 1)")


@dataclass
class StiefelResult:
    f: np.ndarray
    objective: float
    grad_norm: float
    iterations: int
    status: str  # "converged" | "max_iters" | "stalled"
    max_orth_error: float
    objective_history: list[float] = field(default_factory=list)


_MAX_HALVINGS = 30


def _orth_error(f: np.ndarray) -> float:
    c = f.shape[1]
    return float(np.linalg.norm(f.T @ f - np.eye(c)))


def riemannian_grad_norm(p: StiefelProblem, f: np.ndarray) -> float:
    """Norm of the gradient projected onto the tangent space at f.

    Zero iff f is first-order stationary on the manifold.
    """
    g = p.gradient(f)
    ftg = f.T @ g
    proj = g - f @ ((ftg + ftg.T) / 2.0)
    return float(np.linalg.norm(proj))


def _cayley_step(f: np.ndarray, a: np.ndarray, tau: float) -> np.ndarray:
    """F(tau) = (I + tau/2 A)^{-1} (I - tau/2 A) F for skew A."""
    n = f.shape[0]
    half = 0.5 * tau
    lhs = np.eye(n) + half * a
    rhs = f - half * (a @ f)
    return np.linalg.solve(lhs, rhs)


def solve_stiefel(
    p: StiefelProblem,
    f0: np.ndarray,
    cfg: StiefelSolverConfig | None = None,
) -> StiefelResult:
    """Descend from a feasible f0; the returned iterate is feasible and its
    objective never exceeds the starting one.

    Terminates when the Riemannian gradient norm drops below
    grad_tol * (1 + |objective|), the iteration cap is hit, or the line
    search stalls (no acceptable step after repeated halvings).
    """
    if cfg is None:
        cfg = StiefelSolverConfig()
    f = np.asarray(f0, dtype=np.float64)
    if _orth_error(f) > 1e-8:
        raise InvalidInputError("starting point must have orthonormal columns")

    obj = p.objective(f)
    history = [obj]
    max_orth = _orth_error(f)
    grad = p.gradient(f)
    f_prev = None
    grad_prev = None
    status = "max_iters"
    steps = 0

    for _ in range(cfg.max_inner_iters):
        gnorm = riemannian_grad_norm(p, f)
        if gnorm <= cfg.grad_tol * (1.0 + abs(obj)):
            status = "converged"
            break

        a = grad @ f.T - f @ grad.T
        # Directional derivative of the curve objective at tau=0.
        deriv0 = -0.5 * float(np.sum(a * a))

        tau = cfg.step_init
        if cfg.bb_steps and f_prev is not None:
            s = f - f_prev
            y = grad - grad_prev
            sy = abs(float(np.sum(s * y)))
            if sy > 0:
                if steps % 2 == 0:
                    tau = float(np.sum(s * s)) / sy
                else:
                    yy = float(np.sum(y * y))
                    tau = sy / yy if yy > 0 else cfg.step_init
            tau = float(np.clip(tau, 1e-10, 1e10))

        accepted = False
        f_new = f
        obj_new = obj
        for _ in range(_MAX_HALVINGS):
            try:
                f_try = _cayley_step(f, a, tau)
            except np.linalg.LinAlgError:
                tau *= 0.5
                continue
            obj_try = p.objective(f_try)
            if obj_try <= obj + cfg.armijo_c * tau * deriv0:
                f_new, obj_new, accepted = f_try, obj_try, True
                break
            tau *= 0.5

        if not accepted:
            status = "stalled"
            break

        err = _orth_error(f_new)
        if err > 1e-12:
            # Polar correction: minimal-change orthonormalization.
            g = f_new.T @ f_new
            vals, vecs = np.linalg.eigh(g)
            f_new = f_new @ (vecs @ np.diag(1.0 / np.sqrt(vals)) @ vecs.T)
            err = _orth_error(f_new)
            obj_new = p.objective(f_new)
        max_orth = max(max_orth, err)

        f_prev, grad_prev = f, grad
        f, obj = f_new, obj_new
        grad = p.gradient(f)
        steps += 1
        history.append(obj)

    return StiefelResult(
        f=f,
        objective=obj,
        grad_norm=riemannian_grad_norm(p, f),
        iterations=steps,
        status=status,
        max_orth_error=max_orth,
        objective_history=history,
    )
