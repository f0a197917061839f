"""Alternating-minimization driver: per-view graph, embedding and rotation
updates, then the consensus indicator and view weights, repeated until the
objective plateaus or the consensus stops changing.

The four-term objective per view is

    ||X - X S||_F^2 + alpha ||S||_F^2 + beta Tr(F^T L F)
        + (gamma / w) ||Y - F R||_F^2

summed over views, with L always built from the clamped symmetrized
affinity so the embedding step and the bookkeeping agree.
"""

from __future__ import annotations

import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from itertools import product

import numpy as np

from . import metrics as metrics_mod
from .alignment import (
    alignment_residual,
    update_indicator,
    update_rotation,
    update_weights,
)
from .dataset import MultiViewDataset
from .errors import InvalidInputError, MpacError
from .graph import (
    ViewFactorization,
    build_factorization,
    connectivity_defect,
    update_s,
)
from .stiefel import StiefelProblem, StiefelSolverConfig, solve_stiefel

THREADS_ENV_VAR = "MPAC_THREADS"


@dataclass
class MpacConfig:
    """Hyperparameters and controls for one solver run."""

    c: int
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0
    max_outer_iters: int = 50
    rel_obj_tol: float = 1e-5
    seed: int = 0
    init: str = "spectral"  # "spectral" | "random"
    stiefel: StiefelSolverConfig = field(default_factory=StiefelSolverConfig)

    def __post_init__(self):
        if self.c < 2:
            raise InvalidInputError(f"need at least 2 clusters, got {self.c}")
        if self.alpha <= 0:
            raise InvalidInputError("alpha must be > 0")
        if self.beta < 0 or self.gamma < 0:
            raise InvalidInputError("beta and gamma must be >= 0")
        if self.init not in ("spectral", "random"):
            raise InvalidInputError(f"unknown init mode: {self.init!r}")
        if self.max_outer_iters < 1:
            raise InvalidInputError("max_outer_iters must be >= 1")


@dataclass
class ViewState:
    """Everything the sweep updates for one view."""

    x: np.ndarray  # (m_i, n)
    fact: ViewFactorization
    graph: SimilarityGraph
    f: np.ndarray  # (n, c)
    r: np.ndarray  # (c, c)


@dataclass
class MpacState:
    views: list[ViewState]
    y: np.ndarray  # (n, c) one-hot
    w: np.ndarray  # (v,)
    objective_trace: list[ObjectiveTerms] = field(default_factory=list)


@dataclass(frozen=True)
class ObjectiveTerms:
    """The four summand totals over views, and their sum."""

    self_expression: float
    regularizer: float
    spectral: float
    alignment: float
    total: float


@dataclass
class MpacResult:
    labels: np.ndarray
    y: np.ndarray
    w: np.ndarray
    objective_trace: list[ObjectiveTerms]
    iterations_run: int
    converged: bool
    connectivity: list[tuple[int, np.ndarray]]
    block_trace: list[dict] | None = None


def _one_hot(assignment: np.ndarray, c: int) -> np.ndarray:
    y = np.zeros((assignment.size, c))
    y[np.arange(assignment.size), assignment] = 1.0
    return y


def _discretize_embedding(f: np.ndarray, max_rounds: int = 30) -> np.ndarray:
    """Quantize an orthonormal embedding into an indicator matrix.

    A plain row argmax of eigenvectors is meaningless because the
    eigenbasis is only determined up to rotation; alternating the
    Procrustes rotation with the argmax re-assignment fixes the basis and
    converges in a handful of rounds.
    """
    y = _one_hot(np.argmax(f, axis=1), f.shape[1])
    ones = np.ones(1)
    for _ in range(max_rounds):
        r = update_rotation(f, y)
        y_new = update_indicator([f], [r], ones)
        if np.array_equal(y_new, y):
            break
        y = y_new
    return y


def initialize(ds: MultiViewDataset, cfg: MpacConfig) -> MpacState:
    """Build factorizations and starting values for every block.

    Rotations start at the identity and weights uniform in both modes.
    Random mode draws a one-hot consensus and orthonormalized Gaussian
    embeddings; spectral mode solves each view's graph without the
    embedding coupling and takes the bottom eigenvectors of its Laplacian,
    with the consensus seeded from the rotation-aligned row argmax of the
    first view's embedding.
    """
    n = ds.n_samples
    v = ds.n_views
    c = cfg.c
    if c > n:
        raise InvalidInputError(f"c={c} exceeds sample count n={n}")

    rng = np.random.default_rng(cfg.seed)
    views = []
    y = None
    for view in ds.views:
        fact = build_factorization(view.data, cfg.alpha)
        if cfg.init == "random":
            f, _ = np.linalg.qr(rng.normal(size=(n, c)))
        else:
            uncoupled = update_s(fact, None, 0.0)
            _, eigvecs = np.linalg.eigh(uncoupled.laplacian)
            f = eigvecs[:, :c]
            if y is None:
                y = _discretize_embedding(f)
        # Start the graph at its best response to the initial embedding so
        # every block is mutually consistent before the first sweep.
        graph = update_s(fact, f, cfg.beta)
        views.append(
            ViewState(x=view.data, fact=fact, graph=graph, f=f, r=np.eye(c))
        )
    if cfg.init == "random":
        y = _one_hot(rng.integers(0, c, size=n), c)

    w = np.full(v, 1.0 / v)
    return MpacState(views=views, y=y, w=w)


def evaluate_objective(state: MpacState, cfg: MpacConfig) -> ObjectiveTerms:
    """Recompute the four summand totals from the current state."""
    se = reg = spec = align = 0.0
    for vs, wi in zip(state.views, state.w):
        s = vs.graph.s
        se += float(np.linalg.norm(vs.x - vs.x @ s) ** 2)
        reg += cfg.alpha * float(np.linalg.norm(s) ** 2)
        spec += cfg.beta * float(np.sum(vs.f * (vs.graph.laplacian @ vs.f)))
        align += (cfg.gamma / wi) * alignment_residual(vs.f, vs.r, state.y) ** 2
    return ObjectiveTerms(
        self_expression=se,
        regularizer=reg,
        spectral=spec,
        alignment=align,
        total=se + reg + spec + align,
    )


def _resolve_threads(threads: int | None) -> int:
    if threads is None:
        try:
            threads = int(os.environ.get(THREADS_ENV_VAR, "1"))
        except ValueError:
            threads = 1
    return max(1, threads)


def _update_view(vs: ViewState, y: np.ndarray, wi: float, cfg: MpacConfig) -> None:
    """One Gauss-Seidel pass over a view: coefficients, embedding, rotation."""
    vs.graph = update_s(vs.fact, vs.f, cfg.beta)
    problem = StiefelProblem(
        m=cfg.beta * vs.graph.laplacian,
        b=(cfg.gamma / wi) * (y @ vs.r.T),
    )
    vs.f = solve_stiefel(problem, vs.f, cfg.stiefel).f
    vs.r = update_rotation(vs.f, y)


def run(
    ds: MultiViewDataset,
    cfg: MpacConfig,
    *,
    threads: int | None = None,
    trace_file=None,
    sweep_callback=None,
    track_blocks: bool = False,
) -> MpacResult:
    """Run the full alternating scheme on a (normalized) dataset.

    Stops when the relative objective decrease over one sweep falls below
    cfg.rel_obj_tol, the consensus is unchanged for 2 consecutive sweeps,
    or cfg.max_outer_iters is reached.  The returned labels are the row
    argmax of the final discrete consensus; no continuous relaxation or
    post-hoc k-means is involved.

    `threads` caps intra-sweep per-view parallelism (defaults to the
    MPAC_THREADS environment variable); results are identical at any
    thread count.  `trace_file` streams one JSON line of diagnostics per
    sweep; `sweep_callback(state, sweep)` runs after every sweep;
    `track_blocks` additionally records the objective after every block
    update (serial execution).
    """
    threads = _resolve_threads(threads)
    state = initialize(ds, cfg)
    v = ds.n_views

    state.objective_trace.append(evaluate_objective(state, cfg))
    block_trace: list[dict] | None = [] if track_blocks else None

    def record_block(sweep: int, block: str, view: int | None) -> None:
        if block_trace is not None:
            terms = evaluate_objective(state, cfg)
            block_trace.append(
                {"sweep": sweep, "block": block, "view": view, "total": terms.total}
            )

    trace_fh = open(trace_file, "w") if trace_file is not None else None
    converged = False
    y_stable_count = 0
    sweep = 0
    try:
        for sweep in range(1, cfg.max_outer_iters + 1):
            if track_blocks or threads == 1 or v == 1:
                for i, vs in enumerate(state.views):
                    try:
                        vs.graph = update_s(vs.fact, vs.f, cfg.beta)
                        record_block(sweep, "s", i)
                        problem = StiefelProblem(
                            m=cfg.beta * vs.graph.laplacian,
                            b=(cfg.gamma / state.w[i]) * (state.y @ vs.r.T),
                        )
                        vs.f = solve_stiefel(problem, vs.f, cfg.stiefel).f
                        record_block(sweep, "f", i)
                        vs.r = update_rotation(vs.f, state.y)
                        record_block(sweep, "r", i)
                    except MpacError as exc:
                        raise type(exc)(f"sweep {sweep}, view {i}: {exc}") from exc
            else:
                with ThreadPoolExecutor(max_workers=min(threads, v)) as pool:
                    futures = [
                        pool.submit(_update_view, vs, state.y, state.w[i], cfg)
                        for i, vs in enumerate(state.views)
                    ]
                    for i, fut in enumerate(futures):
                        try:
                            fut.result()
                        except MpacError as exc:
                            raise type(exc)(
                                f"sweep {sweep}, view {i}: {exc}"
                            ) from exc

            y_new = update_indicator(
                [vs.f for vs in state.views],
                [vs.r for vs in state.views],
                state.w,
            )
            y_changed = not np.array_equal(y_new, state.y)
            state.y = y_new
            record_block(sweep, "y", None)

            qs = np.array(
                [alignment_residual(vs.f, vs.r, state.y) for vs in state.views]
            )
            state.w = update_weights(qs)
            record_block(sweep, "w", None)

            terms = evaluate_objective(state, cfg)
            prev = state.objective_trace[-1]
            state.objective_trace.append(terms)

            if trace_fh is not None:
                line = {
                    "sweep": sweep,
                    **asdict(terms),
                    "y_changed": y_changed,
                    "weights": state.w.tolist(),
                }
                trace_fh.write(json.dumps(line) + "\n")
            if sweep_callback is not None:
                sweep_callback(state, sweep)

            y_stable_count = 0 if y_changed else y_stable_count + 1
            rel_decrease = (prev.total - terms.total) / max(abs(prev.total), 1e-12)
            if abs(rel_decrease) < cfg.rel_obj_tol or y_stable_count >= 2:
                converged = True
                break
    finally:
        if trace_fh is not None:
            trace_fh.close()

    labels = np.argmax(state.y, axis=1).astype(np.int64)
    connectivity = [
        connectivity_defect(vs.graph.laplacian, cfg.c) for vs in state.views
    ]
    return MpacResult(
        labels=labels,
        y=state.y,
        w=state.w,
        objective_trace=state.objective_trace,
        iterations_run=sweep,
        converged=converged,
        connectivity=connectivity,
        block_trace=block_trace,
    )


def grid_sweep(
    ds: MultiViewDataset,
    base_cfg: MpacConfig,
    alpha_list,
    beta_list,
    gamma_list,
) -> list[dict]:
    """Run the solver over the cartesian grid of hyperparameters.

    Each cell gets its own seed derived from the base seed, so cells are
    independent but the whole sweep is reproducible.  A failing cell is
    recorded with its error and the sweep continues.
    """
    if not alpha_list or not beta_list or not gamma_list:
        raise InvalidInputError("grid lists must be non-empty")
    rows = []
    for idx, (a, b, g) in enumerate(product(alpha_list, beta_list, gamma_list)):
        row = {
            "alpha": a,
            "beta": b,
            "gamma": g,
            "objective": None,
            "iterations": None,
            "status": "ok",
            "metrics": None,
        }
        try:
            cfg = replace(
                base_cfg, alpha=a, beta=b, gamma=g, seed=base_cfg.seed + idx
            )
            result = run(ds, cfg)
            row["objective"] = result.objective_trace[-1].total
            row["iterations"] = result.iterations_run
            if ds.labels is not None:
                row["metrics"] = metrics_mod.score(ds.labels, result.labels)
        except MpacError as exc:
            row["status"] = f"error: {exc}"
        rows.append(row)
    return rows
