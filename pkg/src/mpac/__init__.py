"""Multi-view clustering by aligning per-view spectral partitions to a
consensus indicator matrix, with joint graph learning and view weighting."""

from .dataset import (
    MultiViewDataset,
    ViewMatrix,
    load_dataset,
    normalize_views,
    save_dataset,
    synth_multiview,
)
from .metrics import MetricReport, ari, contingency, nmi, pairwise_metrics, score
from .solver import (
    MpacConfig,
    MpacResult,
    MpacState,
    evaluate_objective,
    grid_sweep,
    initialize,
    run,
)
from .stiefel import StiefelProblem, StiefelSolverConfig, solve_stiefel

__version__ = "0.1.0"

__all__ = [
    "MultiViewDataset",
    "ViewMatrix",
    "load_dataset",
    "normalize_views",
    "save_dataset",
    "synth_multiview",
    "MetricReport",
    "contingency",
    "pairwise_metrics",
    "nmi",
    "ari",
    "score",
    "MpacConfig",
    "MpacResult",
    "MpacState",
    "initialize",
    "evaluate_objective",
    "run",
    "grid_sweep",
    "StiefelProblem",
    "StiefelSolverConfig",
    "solve_stiefel",
    "__version__",
]
