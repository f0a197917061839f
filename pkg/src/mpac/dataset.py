"""Multi-view dataset loading, validation, normalization and synthesis.

On disk a view is a plain CSV with one sample per row and one feature per
column.  In memory each view is stored transposed, as an (m_i, n) array of
m_i features over n samples, which is the orientation every downstream
computation uses.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    InvalidDataError,
    NotFoundError,
    ParseError,
    ShapeMismatchError,
)

VIEW_FILE_TEMPLATE = "view_{}.csv"
LABELS_FILE = "labels.csv"

# 17 significant digits round-trips any float64 exactly.
CSV_FLOAT_FORMAT = "%.17g"


@dataclass(frozen=True)
class ViewMatrix:
    """One feature representation of the samples.

    Attributes
    ----------
    data : ndarray of shape (m_i, n)
        Dense feature matrix, features by samples.
    view_index : int
        Position of this view within the dataset.
    """

    data: np.ndarray
    view_index: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 2:
            raise InvalidDataError(
                f"view {self.view_index}: expected a 2-d matrix, got ndim={data.ndim}"
            )
        if not np.all(np.isfinite(data)):
            raise InvalidDataError(f"view {self.view_index}: non-finite entries")
        if data.shape[1] < 2 or data.shape[0] < 1:
            raise InvalidDataError(
                f"view {self.view_index}: need at least 1 feature and 2 samples, "
                f"got shape {data.shape}"
            )
        object.__setattr__(self, "data", data)

    @property
    def n_features(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class MultiViewDataset:
    """An ordered collection of views over the same samples.

    Labels, when present, are dense 0-based integers with every class
    index occupied.
    """

    views: tuple[ViewMatrix, ...]
    labels: np.ndarray | None = None
    num_clusters_hint: int | None = None

    def __post_init__(self):
        views = tuple(self.views)
        if len(views) < 1:
            raise InvalidDataError("dataset needs at least one view")
        n = views[0].n_samples
        for v in views:
            if v.n_samples != n:
                raise ShapeMismatchError(
                    f"view {v.view_index} has {v.n_samples} samples, "
                    f"view {views[0].view_index} has {n}"
                )
        labels = self.labels
        if labels is not None:
            labels = np.asarray(labels)
            if labels.shape != (n,):
                raise ShapeMismatchError(
                    f"labels length {labels.shape} does not match n={n}"
                )
            if not np.issubdtype(labels.dtype, np.integer):
                raise InvalidDataError("labels must be integers")
            uniq = np.unique(labels)
            if uniq[0] != 0 or uniq[-1] != len(uniq) - 1:
                raise InvalidDataError(
                    "labels must be dense 0-based (every class index occupied)"
                )
        object.__setattr__(self, "views", views)
        object.__setattr__(self, "labels", labels)

    @property
    def n_samples(self) -> int:
        return self.views[0].n_samples

    @property
    def n_views(self) -> int:
        return len(self.views)

    @property
    def feature_counts(self) -> tuple[int, ...]:
        return tuple(v.n_features for v in self.views)


def _read_csv_matrix(path: Path, skip_header: bool) -> np.ndarray:
    try:
        data = np.loadtxt(
            path,
            delimiter=",",
            skiprows=1 if skip_header else 0,
            ndmin=2,
            dtype=np.float64,
        )
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return data


def load_dataset(dir_path, *, header: bool = False) -> MultiViewDataset:
    """Load `view_0.csv ... view_{v-1}.csv` (and optional `labels.csv`).

    Parameters
    ----------
    dir_path : path-like
        Directory containing the view files.
    header : bool
        Skip a one-line header in each view file.

    Returns
    -------
    MultiViewDataset
        Views in index order; samples aligned by row position across files.

    Raises
    ------
    NotFoundError, ShapeMismatchError, ParseError
    """
    dir_path = Path(dir_path)
    if not dir_path.is_dir():
        raise NotFoundError(f"dataset directory not found: {dir_path}")

    views = []
    k = 0
    while True:
        path = dir_path / VIEW_FILE_TEMPLATE.format(k)
        if not path.is_file():
            break
        raw = _read_csv_matrix(path, header)  # rows = samples on disk
        views.append(ViewMatrix(data=raw.T, view_index=k))
        k += 1
    if not views:
        raise NotFoundError(f"no {VIEW_FILE_TEMPLATE.format(0)} in {dir_path}")

    n = views[0].n_samples
    for v in views:
        if v.n_samples != n:
            raise ShapeMismatchError(
                f"view_{v.view_index}.csv has {v.n_samples} rows, "
                f"view_0.csv has {n}"
            )

    labels = None
    labels_path = dir_path / LABELS_FILE
    if labels_path.is_file():
        try:
            raw_labels = np.loadtxt(labels_path, dtype=np.int64, ndmin=1)
        except ValueError as exc:
            raise ParseError(f"{labels_path}: {exc}") from exc
        if raw_labels.shape != (n,):
            raise ShapeMismatchError(
                f"labels.csv has {raw_labels.shape[0]} lines, expected n={n}"
            )
        # Remap to a dense 0-based range so metrics can index contingency
        # tables directly.
        _, labels = np.unique(raw_labels, return_inverse=True)
        labels = labels.astype(np.int64)

    return MultiViewDataset(views=tuple(views), labels=labels)


def save_dataset(ds: MultiViewDataset, dir_path, *, header: bool = False) -> None:
    """Write a dataset in the ingest format (rows = samples)."""
    dir_path = Path(dir_path)
    try:
        dir_path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise NotFoundError(f"cannot create {dir_path}: {exc}") from exc
    for v in ds.views:
        path = dir_path / VIEW_FILE_TEMPLATE.format(v.view_index)
        head = ",".join(f"f{j}" for j in range(v.n_features)) if header else ""
        try:
            np.savetxt(
                path,
                v.data.T,
                delimiter=",",
                fmt=CSV_FLOAT_FORMAT,
                header=head,
                comments="",
            )
        except OSError as exc:
            raise NotFoundError(f"cannot write {path}: {exc}") from exc
    if ds.labels is not None:
        np.savetxt(dir_path / LABELS_FILE, ds.labels, fmt="%d")


def normalize_views(ds: MultiViewDataset) -> MultiViewDataset:
    """Affinely rescale every feature of every view into [-1, 1].

    Each feature row is mapped so its minimum becomes -1 and its maximum +1.
    A constant feature maps to all zeros rather than a spurious +/-1 spike.
    Labels are untouched.  Idempotent.
    """
    out_views = []
    for v in ds.views:
        x = v.data
        if not np.all(np.isfinite(x)):
            raise InvalidDataError(f"view {v.view_index}: non-finite entries")
        lo = x.min(axis=1, keepdims=True)
        hi = x.max(axis=1, keepdims=True)
        span = hi - lo
        flat = span[:, 0] == 0
        span[flat] = 1.0  # avoid 0/0; constant rows are zeroed below
        scaled = -1.0 + 2.0 * (x - lo) / span
        scaled[flat] = 0.0
        out_views.append(ViewMatrix(data=scaled, view_index=v.view_index))
    return replace(ds, views=tuple(out_views))


def synth_multiview(
    n_per_cluster: int,
    c: int,
    v: int,
    noise: float,
    seed: int,
) -> MultiViewDataset:
    """Generate v views of c isotropic Gaussian blobs.

    All views share the cluster assignment but draw independent cluster
    centers and an independent feature count (2..6) per view.  `noise` is
    the per-coordinate standard deviation around each center; with
    noise=0 every sample of a cluster collapses onto its center.
    Deterministic given `seed`.
    """
    if n_per_cluster < 1:
        raise InvalidDataError("n_per_cluster must be >= 1")
    if c < 2:
        raise InvalidDataError("c must be >= 2")
    if v < 1:
        raise InvalidDataError("v must be >= 1")
    if noise < 0:
        raise InvalidDataError("noise must be >= 0")

    rng = np.random.default_rng(seed)
    n = n_per_cluster * c
    labels = np.repeat(np.arange(c, dtype=np.int64), n_per_cluster)

    views = []
    for k in range(v):
        m = int(rng.integers(2, 7))
        # Centers at scale 2 keep blobs well separated relative to the
        # noise levels used in the test benches.
        centers = 2.0 * rng.normal(size=(c, m))
        points = centers[labels] + noise * rng.normal(size=(n, m))
        views.append(ViewMatrix(data=points.T, view_index=k))

    return MultiViewDataset(
        views=tuple(views), labels=labels, num_clusters_hint=c
    )
