import numpy as np
import pytest

from mpac import normalize_views, synth_multiview


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_synth(seed=0, n_per_cluster=50, c=3, v=2, noise=0.05, normalize=True):
    ds = synth_multiview(n_per_cluster, c, v, noise, seed=seed)
    return normalize_views(ds) if normalize else ds


def random_orthonormal(rng, n, c):
    q, _ = np.linalg.qr(rng.normal(size=(n, c)))
    return q
