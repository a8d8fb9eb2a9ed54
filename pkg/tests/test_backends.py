"""The numba kernels and the pure-numpy fallbacks must agree."""

import numpy as np
import pytest

from sdpclust.backend import numpy_kernels, get_numba_kernels
from sdpclust import init_config

from conftest import random_graph

numba_kernels = get_numba_kernels()

KERNEL_SETS = [numpy_kernels, numba_kernels]


@pytest.fixture
def setup():
    rng = np.random.default_rng(0)
    g = random_graph(120, 0.05, rng)
    cfg = init_config(g.n, 8, seed=1)
    order = rng.permutation(g.n).astype(np.int64)
    return g, cfg, order


def test_sweep_agreement(setup):
    g, cfg, order = setup
    indptr, indices, _ = g.csr
    results = []
    for ks in KERNEL_SETS:
        x = cfg.vectors.copy()
        m = cfg.magnetization.copy()
        d = ks.bcd_sweep(indptr, indices, x, m, order)
        results.append((d, x, m))
    (d0, x0, m0), (d1, x1, m1) = results
    assert d0 == pytest.approx(d1, rel=1e-12)
    assert np.abs(x0 - x1).max() < 1e-12
    assert np.abs(m0 - m1).max() < 1e-10


def test_objective_agreement(setup):
    g, cfg, _ = setup
    vals = [
        ks.edge_objective(g.edges[:, 0], g.edges[:, 1], cfg.vectors)
        for ks in KERNEL_SETS
    ]
    assert vals[0] == pytest.approx(vals[1], rel=1e-12)


def test_bh_matvec_agreement(setup):
    g, _, _ = setup
    indptr, indices, deg = g.csr
    v = np.random.default_rng(3).standard_normal(g.n)
    outs = [
        ks.bh_matvec(indptr, indices, deg.astype(float), 1.6, v)
        for ks in KERNEL_SETS
    ]
    assert np.abs(outs[0] - outs[1]).max() < 1e-12


def test_env_selection(monkeypatch):
    import importlib
    import sdpclust.backend as backend

    monkeypatch.setenv(backend.ENV_VAR, "numpy")
    mod = importlib.reload(backend)
    assert mod.BACKEND == "numpy"
    monkeypatch.delenv(backend.ENV_VAR)
    importlib.reload(backend)
