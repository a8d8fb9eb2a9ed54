"""Rank-m relaxation solver: greedy block-coordinate descent over unit spins
with an adaptive zero-magnetization field, plus the projection back to +-1
labels through the principal component of the spin covariance."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .backend import kernels

MAG_REFRESH_EVERY = 64  # full magnetization recomputation interval (sweeps)
DEGENERACY_GAP = 1e-10


@dataclass
class SpinConfig:
    """n unit vectors with m components each, plus the running column sum."""

    vectors: np.ndarray
    magnetization: np.ndarray = None

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if self.magnetization is None:
            self.refresh_magnetization()

    @property
    def n(self):
        return self.vectors.shape[0]

    @property
    def m(self):
        return self.vectors.shape[1]

    def refresh_magnetization(self):
        self.magnetization = self.vectors.sum(axis=0)

    def copy(self):
        return SpinConfig(self.vectors.copy(), self.magnetization.copy())


@dataclass
class SolverResult:
    config: SpinConfig
    t_conv: int
    converged: bool
    objective_trace: np.ndarray
    delta_trace: np.ndarray
    mag_trace: np.ndarray
    checkpoint_labels: dict = field(default_factory=dict)

    @property
    def final_magnetization_norm(self):
        """||M|| / n at the final sweep."""
        return float(self.mag_trace[-1]) if self.mag_trace.size else 0.0


def init_config(n, m, seed):
    """Spins drawn independently uniform on the unit sphere in m dimensions."""
    if n < 1 or m < 1:
        raise ValueError("n and m must be at least 1")
    rng = np.random.default_rng(seed)
    return _init_from_rng(n, m, rng)


def _init_from_rng(n, m, rng):
    vecs = rng.standard_normal((n, m))
    norms = np.linalg.norm(vecs, axis=1)
    while np.any(norms < 1e-12):  # essentially impossible, but stay exact
        bad = norms < 1e-12
        vecs[bad] = rng.standard_normal((int(bad.sum()), m))
        norms = np.linalg.norm(vecs, axis=1)
    vecs /= norms[:, None]
    return SpinConfig(vecs)


def bcd_sweep(config, g, rng):
    """One full pass over all spins in a fresh random order.

    Each spin is replaced, in place, by its normalized local field
    (neighbor sum minus the magnetization of the other spins); the magnetization is updated
    incrementally. Returns the largest single-spin change of the sweep.
    """
    if config.n != g.n:
        raise ValueError("config size does not match graph")
    indptr, indices, _ = g.csr
    order = rng.permutation(config.n).astype(np.int64)
    return float(
        kernels.bcd_sweep(indptr, indices, config.vectors, config.magnetization, order)
    )


def objective(config, g):
    """Sum over edges of the spin inner products."""
    if config.n != g.n:
        raise ValueError("config size does not match graph")
    return float(kernels.edge_objective(g.edges[:, 0], g.edges[:, 1], config.vectors))


def run_solver(g, m, epsilon=1e-4, max_sweeps=10_000, seed=0, checkpoints=()):
    """Iterate sweeps until the largest spin change drops below epsilon.

    ``checkpoints`` is an iterable of sweep counts at which the current +-1
    projection is snapshotted into ``result.checkpoint_labels``. The triple
    (graph, m, epsilon, seed) fully determines the result.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    rng = np.random.default_rng(seed)
    config = _init_from_rng(g.n, m, rng)
    checkpoints = set(int(t) for t in checkpoints)
    obj_trace, delta_trace, mag_trace = [], [], []
    labels_at = {}
    converged = False
    t = 0
    for t in range(1, max_sweeps + 1):
        dmax = bcd_sweep(config, g, rng)
        if t % MAG_REFRESH_EVERY == 0:
            config.refresh_magnetization()
        obj_trace.append(objective(config, g))
        delta_trace.append(dmax)
        mag_trace.append(float(np.linalg.norm(config.magnetization)) / g.n)
        if t in checkpoints:
            labels_at[t] = project_to_labels(config)
        if dmax < epsilon:
            converged = True
            break
    return SolverResult(
        config=config,
        t_conv=t,
        converged=converged,
        objective_trace=np.array(obj_trace),
        delta_trace=np.array(delta_trace),
        mag_trace=np.array(mag_trace),
        checkpoint_labels=labels_at,
    )


def component_covariance(config):
    """m x m correlation of the spin components: Sigma = X^T X / n."""
    x = config.vectors
    sigma = x.T @ x / x.shape[0]
    return 0.5 * (sigma + sigma.T)  # exact symmetry against roundoff


def principal_component(sigma, with_info=False):
    """Unit eigenvector of the largest eigenvalue of a symmetric matrix.

    Sign convention: first component exceeding 1e-12 in magnitude is made
    positive. With ``with_info=True`` also returns whether the top eigenvalue
    is degenerate (gap below 1e-10), which signals "no preferred direction".
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1] or sigma.shape[0] == 0:
        raise ValueError("sigma must be a non-empty square matrix")
    if not np.allclose(sigma, sigma.T, atol=1e-10):
        raise ValueError("sigma must be symmetric")
    vals, vecs = np.linalg.eigh(sigma)
    v = vecs[:, -1].copy()
    nz = np.flatnonzero(np.abs(v) > 1e-12)
    if nz.size and v[nz[0]] < 0:
        v = -v
    if not with_info:
        return v
    degenerate = sigma.shape[0] > 1 and (vals[-1] - vals[-2]) < DEGENERACY_GAP
    return v, degenerate


def project_to_labels(config):
    """Rank-m estimator: sign of each spin's projection on the principal
    component of the covariance; sign(0) = +1."""
    v1 = principal_component(component_covariance(config))
    proj = config.vectors @ v1
    return np.where(proj >= 0, 1, -1).astype(np.int8)
