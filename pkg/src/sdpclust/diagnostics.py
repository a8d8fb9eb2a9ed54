"""Scoring against the planted partition, inter-clone distances, and the
rotational-symmetry breaking needed to make distance histograms meaningful."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .solver import SpinConfig, component_covariance, principal_component

HISTOGRAM_BINS = 50


def overlap(estimate, planted):
    """Q = |<estimate, planted>| / n, in [0, 1]."""
    a = np.asarray(estimate, dtype=np.float64)
    b = np.asarray(planted, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("label vectors have different lengths")
    return float(abs(a @ b) / a.shape[0])


def clone_distance(a, b):
    """d = (1 - mean spin inner product) / 2, in [0, 1]."""
    if a.vectors.shape != b.vectors.shape:
        raise ValueError("configurations have different shapes")
    s = np.einsum("ij,ij->", a.vectors, b.vectors) / a.n
    return float(0.5 * (1.0 - s))


def align_rotation(config):
    """Rotate spins so the covariance principal component lands on +e1.

    Uses a single Householder reflection (orthogonal, objective-preserving).
    Returns (aligned SpinConfig, degenerate flag); a degenerate top eigenvalue
    makes the alignment unreliable.
    """
    v1, degenerate = principal_component(component_covariance(config), with_info=True)
    m = config.m
    e1 = np.zeros(m)
    e1[0] = 1.0
    u = v1 - e1
    norm = np.linalg.norm(u)
    if norm < 1e-12:
        return config.copy(), degenerate
    u /= norm
    # x -> H x with H = I - 2 u u^T; rows transform as X @ H (H symmetric)
    reflected = config.vectors - 2.0 * np.outer(config.vectors @ u, u)
    return SpinConfig(reflected), degenerate


@dataclass
class DistanceHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    aligned: bool

    @property
    def n_pairs(self):
        return int(self.counts.sum())

    def to_csv_rows(self):
        flag = "true" if self.aligned else "false"
        return [
            f"{self.bin_edges[i]:.6f},{self.bin_edges[i + 1]:.6f},{self.counts[i]},{flag}"
            for i in range(self.counts.shape[0])
        ]


def _histogram(distances, aligned):
    counts, edges = np.histogram(
        np.clip(distances, 0.0, 1.0), bins=HISTOGRAM_BINS, range=(0.0, 1.0)
    )
    return DistanceHistogram(bin_edges=edges, counts=counts, aligned=aligned)


def raw_pairwise_distances(configs):
    """Distances between all clone pairs with no symmetry breaking."""
    k = len(configs)
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            out.append(clone_distance(configs[i], configs[j]))
    return np.array(out), _histogram(out, aligned=False)


def _procrustes_distance(a, b):
    """Distance under the best orthogonal map applied to b: uses the nuclear
    norm of A^T B, d = (1 - sum of singular values / n) / 2."""
    cross = a.vectors.T @ b.vectors
    sv = np.linalg.svd(cross, compute_uv=False)
    return float(0.5 * (1.0 - sv.sum() / a.n))


def aligned_pairwise_distances(configs, procrustes=False):
    """Distances after breaking the rotational symmetry.

    Each clone is first rotated so its covariance principal component is +e1;
    per pair, the remaining sign ambiguity of the principal axis is resolved
    by flipping the second clone's first coordinate whenever that lowers a
    distance above 1/2. With ``procrustes=True`` the full orthogonal map
    minimizing each pairwise distance is used instead (sharper histograms;
    the residual freedom orthogonal to e1 is otherwise left untouched).

    Returns (distances, histogram, per-clone degeneracy flags).
    """
    if len(configs) < 2:
        raise ValueError("need at least 2 clones")
    aligned, degenerate = [], []
    for c in configs:
        ac, dg = align_rotation(c)
        aligned.append(ac)
        degenerate.append(dg)
    k = len(aligned)
    out = []
    for i in range(k):
        for j in range(i + 1, k):
            if procrustes:
                out.append(_procrustes_distance(aligned[i], aligned[j]))
                continue
            a, b = aligned[i].vectors, aligned[j].vectors
            s = np.einsum("ij,ij->", a, b)
            s0 = a[:, 0] @ b[:, 0]
            d = 0.5 * (1.0 - s / a.shape[0])
            if d > 0.5:
                d = 0.5 * (1.0 - (s - 2.0 * s0) / a.shape[0])
            out.append(float(d))
    dist = np.array(out)
    return dist, _histogram(dist, aligned=True), np.array(degenerate, dtype=bool)
