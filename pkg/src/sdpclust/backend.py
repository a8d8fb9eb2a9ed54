"""Kernel backend selection: numba-jitted hot loops with a pure-numpy fallback.

The backend is chosen once at import from the environment variable
``SDPCLUST_BACKEND``:

* ``auto`` (default): use numba if it imports, numpy otherwise
* ``numba``: require numba, fail loudly if missing
* ``numpy``: force the pure-numpy path (useful for debugging and for the
  backend benchmark in ``benchmarks/``)

Both implementations of every kernel are importable (``numpy_kernels`` always,
``numba_kernels`` lazily) so tests and the benchmark can compare them directly
regardless of the environment flag.
"""

from __future__ import annotations

import os

import numpy as np

ENV_VAR = "SDPCLUST_BACKEND"

_ZERO_FIELD_TOL = 1e-12


# ---------------------------------------------------------------------------
# pure-numpy reference kernels
# ---------------------------------------------------------------------------

def _np_bcd_sweep(indptr, indices, spins, mag, order):
    """One in-place Gauss-Seidel sweep; returns the largest spin change.

    The local field is the neighbor sum minus the magnetization of all OTHER
    spins (self term excluded): this makes constrained maximizers genuine
    fixed points, which the fully self-inclusive sum does not.
    """
    dmax = 0.0
    for i in order:
        nbrs = indices[indptr[i]:indptr[i + 1]]
        field = spins[nbrs].sum(axis=0) - mag + spins[i]
        norm = np.sqrt(field @ field)
        if norm < _ZERO_FIELD_TOL:
            continue  # keep the previous spin at a zero local field
        field /= norm
        diff = field - spins[i]
        d = np.sqrt(diff @ diff)
        if d > dmax:
            dmax = d
        mag += diff
        spins[i] = field
    return dmax


def _np_edge_objective(edge_u, edge_v, spins):
    """Sum of spin inner products over the edge list."""
    if edge_u.shape[0] == 0:
        return 0.0
    return float(np.einsum("ij,ij->", spins[edge_u], spins[edge_v]))


def _np_bh_matvec(indptr, indices, degrees, r, v):
    """Apply H(r) = (r^2-1) I - r A + D without forming the matrix."""
    av = np.zeros_like(v)
    for i in range(indptr.shape[0] - 1):
        nbrs = indices[indptr[i]:indptr[i + 1]]
        if nbrs.shape[0]:
            av[i] = v[nbrs].sum()
    return (r * r - 1.0 + degrees) * v - r * av


class _NumpyKernels:
    name = "numpy"
    bcd_sweep = staticmethod(_np_bcd_sweep)
    edge_objective = staticmethod(_np_edge_objective)
    bh_matvec = staticmethod(_np_bh_matvec)


numpy_kernels = _NumpyKernels()


# ---------------------------------------------------------------------------
# numba kernels (lazy: importing numba costs ~1s and is optional)
# ---------------------------------------------------------------------------

_numba_kernels = None


def get_numba_kernels():
    """Build (once) and return the numba kernel set."""
    global _numba_kernels
    if _numba_kernels is not None:
        return _numba_kernels

    from numba import njit

    @njit(cache=True, nogil=True)
    def bcd_sweep(indptr, indices, spins, mag, order):
        m = spins.shape[1]
        field = np.empty(m)
        dmax = 0.0
        for t in range(order.shape[0]):
            i = order[t]
            for k in range(m):
                field[k] = spins[i, k] - mag[k]
            for p in range(indptr[i], indptr[i + 1]):
                j = indices[p]
                for k in range(m):
                    field[k] += spins[j, k]
            norm = 0.0
            for k in range(m):
                norm += field[k] * field[k]
            norm = np.sqrt(norm)
            if norm < _ZERO_FIELD_TOL:
                continue
            d2 = 0.0
            for k in range(m):
                new = field[k] / norm
                diff = new - spins[i, k]
                d2 += diff * diff
                mag[k] += diff
                spins[i, k] = new
            d = np.sqrt(d2)
            if d > dmax:
                dmax = d
        return dmax

    @njit(cache=True, nogil=True)
    def edge_objective(edge_u, edge_v, spins):
        m = spins.shape[1]
        total = 0.0
        for e in range(edge_u.shape[0]):
            i = edge_u[e]
            j = edge_v[e]
            for k in range(m):
                total += spins[i, k] * spins[j, k]
        return total

    @njit(cache=True, nogil=True)
    def bh_matvec(indptr, indices, degrees, r, v):
        n = v.shape[0]
        out = np.empty_like(v)
        shift = r * r - 1.0
        for i in range(n):
            s = 0.0
            for p in range(indptr[i], indptr[i + 1]):
                s += v[indices[p]]
            out[i] = (shift + degrees[i]) * v[i] - r * s
        return out

    class _NumbaKernels:
        name = "numba"

    _NumbaKernels.bcd_sweep = staticmethod(bcd_sweep)
    _NumbaKernels.edge_objective = staticmethod(edge_objective)
    _NumbaKernels.bh_matvec = staticmethod(bh_matvec)
    _numba_kernels = _NumbaKernels()
    return _numba_kernels


def _select():
    mode = os.environ.get(ENV_VAR, "auto").strip().lower()
    if mode == "numpy":
        return numpy_kernels
    if mode == "numba":
        return get_numba_kernels()
    if mode in ("", "auto"):
        try:
            return get_numba_kernels()
        except ImportError:
            return numpy_kernels
    raise ValueError(
        f"{ENV_VAR} must be one of auto/numba/numpy, got {mode!r}"
    )


kernels = _select()
BACKEND = kernels.name
