"""Compare the numba and pure-numpy kernel backends on an SBM 2-core.

Times the three hot kernels (BCD sweep, edge objective, Bethe Hessian
matvec) under both backends on the same inputs and prints per-call timings
and the speedup. Run as a script:

    python3 benchmarks/backend_bench.py --n 20000 --c 3 --snr 1.2 --m 16
"""

import argparse
import time

import numpy as np

from sdpclust.backend import get_numba_kernels, numpy_kernels
from sdpclust.graphs import params_from_snr, sbm_generate, two_core
from sdpclust.solver import init_config


def time_kernel(fn, args, repeats):
    fn(*args)  # warm up (JIT compile for numba; cache touch for numpy)
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - t0) / repeats


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--c", type=float, default=3.0)
    ap.add_argument("--snr", type=float, default=1.2)
    ap.add_argument("--m", type=int, default=16)
    ap.add_argument("--sweeps", type=int, default=10, help="repeats per kernel")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    params = params_from_snr(args.n, args.c, args.snr)
    g, _ = sbm_generate(params, seed=np.random.SeedSequence([args.seed, 1, 0]))
    core, _ = two_core(g)
    indptr, indices, degrees = core.csr
    print(f"graph: n={args.n} -> core n={core.n}, edges={core.n_edges}, m={args.m}")

    backends = {"numpy": numpy_kernels}
    try:
        backends["numba"] = get_numba_kernels()
    except ImportError:
        print("numba not installed; timing numpy only")

    edge_u = core.edges[:, 0].astype(np.int64)
    edge_v = core.edges[:, 1].astype(np.int64)
    deg64 = degrees.astype(np.float64)
    r = float(np.sqrt(2.0 * core.n_edges / core.n))
    v = np.random.default_rng(args.seed).standard_normal(core.n)

    results = {}
    for name, ks in backends.items():
        cfg = init_config(core.n, args.m, seed=args.seed)
        order = np.random.default_rng(args.seed).permutation(core.n).astype(np.int64)
        spins, mag = cfg.vectors.copy(), cfg.magnetization.copy()
        results[name] = {
            "bcd_sweep": time_kernel(
                ks.bcd_sweep, (indptr, indices, spins, mag, order), args.sweeps
            ),
            "edge_objective": time_kernel(
                ks.edge_objective, (edge_u, edge_v, spins), args.sweeps
            ),
            "bh_matvec": time_kernel(
                ks.bh_matvec, (indptr, indices, deg64, r, v), args.sweeps
            ),
        }

    for kernel in ("bcd_sweep", "edge_objective", "bh_matvec"):
        line = f"{kernel:16s}"
        for name in results:
            line += f"  {name}: {results[name][kernel] * 1e3:9.3f} ms"
        if len(results) == 2:
            line += f"  speedup: {results['numpy'][kernel] / results['numba'][kernel]:6.1f}x"
        print(line)


if __name__ == "__main__":
    main()
