"""Seeded experiment orchestration: graph preparation, clone ensembles,
parameter sweeps and wall-clock benchmarks, with CSV + JSON output."""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from . import diagnostics, graphs, solver, spectral
from .backend import BACKEND, numpy_kernels, get_numba_kernels


class ConfigError(ValueError):
    """Invalid experiment configuration; message names the offending field."""


class NonConvergenceError(RuntimeError):
    """A solver run hit max_sweeps under --strict."""


# child-seed derivation: SeedSequence over (master, role, index) is
# scheduling-independent and collision-free across roles
ROLE_GRAPH = 1
ROLE_PERTURB = 2
ROLE_CLONE = 3
ROLE_SPECTRAL = 4


def child_seed(master, role, index=0):
    return np.random.SeedSequence([int(master), int(role), int(index)])


def default_checkpoints(max_sweeps):
    """Powers of two up to max_sweeps."""
    out = []
    t = 1
    while t <= max_sweeps:
        out.append(t)
        t *= 2
    return out


KINDS = ("generate", "solve", "spectral", "clones", "sweep", "bench")


@dataclass
class ExperimentConfig:
    kind: str
    n: int = 10_000
    c: float = 3.0
    snr: float = None
    c_in: float = None
    c_out: float = None
    p: float = 0.0
    m: int = 16
    epsilon: float = 1e-4
    max_sweeps: int = 10_000
    clones: int = 100
    seed: int = 0
    checkpoints: list = None
    out: str = None
    fmt: str = "csv"
    graph_path: str = None
    extend_trees: bool = False
    procrustes: bool = False
    strict: bool = False
    param: str = None
    values: list = None
    compare_backends: bool = False

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"kind: unknown experiment kind {self.kind!r}")
        if self.graph_path is None:
            if (self.c_in is None) != (self.c_out is None):
                raise ConfigError("c_in/c_out: must be given together")
            if self.c_in is None and self.snr is None:
                raise ConfigError("snr: required unless c_in/c_out or a graph file is given")
            if self.n <= 0 or self.n % 2:
                raise ConfigError("n: must be positive and even")
            if self.c_in is None and self.c <= 0:
                raise ConfigError("c: mean degree must be positive")
        if not 0.0 <= self.p <= 1.0:
            raise ConfigError("p: clique probability must lie in [0, 1]")
        if self.m < 1:
            raise ConfigError("m: rank must be at least 1")
        if self.epsilon <= 0:
            raise ConfigError("epsilon: must be positive")
        if self.max_sweeps < 1:
            raise ConfigError("max_sweeps: must be at least 1")
        if self.clones < 1:
            raise ConfigError("clones: must be at least 1")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format: must be csv or json")
        if self.kind == "sweep":
            if self.param not in ("lambda", "m"):
                raise ConfigError("param: sweep parameter must be 'lambda' or 'm'")
            if self.values is None:
                raise ConfigError("values: sweep requires a value grid")
        return self

    def sbm_params(self):
        if self.c_in is not None:
            return graphs.SbmParams(n=self.n, c_in=self.c_in, c_out=self.c_out)
        return graphs.params_from_snr(self.n, self.c, self.snr)

    def resolved_checkpoints(self):
        if self.checkpoints is not None:
            return sorted(set(int(t) for t in self.checkpoints))
        return default_checkpoints(self.max_sweeps)

    def public_dict(self):
        d = asdict(self)
        d["backend"] = BACKEND
        return d


@dataclass
class PreparedGraph:
    raw: graphs.Graph
    planted: graphs.PlantedPartition  # None when loaded without labels
    core: graphs.Graph
    forest: graphs.AttachmentForest
    core_planted: np.ndarray          # +-1 labels on core ids, or None
    timings: dict = field(default_factory=dict)


def prepare_graph(config):
    """Generate (or load) the raw graph, reduce to the 2-core, and apply the
    neighborhood-clique perturbation on the core when p > 0."""
    timings = {}
    t0 = time.perf_counter()
    if config.graph_path is not None:
        raw, planted = graphs.load_edge_list(config.graph_path)
    else:
        raw, planted = graphs.sbm_generate(
            config.sbm_params(), child_seed(config.seed, ROLE_GRAPH)
        )
    timings["generate_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    core, forest = graphs.two_core(raw)
    timings["two_core_s"] = time.perf_counter() - t0

    if config.p > 0.0:
        t0 = time.perf_counter()
        core = graphs.add_neighborhood_cliques(
            core, config.p, child_seed(config.seed, ROLE_PERTURB)
        )
        timings["perturb_s"] = time.perf_counter() - t0

    core_planted = None
    if planted is not None:
        core_planted = planted.labels[forest.core_vertices]
    return PreparedGraph(
        raw=raw,
        planted=planted,
        core=core,
        forest=forest,
        core_planted=core_planted,
        timings=timings,
    )


def _clone_task(core, config, clone_id):
    seed = child_seed(config.seed, ROLE_CLONE, clone_id)
    return solver.run_solver(
        core,
        config.m,
        epsilon=config.epsilon,
        max_sweeps=config.max_sweeps,
        seed=seed,
        checkpoints=config.resolved_checkpoints(),
    )


def run_clone_ensemble(core, config):
    """Independent solver runs; per-clone rng streams depend only on
    (master seed, clone id), so threading never changes results."""
    results = [None] * config.clones
    workers = min(config.clones, os.cpu_count() or 1)
    if workers > 1 and BACKEND == "numba":
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_clone_task, core, config, i): i
                for i in range(config.clones)
            }
            for fut, i in futures.items():
                results[i] = fut.result()
    else:
        for i in range(config.clones):
            results[i] = _clone_task(core, config, i)
    return results


def _score(labels, prep, config):
    """Overlap against the planted partition, on the core or the full graph."""
    if prep.core_planted is None:
        return None
    if config.extend_trees:
        full = graphs.extend_labels_to_trees(labels, prep.forest)
        return diagnostics.overlap(full, prep.planted.labels)
    return diagnostics.overlap(labels, prep.core_planted)


@dataclass
class RunRecord:
    config: dict
    graph_info: dict
    clone_rows: list
    checkpoints: list
    spectral_info: dict = None
    raw_histogram: object = None
    aligned_histogram: object = None
    timings: dict = field(default_factory=dict)

    def clone_csv(self):
        cols = ["clone", "seed", "t_conv", "converged", "objective", "mag_norm"]
        cols += [f"overlap_t{t}" for t in self.checkpoints]
        cols += ["overlap_final"]
        lines = [",".join(cols)]
        for row in self.clone_rows:
            lines.append(",".join(_csv_cell(row[c]) for c in cols))
        return "\n".join(lines) + "\n"

    def metadata(self, include_timings=True):
        meta = {
            "config": self.config,
            "graph": self.graph_info,
            "spectral": self.spectral_info,
        }
        if include_timings:
            meta["timings"] = self.timings
        return meta

    def write(self, out_prefix):
        with open(out_prefix + ".csv", "w") as fh:
            fh.write(self.clone_csv())
        with open(out_prefix + ".json", "w") as fh:
            json.dump(self.metadata(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if self.raw_histogram is not None:
            with open(out_prefix + "_hist.csv", "w") as fh:
                fh.write("bin_lo,bin_hi,count,aligned\n")
                for hist in (self.raw_histogram, self.aligned_histogram):
                    fh.write("\n".join(hist.to_csv_rows()) + "\n")


def _csv_cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def run_clones(config):
    """Full clone-ensemble experiment: prepare graph, run clones in parallel,
    score every checkpoint, build raw and aligned distance histograms."""
    config.validate()
    prep = prepare_graph(config)
    checkpoints = config.resolved_checkpoints()

    t0 = time.perf_counter()
    results = run_clone_ensemble(prep.core, config)
    solve_s = time.perf_counter() - t0

    rows = []
    for i, res in enumerate(results):
        if config.strict and not res.converged:
            raise NonConvergenceError(
                f"clone {i} did not converge within {config.max_sweeps} sweeps"
            )
        row = {
            "clone": i,
            "seed": f"{config.seed}:{ROLE_CLONE}:{i}",
            "t_conv": res.t_conv,
            "converged": res.converged,
            "objective": float(res.objective_trace[-1]),
            "mag_norm": res.final_magnetization_norm,
            "overlap_final": _score(solver.project_to_labels(res.config), prep, config),
        }
        for t in checkpoints:
            labels = res.checkpoint_labels.get(t)
            row[f"overlap_t{t}"] = None if labels is None else _score(labels, prep, config)
        rows.append(row)

    spectral_info = None
    if prep.core.n and 2.0 * prep.core.n_edges / prep.core.n > 1.0:
        t0 = time.perf_counter()
        sp_labels, sp_diag = spectral.bethe_hessian_estimate(
            prep.core, seed=int(child_seed(config.seed, ROLE_SPECTRAL).generate_state(1)[0])
        )
        spectral_info = {
            "overlap": _score(sp_labels, prep, config),
            "second_eigenvalue": sp_diag.second_eigenvalue,
            "localization": sp_diag.localization,
            "detected": sp_diag.detected,
            "time_s": time.perf_counter() - t0,
        }

    configs = [res.config for res in results]
    raw_hist = aligned_hist = None
    if len(configs) >= 2:
        _, raw_hist = diagnostics.raw_pairwise_distances(configs)
        _, aligned_hist, _ = diagnostics.aligned_pairwise_distances(
            configs, procrustes=config.procrustes
        )

    record = RunRecord(
        config=config.public_dict(),
        graph_info={
            "n_raw": prep.raw.n,
            "m_raw": prep.raw.n_edges,
            "n_core": prep.core.n,
            "m_core": prep.core.n_edges,
        },
        clone_rows=rows,
        checkpoints=checkpoints,
        spectral_info=spectral_info,
        raw_histogram=raw_hist,
        aligned_histogram=aligned_hist,
        timings={**prep.timings, "solve_s": solve_s},
    )
    if config.out:
        record.write(config.out)
    return record


def run_sweep(config):
    """Grid sweep over lambda or m; child experiments get seeds derived from
    (master seed, grid index) so the sweep is scheduling-independent."""
    config.validate()
    records = []
    for idx, value in enumerate(config.values):
        sub = ExperimentConfig(**{**asdict(config), "kind": "clones", "out": None,
                                  "param": None, "values": None})
        if config.param == "lambda":
            sub.snr = float(value)
            sub.c_in = sub.c_out = None
        else:
            sub.m = int(value)
        sub.seed = _grid_seed(config.seed, idx)
        records.append((value, run_clones(sub)))

    if config.out:
        lines = ["param,value,clone,t_conv,converged,objective,overlap_final"]
        for value, rec in records:
            for row in rec.clone_rows:
                lines.append(
                    ",".join(
                        [
                            config.param,
                            _csv_cell(float(value) if config.param == "lambda" else int(value)),
                            str(row["clone"]),
                            str(row["t_conv"]),
                            _csv_cell(row["converged"]),
                            _csv_cell(row["objective"]),
                            _csv_cell(row["overlap_final"]),
                        ]
                    )
                )
        with open(config.out + ".csv", "w") as fh:
            fh.write("\n".join(lines) + "\n")
        meta = {"config": config.public_dict(),
                "grid": [ _csv_cell(v) for v in config.values ]}
        with open(config.out + ".json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return records


def _grid_seed(master, idx):
    """Stable scalar seed for grid point idx, derived from the master seed."""
    ss = np.random.SeedSequence([int(master), 101, int(idx)])
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> 1)


def benchmark_backends(core, m, sweeps=20, seed=0):
    """Time `sweeps` BCD sweeps under the numba and numpy kernels on the same
    start configuration; returns {backend: seconds}."""
    indptr, indices, _ = core.csr
    timings = {}
    kernel_sets = {"numpy": numpy_kernels}
    try:
        kernel_sets["numba"] = get_numba_kernels()
    except ImportError:
        pass
    for name, ks in kernel_sets.items():
        rng = np.random.default_rng(seed)
        cfg = solver._init_from_rng(core.n, m, rng)
        order = rng.permutation(core.n).astype(np.int64)
        ks.bcd_sweep(indptr, indices, cfg.vectors.copy(), cfg.magnetization.copy(), order)  # warm up / JIT
        t0 = time.perf_counter()
        for _ in range(sweeps):
            ks.bcd_sweep(indptr, indices, cfg.vectors, cfg.magnetization, order)
        timings[name] = time.perf_counter() - t0
    return timings


def run_bench(config):
    """Wall-clock benchmark: phase timings, overlap-vs-time series for one
    clone, and per-sweep cost at m and 2m (plus an optional numba-vs-numpy
    kernel comparison)."""
    config.validate()
    prep = prepare_graph(config)
    core = prep.core
    checkpoints = config.resolved_checkpoints()

    # warm up the JIT so compile time is not billed to the solve
    warm = graphs.Graph(n=4, edges=[(0, 1), (1, 2), (2, 3), (0, 3), (0, 2), (1, 3)])
    solver.run_solver(warm, config.m, epsilon=1e-2, max_sweeps=3, seed=0)

    series = []
    rng = np.random.default_rng(child_seed(config.seed, ROLE_CLONE, 0))
    cfg = solver._init_from_rng(core.n, config.m, rng)
    t_start = time.perf_counter()
    converged = False
    t = 0
    for t in range(1, config.max_sweeps + 1):
        dmax = solver.bcd_sweep(cfg, core, rng)
        if t % solver.MAG_REFRESH_EVERY == 0:
            cfg.refresh_magnetization()
        if t in checkpoints or dmax < config.epsilon:
            elapsed = time.perf_counter() - t_start
            q = _score(solver.project_to_labels(cfg), prep, config)
            series.append({"sweep": t, "elapsed_s": elapsed, "overlap": q,
                           "delta_max": dmax})
        if dmax < config.epsilon:
            converged = True
            break
    solve_s = time.perf_counter() - t_start
    if config.strict and not converged:
        raise NonConvergenceError(f"no convergence within {config.max_sweeps} sweeps")

    t0 = time.perf_counter()
    solver.project_to_labels(cfg)
    project_s = time.perf_counter() - t0

    def timed_sweeps(m, n_sweeps=10):
        r = np.random.default_rng(child_seed(config.seed, ROLE_CLONE, 1))
        c2 = solver._init_from_rng(core.n, m, r)
        solver.bcd_sweep(c2, core, r)  # warm up this (m, dtype) specialization
        t0 = time.perf_counter()
        for _ in range(n_sweeps):
            solver.bcd_sweep(c2, core, r)
        return (time.perf_counter() - t0) / n_sweeps

    timings = {
        **prep.timings,
        "solve_s": solve_s,
        "project_s": project_s,
        "sweep_s_at_m": timed_sweeps(config.m),
        "sweep_s_at_2m": timed_sweeps(2 * config.m),
    }
    if config.compare_backends:
        timings["backend_compare_s"] = benchmark_backends(core, config.m)

    record = {
        "config": config.public_dict(),
        "graph": {
            "n_raw": prep.raw.n,
            "m_raw": prep.raw.n_edges,
            "n_core": core.n,
            "m_core": core.n_edges,
        },
        "converged": converged,
        "t_conv": t,
        "series": series,
        "timings": timings,
    }
    if config.out:
        with open(config.out + ".json", "w") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(config.out + ".csv", "w") as fh:
            fh.write("sweep,elapsed_s,overlap,delta_max\n")
            for s in series:
                fh.write(
                    f"{s['sweep']},{s['elapsed_s']!r},{_csv_cell(s['overlap'])},{s['delta_max']!r}\n"
                )
    return record
