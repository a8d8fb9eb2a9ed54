"""Command-line entry point.

Subcommands: generate, solve, spectral, clones, sweep, bench.
Exit codes: 0 success, 1 invalid config, 2 I/O error, 3 solver
non-convergence under --strict.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import diagnostics, graphs, solver, spectral as spectral_mod
from .experiments import (
    ConfigError,
    ExperimentConfig,
    NonConvergenceError,
    child_seed,
    prepare_graph,
    run_bench,
    run_clones,
    run_sweep,
    ROLE_CLONE,
)


def _add_common(p):
    p.add_argument("--n", type=int, default=10_000, help="raw vertex count")
    p.add_argument("--c", type=float, default=3.0, help="mean degree")
    p.add_argument("--lambda", dest="snr", type=float, default=None,
                   help="signal-to-noise ratio (c_in - c_out) / (2 sqrt(c))")
    p.add_argument("--cin", dest="c_in", type=float, default=None)
    p.add_argument("--cout", dest="c_out", type=float, default=None)
    p.add_argument("--p", type=float, default=0.0,
                   help="per-vertex neighborhood-clique probability")
    p.add_argument("--m", type=int, default=16, help="relaxation rank")
    p.add_argument("--eps", dest="epsilon", type=float, default=1e-4,
                   help="stopping tolerance on the largest spin change")
    p.add_argument("--max-sweeps", type=int, default=10_000)
    p.add_argument("--clones", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=str, default=None, help="output path prefix")
    p.add_argument("--format", dest="fmt", choices=("csv", "json"), default="csv")
    p.add_argument("--graph", dest="graph_path", type=str, default=None,
                   help="edge-list file to use instead of generating")
    p.add_argument("--extend-trees", action="store_true",
                   help="score overlaps on the full graph by extending core labels")
    p.add_argument("--procrustes", action="store_true",
                   help="full orthogonal alignment for clone distances")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 on solver non-convergence")
    p.add_argument("--config", type=str, default=None,
                   help="key=value config file; flags override")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="sdpclust",
        description="Community detection via rank-constrained SDP relaxation, "
                    "with SBM benchmarks and a Bethe Hessian baseline",
    )
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind, doc in (
        ("generate", "generate an SBM graph and save it as an edge list"),
        ("solve", "run a single solver instance and write its trace"),
        ("spectral", "run the Bethe Hessian baseline"),
        ("clones", "run a clone ensemble with distance histograms"),
        ("sweep", "grid sweep over lambda or m"),
        ("bench", "wall-clock benchmark"),
    ):
        p = sub.add_parser(kind, help=doc)
        _add_common(p)
        if kind == "sweep":
            p.add_argument("--param", choices=("lambda", "m"), default=None)
            p.add_argument("--values", type=str, default=None,
                           help="comma-separated grid values")
        if kind == "bench":
            p.add_argument("--compare-backends", action="store_true",
                           help="also time the numba vs numpy sweep kernels")
    return parser


_CONFIG_CASTS = {
    "n": int, "m": int, "max_sweeps": int, "clones": int, "seed": int,
    "c": float, "lambda": float, "cin": float, "cout": float, "p": float,
    "eps": float,
    "extend_trees": lambda s: s.lower() in ("1", "true", "yes"),
    "procrustes": lambda s: s.lower() in ("1", "true", "yes"),
    "strict": lambda s: s.lower() in ("1", "true", "yes"),
}
_CONFIG_DESTS = {"lambda": "snr", "cin": "c_in", "cout": "c_out", "eps": "epsilon",
                 "graph": "graph_path", "format": "fmt"}


def _apply_config_file(args, path, explicit):
    with open(path) as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"config line {line_no}: expected key=value")
            key, value = (tok.strip() for tok in line.split("=", 1))
            norm = key.replace("-", "_")
            dest = _CONFIG_DESTS.get(norm, norm)
            if not hasattr(args, dest):
                raise ConfigError(f"config line {line_no}: unknown key {key!r}")
            if dest in explicit:
                continue  # command-line flag wins
            cast = _CONFIG_CASTS.get(norm, str)
            try:
                setattr(args, dest, cast(value))
            except ValueError:
                raise ConfigError(f"config line {line_no}: bad value for {key!r}") from None


def _explicit_dests(argv):
    """Dests of flags the user actually passed, so they beat --config values."""
    flags = {
        "--n": "n", "--c": "c", "--lambda": "snr", "--cin": "c_in",
        "--cout": "c_out", "--p": "p", "--m": "m", "--eps": "epsilon",
        "--max-sweeps": "max_sweeps", "--clones": "clones", "--seed": "seed",
        "--out": "out", "--format": "fmt", "--graph": "graph_path",
        "--extend-trees": "extend_trees", "--procrustes": "procrustes",
        "--strict": "strict", "--param": "param", "--values": "values",
        "--compare-backends": "compare_backends",
    }
    out = set()
    for tok in argv:
        name = tok.split("=", 1)[0]
        if name in flags:
            out.add(flags[name])
    return out


def _to_config(args):
    values = getattr(args, "values", None)
    if values is not None:
        values = [tok.strip() for tok in values.split(",") if tok.strip()]
        cast = float if args.param == "lambda" else int
        values = [cast(v) for v in values]
    return ExperimentConfig(
        kind=args.kind,
        n=args.n,
        c=args.c,
        snr=args.snr,
        c_in=args.c_in,
        c_out=args.c_out,
        p=args.p,
        m=args.m,
        epsilon=args.epsilon,
        max_sweeps=args.max_sweeps,
        clones=args.clones,
        seed=args.seed,
        out=args.out,
        fmt=args.fmt,
        graph_path=args.graph_path,
        extend_trees=args.extend_trees,
        procrustes=args.procrustes,
        strict=args.strict,
        param=getattr(args, "param", None),
        values=values,
        compare_backends=getattr(args, "compare_backends", False),
    ).validate()


def _cmd_generate(config):
    if config.out is None:
        raise ConfigError("out: generate requires --out")
    g, partition = graphs.sbm_generate(
        config.sbm_params(), child_seed(config.seed, 1)
    )
    graphs.save_edge_list(config.out, g, partition)
    print(f"wrote {config.out}: n={g.n} m={g.n_edges}")
    return 0


def _cmd_solve(config):
    prep = prepare_graph(config)
    res = solver.run_solver(
        prep.core, config.m, epsilon=config.epsilon,
        max_sweeps=config.max_sweeps,
        seed=child_seed(config.seed, ROLE_CLONE, 0),
    )
    if config.strict and not res.converged:
        raise NonConvergenceError(f"no convergence within {config.max_sweeps} sweeps")
    labels = solver.project_to_labels(res.config)
    summary = {
        "n_core": prep.core.n,
        "m_core": prep.core.n_edges,
        "t_conv": res.t_conv,
        "converged": res.converged,
        "objective": float(res.objective_trace[-1]),
        "mag_norm": res.final_magnetization_norm,
    }
    if prep.core_planted is not None:
        if config.extend_trees:
            full = graphs.extend_labels_to_trees(labels, prep.forest)
            summary["overlap"] = diagnostics.overlap(full, prep.planted.labels)
        else:
            summary["overlap"] = diagnostics.overlap(labels, prep.core_planted)
    if config.out:
        with open(config.out + "_trace.csv", "w") as fh:
            fh.write("sweep,objective,delta_max,mag_norm\n")
            for t in range(res.t_conv):
                fh.write(
                    f"{t + 1},{res.objective_trace[t]!r},"
                    f"{res.delta_trace[t]!r},{res.mag_trace[t]!r}\n"
                )
        with open(config.out + ".json", "w") as fh:
            json.dump({"config": config.public_dict(), **summary}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(summary))
    return 0


def _cmd_spectral(config):
    prep = prepare_graph(config)
    labels, diag = spectral_mod.bethe_hessian_estimate(prep.core)
    summary = {
        "n_core": prep.core.n,
        "m_core": prep.core.n_edges,
        "second_eigenvalue": diag.second_eigenvalue,
        "localization": diag.localization,
        "detected": diag.detected,
    }
    if prep.core_planted is not None:
        if config.extend_trees:
            full = graphs.extend_labels_to_trees(labels, prep.forest)
            summary["overlap"] = diagnostics.overlap(full, prep.planted.labels)
        else:
            summary["overlap"] = diagnostics.overlap(labels, prep.core_planted)
    if config.out:
        with open(config.out + ".json", "w") as fh:
            json.dump({"config": config.public_dict(), **summary}, fh,
                      indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(summary))
    return 0


def _cmd_clones(config):
    record = run_clones(config)
    finals = [r["overlap_final"] for r in record.clone_rows]
    summary = {
        "n_core": record.graph_info["n_core"],
        "clones": len(record.clone_rows),
        "mean_overlap": None if finals[0] is None else float(np.mean(finals)),
        "spectral": record.spectral_info,
    }
    print(json.dumps(summary))
    return 0


def _cmd_sweep(config):
    records = run_sweep(config)
    for value, rec in records:
        finals = [r["overlap_final"] for r in rec.clone_rows]
        mean = None if finals[0] is None else float(np.mean(finals))
        print(f"{config.param}={value}: mean_overlap={mean}")
    return 0


def _cmd_bench(config):
    record = run_bench(config)
    print(json.dumps({"graph": record["graph"], "timings": record["timings"],
                      "t_conv": record["t_conv"]}))
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "solve": _cmd_solve,
    "spectral": _cmd_spectral,
    "clones": _cmd_clones,
    "sweep": _cmd_sweep,
    "bench": _cmd_bench,
}


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "config", None):
            _apply_config_file(args, args.config, _explicit_dests(argv))
        config = _to_config(args)
        return _COMMANDS[args.kind](config)
    except (ConfigError, graphs.InvalidParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except graphs.EdgeListParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
