"""Command-line front end: config-driven allocation, detection sweeps, solver traces.

Configs are JSON documents with a schema_version field; every command
takes one config path plus an output directory and writes plot-ready
CSV files and a manifest. Exit codes are a stable contract: 0 success,
2 config problems, 3 solver non-convergence.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time

import numpy as np

from .consensus import ConsensusError, TopologyError, save_edge_list
from .model import Scenario, SolverConfig, make_scenario
from .montecarlo import (
    Scheme,
    powers_for_scheme,
    roc_curve,
    run_trials,
    sweep_budget,
    weights_for_scheme,
    write_diagnostics_csv,
    write_results_csv,
)
from .quantize import specs_for_allocation
from .solver_central import NoSignalError, solve_centralized
from .solver_dist import ConvergenceError, solve_distributed, write_trace_csv

SCHEMA_VERSION = 1
OUTDIR_ENV = "DISTDETECT_OUTDIR"


class ConfigError(ValueError):
    """Config file is missing, malformed, or fails validation."""


_SOLVER_DEFAULTS = {
    "lambda0_init": 1e-8,
    "kappa": 1e-7,
    "step_rule": "diminishing",
    "consensus_tol": 1e-10,
    "consensus_max_iter": 20000,
    "outer_max_iter": 100000,
    "consensus_mode": "oracle",
    "consensus_window": 5,
}

_DETECT_DEFAULTS = {
    "trials": 10000,
    "schemes": [s.value for s in Scheme],
    "pt_grid": [],
    "pfa_grid": [],
    "n_grid": [],
}

_TOP_DEFAULTS = {
    "name": "scenario",
    "xa_db": -4.0,
    "amplitude": 0.2,
    "sigma2_range": [0.5, 2.0],
    "zeta": 0.1,
    "radius": 0.5,
    "deterministic_channel": False,
    "solver": _SOLVER_DEFAULTS,
    "detect": _DETECT_DEFAULTS,
}

_REQUIRED = ("schema_version", "seed", "M", "N", "U", "Pt", "Pfa")


def load_config(path) -> dict:
    """Parse and validate a config file; errors carry file:line context."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}:{e.colno}: invalid JSON: {e.msg}") from e
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    try:
        return validate_config(raw)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from e


def _expect(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _num(cfg: dict, key: str, kind=float, positive: bool = False):
    v = cfg[key]
    _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
            f"field '{key}' must be a number, got {v!r}")
    if kind is int:
        _expect(float(v) == int(v), f"field '{key}' must be an integer, got {v!r}")
        v = int(v)
    else:
        v = float(v)
    if positive:
        _expect(v > 0, f"field '{key}' must be positive, got {v!r}")
    return v


def validate_config(raw: dict) -> dict:
    """Fill defaults and type-check; returns the canonical config dict.

    Canonicalization is idempotent: validating the output again yields
    an equal dict, which is what makes parse->canonicalize->serialize->
    parse a fixed point.
    """
    for key in _REQUIRED:
        _expect(key in raw, f"missing required field '{key}'")
    known = set(_REQUIRED) | set(_TOP_DEFAULTS)
    for key in raw:
        _expect(key in known, f"unknown field '{key}'")
    cfg = {k: raw.get(k, v) for k, v in _TOP_DEFAULTS.items()}
    cfg.update({k: raw[k] for k in _REQUIRED})

    _expect(cfg["schema_version"] == SCHEMA_VERSION,
            f"field 'schema_version' must be {SCHEMA_VERSION}, got {cfg['schema_version']!r}")
    cfg["seed"] = _num(cfg, "seed", int)
    _expect(cfg["seed"] >= 0, "field 'seed' must be nonnegative")
    cfg["M"] = _num(cfg, "M", int, positive=True)
    cfg["N"] = _num(cfg, "N", int, positive=True)
    cfg["U"] = _num(cfg, "U", positive=True)
    cfg["Pt"] = _num(cfg, "Pt", positive=True)
    cfg["Pfa"] = _num(cfg, "Pfa")
    _expect(0.0 < cfg["Pfa"] < 1.0, "field 'Pfa' must be in (0, 1)")
    _expect(isinstance(cfg["name"], str) and cfg["name"], "field 'name' must be a nonempty string")
    cfg["xa_db"] = _num(cfg, "xa_db")
    cfg["amplitude"] = _num(cfg, "amplitude", positive=True)
    sr = cfg["sigma2_range"]
    _expect(isinstance(sr, (list, tuple)) and len(sr) == 2,
            "field 'sigma2_range' must be a [lo, hi] pair")
    sr = [float(sr[0]), float(sr[1])]
    _expect(0 < sr[0] <= sr[1], "field 'sigma2_range' must satisfy 0 < lo <= hi")
    cfg["sigma2_range"] = sr
    cfg["zeta"] = _num(cfg, "zeta", positive=True)
    cfg["radius"] = _num(cfg, "radius", positive=True)
    _expect(isinstance(cfg["deterministic_channel"], bool),
            "field 'deterministic_channel' must be true/false")

    solver = dict(_SOLVER_DEFAULTS)
    _expect(isinstance(cfg["solver"], dict), "field 'solver' must be an object")
    for key in cfg["solver"]:
        _expect(key in _SOLVER_DEFAULTS, f"unknown field 'solver.{key}'")
    solver.update(cfg["solver"])
    try:
        SolverConfig(**{k: (float(v) if isinstance(_SOLVER_DEFAULTS[k], float) else v)
                        for k, v in solver.items()})
    except (ValueError, TypeError) as e:
        raise ConfigError(f"field 'solver': {e}") from e
    for k in ("lambda0_init", "kappa", "consensus_tol"):
        solver[k] = float(solver[k])
    for k in ("consensus_max_iter", "outer_max_iter", "consensus_window"):
        solver[k] = int(solver[k])
    cfg["solver"] = solver

    detect = dict(_DETECT_DEFAULTS)
    _expect(isinstance(cfg["detect"], dict), "field 'detect' must be an object")
    for key in cfg["detect"]:
        _expect(key in _DETECT_DEFAULTS, f"unknown field 'detect.{key}'")
    detect.update(cfg["detect"])
    detect["trials"] = _num(detect, "trials", int, positive=True)
    _expect(isinstance(detect["schemes"], list) and detect["schemes"],
            "field 'detect.schemes' must be a nonempty list")
    for s in detect["schemes"]:
        try:
            Scheme(s)
        except ValueError:
            raise ConfigError(
                f"field 'detect.schemes': unknown scheme {s!r}; valid: {[x.value for x in Scheme]}"
            ) from None
    for gname, positive in (("pt_grid", True), ("pfa_grid", True), ("n_grid", True)):
        grid = detect[gname]
        _expect(isinstance(grid, list), f"field 'detect.{gname}' must be a list")
        vals = []
        for v in grid:
            _expect(isinstance(v, (int, float)) and not isinstance(v, bool),
                    f"field 'detect.{gname}' entries must be numbers")
            vals.append(int(v) if gname == "n_grid" else float(v))
        _expect(all(v > 0 for v in vals), f"field 'detect.{gname}' entries must be positive")
        if gname == "pfa_grid":
            _expect(all(v < 1 for v in vals), "field 'detect.pfa_grid' entries must be < 1")
            _expect(vals == sorted(vals), "field 'detect.pfa_grid' must be increasing")
        detect[gname] = vals
    cfg["detect"] = detect
    return cfg


def canonical_dumps(cfg: dict) -> str:
    return json.dumps(cfg, sort_keys=True, indent=2) + "\n"


def config_digest(cfg: dict) -> str:
    return hashlib.sha256(canonical_dumps(cfg).encode()).hexdigest()


def scenario_from_config(cfg: dict, n: int | None = None) -> Scenario:
    solver = SolverConfig(**cfg["solver"])
    try:
        return make_scenario(
            m=cfg["M"], n=n if n is not None else cfg["N"], seed=cfg["seed"],
            u=cfg["U"], pt=cfg["Pt"], pfa=cfg["Pfa"], xa_db=cfg["xa_db"],
            amplitude=cfg["amplitude"], sigma2_range=tuple(cfg["sigma2_range"]),
            zeta=cfg["zeta"], radius=cfg["radius"],
            deterministic_channel=cfg["deterministic_channel"], solver=solver,
        )
    except TopologyError:
        raise
    except ValueError as e:
        raise ConfigError(f"config does not describe a valid scenario: {e}") from e


def _outdir(args) -> str:
    out = args.out or os.environ.get(OUTDIR_ENV) or "."
    os.makedirs(out, exist_ok=True)
    return out


def _write_manifest(outdir: str, cfg: dict, command: str, outputs: list[str],
                    timings: dict[str, float]) -> str:
    from importlib.metadata import PackageNotFoundError, version
    try:
        pkg_version = version("distdetect")
    except PackageNotFoundError:
        pkg_version = "unknown"
    for name in outputs:
        path = os.path.join(outdir, name)
        if not (os.path.exists(path) and os.path.getsize(path) > 0):
            raise RuntimeError(f"output {name} missing or empty; refusing to write manifest")
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "name": cfg["name"],
        "command": command,
        "config_digest": config_digest(cfg),
        "package_version": pkg_version,
        "outputs": sorted(outputs),
        "timings_s": {k: round(v, 3) for k, v in timings.items()},
    }
    path = os.path.join(outdir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return path


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_allocation_csv(path, scenario: Scenario, p_central, p_distributed) -> None:
    """Columns: i,h_i,sigma2_i,xi_i,p_central,p_distributed,bits_real,bits_int,censored.

    Bit columns follow the centralized powers when present, otherwise
    the distributed ones.
    """
    basis = p_central if p_central is not None else p_distributed
    specs = specs_for_allocation(np.asarray(basis), scenario.h(), scenario.zeta(), scenario.U)
    with open(path, "w") as fh:
        fh.write("i,h_i,sigma2_i,xi_i,p_central,p_distributed,bits_real,bits_int,censored\n")
        for i, s in enumerate(scenario.sensors):
            row = [
                str(i), _fmt(s.h), _fmt(s.sigma2), _fmt(s.xi),
                _fmt(None if p_central is None else float(p_central[i])),
                _fmt(None if p_distributed is None else float(p_distributed[i])),
                _fmt(specs[i].bits_real), str(specs[i].bits_int),
                _fmt(specs[i].censored),
            ]
            fh.write(",".join(row) + "\n")


def cmd_allocate(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(args)
    scenario = scenario_from_config(cfg)
    timings: dict[str, float] = {}
    outputs: list[str] = []

    p_central = p_dist = None
    if args.method in ("central", "both"):
        t0 = time.perf_counter()
        p_central = solve_centralized(scenario).p
        timings["solve_centralized"] = time.perf_counter() - t0
    if args.method in ("distributed", "both"):
        t0 = time.perf_counter()
        try:
            alloc, trace = solve_distributed(scenario)
        except ConvergenceError as e:
            if e.trace is not None and e.trace.iterations > 0:
                trace_path = os.path.join(outdir, "trace.csv")
                write_trace_csv(e.trace, trace_path)
                print(f"partial trace written to {trace_path}", file=sys.stderr)
            raise
        p_dist = alloc.p
        timings["solve_distributed"] = time.perf_counter() - t0

    alloc_path = os.path.join(outdir, "allocation.csv")
    write_allocation_csv(alloc_path, scenario, p_central, p_dist)
    outputs.append("allocation.csv")
    save_edge_list(scenario.topology, os.path.join(outdir, "topology.txt"))
    if scenario.topology.edges:
        outputs.append("topology.txt")
    _write_manifest(outdir, cfg, "allocate", outputs, timings)
    if p_central is not None and p_dist is not None:
        nc = float(np.linalg.norm(p_central))
        gap = float(np.linalg.norm(p_dist - p_central)) / nc if nc > 0 else float("nan")
        print(f"allocate: {scenario.M} sensors, central vs distributed relative gap {gap:.3e}")
    else:
        print(f"allocate: {scenario.M} sensors, method {args.method}")
    print(f"wrote {alloc_path}")
    return 0


def cmd_detect(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(args)
    detect = cfg["detect"]
    trials = args.trials if args.trials is not None else detect["trials"]
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    schemes = [Scheme(s) for s in detect["schemes"]]
    timings: dict[str, float] = {}
    outputs: list[str] = []
    t0 = time.perf_counter()

    if args.sweep == "pt":
        if not detect["pt_grid"]:
            raise ConfigError("sweep 'pt' needs a nonempty 'detect.pt_grid'")
        scenario = scenario_from_config(cfg)
        diag: list = []
        ests = sweep_budget(scenario, schemes, detect["pt_grid"], trials,
                            workers=args.workers, diagnostics=diag)
        rows = [(e, scenario.N, scenario.M) for e in ests]
        write_results_csv(os.path.join(outdir, "results_pt.csv"), rows)
        outputs.append("results_pt.csv")
        write_diagnostics_csv(os.path.join(outdir, "diagnostics_pt.csv"), diag)
        outputs.append("diagnostics_pt.csv")
    elif args.sweep == "pfa":
        if not detect["pfa_grid"]:
            raise ConfigError("sweep 'pfa' needs a nonempty 'detect.pfa_grid'")
        n_values = detect["n_grid"] or [cfg["N"]]
        rows = []
        for n in n_values:
            scenario = scenario_from_config(cfg, n=n)
            for scheme in schemes:
                powers = powers_for_scheme(scenario, scheme)
                weights = weights_for_scheme(scenario, scheme, powers)
                for e in roc_curve(scenario, powers, weights, scheme,
                                   detect["pfa_grid"], trials, workers=args.workers):
                    rows.append((e, n, scenario.M))
        write_results_csv(os.path.join(outdir, "results_pfa.csv"), rows)
        outputs.append("results_pfa.csv")
    else:  # sweep over n
        if not detect["n_grid"]:
            raise ConfigError("sweep 'n' needs a nonempty 'detect.n_grid'")
        rows = []
        for n in detect["n_grid"]:
            scenario = scenario_from_config(cfg, n=n)
            for scheme in schemes:
                powers = powers_for_scheme(scenario, scheme)
                weights = weights_for_scheme(scenario, scheme, powers)
                e = run_trials(scenario, powers, weights, scheme, trials,
                               workers=args.workers)
                rows.append((e, n, scenario.M))
        write_results_csv(os.path.join(outdir, "results_n.csv"), rows)
        outputs.append("results_n.csv")

    timings[f"sweep_{args.sweep}"] = time.perf_counter() - t0
    _write_manifest(outdir, cfg, f"detect --sweep {args.sweep}", outputs, timings)
    print(f"detect: sweep {args.sweep}, {trials} trials per point, "
          f"{len(schemes)} schemes -> {', '.join(sorted(outputs))}")
    return 0


def cmd_trace(args) -> int:
    cfg = load_config(args.config)
    outdir = _outdir(args)
    scenario = scenario_from_config(cfg)
    t0 = time.perf_counter()
    try:
        alloc, trace = solve_distributed(scenario)
    except ConvergenceError as e:
        if e.trace is not None and e.trace.iterations > 0:
            trace_path = os.path.join(outdir, "trace.csv")
            write_trace_csv(e.trace, trace_path)
            print(f"partial trace written to {trace_path}", file=sys.stderr)
        raise
    elapsed = time.perf_counter() - t0
    trace_path = os.path.join(outdir, "trace.csv")
    write_trace_csv(trace, trace_path)
    outputs = ["trace.csv"]
    save_edge_list(scenario.topology, os.path.join(outdir, "topology.txt"))
    if scenario.topology.edges:
        outputs.append("topology.txt")
    _write_manifest(outdir, cfg, "trace", outputs, {"solve_distributed": elapsed})
    print(f"trace: converged in {trace.iterations} outer iterations, "
          f"{trace.total_consensus_rounds} consensus rounds total, "
          f"final rel_step {trace.rel_step[-1]:.3e}, sum(p) = {alloc.total():.6f}")
    print(f"wrote {trace_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distdetect",
        description="Decentralized detection: power allocation, detection sweeps, solver traces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_alloc = sub.add_parser("allocate", help="solve the power allocation and write per-sensor CSV")
    p_alloc.add_argument("config")
    p_alloc.add_argument("--method", choices=("central", "distributed", "both"), default="both")
    p_alloc.add_argument("--out", default=None, help=f"output directory (default ${OUTDIR_ENV} or .)")
    p_alloc.set_defaults(func=cmd_allocate)

    p_det = sub.add_parser("detect", help="run Monte Carlo detection sweeps")
    p_det.add_argument("config")
    p_det.add_argument("--sweep", choices=("pt", "pfa", "n"), required=True)
    p_det.add_argument("--trials", type=int, default=None, help="override config trial count")
    p_det.add_argument("--workers", type=int, default=1)
    p_det.add_argument("--out", default=None)
    p_det.set_defaults(func=cmd_detect)

    p_tr = sub.add_parser("trace", help="run the distributed solver and dump its trace")
    p_tr.add_argument("config")
    p_tr.add_argument("--out", default=None)
    p_tr.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, TopologyError, NoSignalError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (ConvergenceError, ConsensusError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
