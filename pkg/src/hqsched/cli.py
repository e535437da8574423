"""Command line entry point.

Subcommands:
  pipeline run    run the live clustering-aggregation loop
  sim run         run one simulator scenario file
  sim reproduce   calibrate and run the full comparison grid
  qubo solve      solve a QUBO problem file

Exit codes: 0 success, 1 tolerance or runtime failure, 2 usage/config error.
The HQSCHED_LOG environment variable sets the log level.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import experiments
from .config import default_experiment_config, load_experiment_config
from .consensus import load_qubo
from .errors import InvalidParameterError, ParseError
from .pipeline import MalleableRuntime, acquire_lease, export_phase_log, run_pipeline
from .qubo_solver import Backend, solve
from .resources import ResourceProvider
from .simsched import Strategy, export_timeline, load_scenario, report_to_dict, simulate

log = logging.getLogger("hqsched")

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqsched", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="group", required=True)

    pipe = sub.add_parser("pipeline", help="live pipeline commands")
    pipe_sub = pipe.add_subparsers(dest="command", required=True)
    run = pipe_sub.add_parser("run", help="run the silhouette-gated loop")
    run.add_argument("--config", help="TOML/JSON experiment config")
    run.add_argument("--dataset", help="CSV dataset overriding generation")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override the master seed")
    run.add_argument("--quantum-delay", type=float, dest="quantum_delay",
                     help="artificial quantum job delay in seconds")
    run.add_argument("--dump-state", action="store_true", dest="dump_state",
                     help="dump per-iteration clusterings and QUBOs as JSON")

    sim = sub.add_parser("sim", help="simulator commands")
    sim_sub = sim.add_subparsers(dest="command", required=True)
    srun = sim_sub.add_parser("run", help="run one scenario file")
    srun.add_argument("--config", required=True, help="scenario TOML/JSON")
    srun.add_argument("--out", required=True, help="output directory")
    srun.add_argument("--strategy", choices=[s.value for s in Strategy],
                      help="override the scenario strategy")
    rep = sim_sub.add_parser("reproduce", help="calibrated comparison grid")
    rep.add_argument("--out", required=True, help="output directory")
    rep.add_argument("--strategy", action="append",
                     choices=[s.value for s in Strategy],
                     help="restrict strategies (repeatable)")
    rep.add_argument("--repetitions", type=int, default=5)

    qubo = sub.add_parser("qubo", help="QUBO solver commands")
    qubo_sub = qubo.add_subparsers(dest="command", required=True)
    qs = qubo_sub.add_parser("solve", help="solve a problem JSON file")
    qs.add_argument("--problem", required=True, help="problem JSON")
    qs.add_argument("--out", help="result JSON path (default stdout)")
    qs.add_argument("--backend", choices=[b.value for b in Backend], default="sa")
    qs.add_argument("--quantum-delay", type=float, dest="quantum_delay", default=0.0)
    qs.add_argument("--seed", type=int, default=0)
    return parser


def _cmd_pipeline_run(args) -> int:
    if args.config:
        exp = load_experiment_config(args.config)
    else:
        exp = default_experiment_config()
    cfg = exp.pipeline
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.quantum_delay is not None:
        cfg = replace(cfg, quantum_delay=args.quantum_delay)

    if args.dataset:
        from .dataset import load_csv
        ds = load_csv(args.dataset)
    else:
        ds = exp.make_dataset()

    os.makedirs(args.out, exist_ok=True)
    provider = ResourceProvider(exp.workers)
    lease = acquire_lease(provider, exp.workers)
    runtime = MalleableRuntime(provider, lease, checkpoint_dir=args.out)
    state_dir = os.path.join(args.out, "state") if args.dump_state else None
    log.info("pipeline start: %d points, %d workers", len(ds), exp.workers)
    result = run_pipeline(ds, cfg, lease, runtime, state_dir=state_dir)

    export_phase_log(result.phase_log, os.path.join(args.out, "phase_log.csv"))
    with open(os.path.join(args.out, "result.json"), "w", encoding="ascii") as fh:
        json.dump({
            "score": result.score,
            "iterations_run": result.iterations_run,
            "iteration_scores": list(result.iteration_scores),
            "n_clusters": None if result.final is None else result.final.n_clusters,
            "cluster_sizes": None if result.final is None else
                [int(c.size) for c in result.final.clusters],
            "best_x": None if result.best_x is None else result.best_x.tolist(),
        }, fh, indent=2)
    log.info("pipeline done: score %.4f after %d iterations",
             result.score, result.iterations_run)
    print(f"score {result.score:.4f} after {result.iterations_run} iterations "
          f"-> {args.out}")
    return EXIT_OK


def _cmd_sim_run(args) -> int:
    spec, jobs, strat = load_scenario(args.config)
    if args.strategy:
        strat = Strategy(args.strategy)
    report = simulate(spec, jobs, strat)
    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "report.json"), "w", encoding="ascii") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
    export_timeline(report, os.path.join(args.out, "timeline.csv"))
    print(f"{strat.value}: makespan {report.makespan:.2f}s, "
          f"{report.node_seconds:.2f} node-seconds -> {args.out}")
    return EXIT_OK


def _cmd_sim_reproduce(args) -> int:
    grid = experiments.ExperimentGrid(
        strategies=tuple(args.strategy) if args.strategy else experiments.STRATEGIES,
        repetitions=args.repetitions,
    )
    result = experiments.run_grid(grid)
    os.makedirs(args.out, exist_ok=True)
    experiments.grid_to_csv(result, os.path.join(args.out, "table.csv"))
    experiments.ratios_to_csv(result, os.path.join(args.out, "ratios.csv"))
    md = experiments.grid_to_markdown(result)
    with open(os.path.join(args.out, "table.md"), "w", encoding="ascii") as fh:
        fh.write(md)
    print(md)
    if not result.ratios:
        print("note: ratio checks need all three strategies in the 2-minute regime")
        return EXIT_OK
    if not result.all_passed:
        print("FAIL: at least one ratio outside tolerance", file=sys.stderr)
        return EXIT_FAIL
    print("all ratios within tolerance")
    return EXIT_OK


def _cmd_qubo_solve(args) -> int:
    problem = load_qubo(args.problem)
    from .qubo_solver import SaParams
    result = solve(problem, args.backend, args.quantum_delay,
                   SaParams(seed=args.seed))
    payload = {
        "best_x": [int(b) for b in result.best_x],
        "best_f": result.best_f,
        "elapsed_ms": result.elapsed * 1000.0,
    }
    if args.out:
        with open(args.out, "w", encoding="ascii") as fh:
            json.dump(payload, fh)
    else:
        json.dump(payload, sys.stdout)
        print()
    return EXIT_OK


_HANDLERS = {
    ("pipeline", "run"): _cmd_pipeline_run,
    ("sim", "run"): _cmd_sim_run,
    ("sim", "reproduce"): _cmd_sim_reproduce,
    ("qubo", "solve"): _cmd_qubo_solve,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("HQSCHED_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = _HANDLERS[(args.group, args.command)]
    try:
        return handler(args)
    except (ParseError, InvalidParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # module errors during a run
        log.exception("command failed")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
