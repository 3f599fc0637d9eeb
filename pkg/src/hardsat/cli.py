"""Command-line front end.

Subcommands: ``gen``, ``solve``, ``evolve``, ``batch`` and ``crosscheck``.
Exit codes: 0 success, 10/20 SAT/UNSAT from ``solve --quiet``, 1 usage or
config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .cnf import (
    RNG_ALGORITHM,
    DimacsError,
    InvalidSpecError,
    RandomFormulaSpec,
    generate_random_kcnf,
    read_dimacs_file,
    write_dimacs,
    write_dimacs_file,
)
from .config import BatchSpec, config_to_dict, load_batch_spec, load_config
from .evolution import (
    DEFAULT_BREAK_WINDOW,
    ClauseSelection,
    ConfigError,
    EvolutionConfig,
    Metric,
    evolve,
    fig1_config,
    materialize_initial,
    two_stage_unsat_config,
    with_seed,
)
from .external import SOLVER_PRESETS, ExternalSolverError, ExternalSolverSpec, transfer_report
from .solver import Heuristic, SolverConfig, SolveStats, SolveStatus, solve
from .traces import CsvTraceSink, SnapshotSink

log = logging.getLogger("hardsat")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
EXIT_SAT, EXIT_UNSAT = 10, 20
MAX_TRACE_ROWS = 10**4

SUMMARY_COLUMNS = (
    "run",
    "seed",
    "initial_score",
    "final_score",
    "best_score",
    "initial_decisions",
    "final_decisions",
    "initial_propagations",
    "final_propagations",
    "final_clauses",
    "final_status",
    "error",
)


class UsageError(Exception):
    pass


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _stats_dict(stats: Optional[SolveStats]) -> Optional[dict]:
    return None if stats is None else stats.as_row()


# ---------------------------------------------------------------- gen


def cmd_gen(args) -> int:
    spec = RandomFormulaSpec(args.n, args.m, args.k, args.seed)
    formula = generate_random_kcnf(spec)
    text = write_dimacs(formula)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- solve


def _solver_config(args) -> SolverConfig:
    heuristic = Heuristic(args.heuristic)
    seed = args.solver_seed
    if heuristic is Heuristic.RANDOM and seed is None:
        seed = 0
    return SolverConfig(
        heuristic=heuristic,
        first_phase=not args.negative_first,
        decision_limit=args.decision_limit,
        seed=seed,
    )


def cmd_solve(args) -> int:
    formula = read_dimacs_file(args.input)
    stats = solve(formula, _solver_config(args))
    if args.json:
        print(json.dumps({"file": str(args.input), **stats.as_row()}))
    elif not args.quiet:
        line = {
            SolveStatus.SAT: "s SATISFIABLE",
            SolveStatus.UNSAT: "s UNSATISFIABLE",
            SolveStatus.LIMIT_EXCEEDED: "s UNKNOWN",
        }[stats.status]
        print(f"c decisions: {stats.decisions}")
        print(f"c propagations: {stats.propagations}")
        print(line)
        if stats.model is not None and args.model:
            print("v " + " ".join(map(str, stats.model)) + " 0")
    if args.quiet:
        return {SolveStatus.SAT: EXIT_SAT, SolveStatus.UNSAT: EXIT_UNSAT}.get(stats.status, EXIT_OK)
    return EXIT_OK


# ---------------------------------------------------------------- evolve


def _estimated_generations(config: EvolutionConfig) -> int:
    m = (
        config.initial.num_clauses
        if isinstance(config.initial, RandomFormulaSpec)
        else len(config.initial.clauses)
    )
    return sum(stage.generations_for(m) or 0 for stage in config.stages)


def default_record_every(config: EvolutionConfig) -> int:
    return max(1, _estimated_generations(config) // MAX_TRACE_ROWS)


def build_config(args) -> EvolutionConfig:
    """Assemble a config from --config or --preset plus command-line overrides."""
    if args.config:
        config = load_config(args.config)
        if args.seed is not None:
            config = with_seed(config, args.seed)
    else:
        seed = args.seed if args.seed is not None else 0
        if args.preset == "fig1":
            kwargs = {"seed": seed, "n": args.n or 50, "m": args.m or 100, "k": args.k or 3}
            if args.generations:
                kwargs["generations"] = args.generations
            if args.metric:
                kwargs["metric"] = Metric(args.metric)
            config = fig1_config(**kwargs)
        elif args.preset == "two-stage-unsat":
            kwargs = {"seed": seed, "n": args.n or 50, "k": args.k or 3, "ratio": args.ratio}
            if args.stage1_per_clause:
                kwargs["stage1_per_clause"] = args.stage1_per_clause
            if args.generations:
                kwargs["stage2_generations"] = args.generations
            config = two_stage_unsat_config(**kwargs)
            if args.m:
                config = replace(config, initial=replace(config.initial, num_clauses=args.m))
        else:
            raise UsageError("give --preset or --config")
        if args.initial:
            config = replace(config, initial=read_dimacs_file(args.initial), clause_width=args.k)

    overrides = {}
    solver = config.solver_config
    if args.heuristic or args.decision_limit is not None or args.negative_first:
        solver = SolverConfig(
            heuristic=Heuristic(args.heuristic) if args.heuristic else solver.heuristic,
            first_phase=solver.first_phase and not args.negative_first,
            decision_limit=args.decision_limit if args.decision_limit is not None else solver.decision_limit,
            seed=args.solver_seed if args.solver_seed is not None else solver.seed,
        )
        overrides["solver_config"] = solver
    if args.break_window is not None:
        overrides["break_window"] = args.break_window
    if args.break_size is not None:
        overrides["break_size"] = args.break_size
    if args.weighted:
        overrides["stages"] = [
            replace(s, clause_selection=ClauseSelection.WEIGHT_BIASED) for s in config.stages
        ]
    if overrides:
        config = replace(config, **overrides)
    if args.record_every is not None:
        config = replace(config, record_every=args.record_every)
    elif not args.config:
        config = replace(config, record_every=default_record_every(config))
    return config


def run_evolution(
    config: EvolutionConfig, outdir: Path, snapshot_every: Optional[int] = None
) -> dict:
    """Run one evolution, writing trace, formulas and manifest into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    started = _now()
    files = {
        "trace": "trace.csv",
        "initial": "initial.cnf",
        "final": "final.cnf",
        "best": "best.cnf",
        "manifest": "manifest.json",
    }
    initial = materialize_initial(config)
    write_dimacs_file(initial, outdir / files["initial"])
    config_echo = config_to_dict(config, initial_path=files["initial"])

    manifest = {
        "version": __version__,
        "rng": RNG_ALGORITHM,
        "config": config_echo,
        "started": started,
        "finished": None,
        "interrupted": False,
        "files": files,
    }
    sinks: list = []
    trace = CsvTraceSink(outdir / files["trace"], seed=config.seed)
    sinks.append(trace)
    if snapshot_every:
        sinks.append(SnapshotSink(outdir / "snapshots", snapshot_every))
        files["snapshots"] = "snapshots"
    try:
        result = evolve(replace(config, initial=initial), sinks)
    except KeyboardInterrupt:
        manifest["interrupted"] = True
        raise
    finally:
        trace.close()
        manifest["finished"] = _now()
        if manifest["interrupted"]:
            (outdir / files["manifest"]).write_text(json.dumps(manifest, indent=2) + "\n")

    write_dimacs_file(result.final, outdir / files["final"])
    best = result.best
    if best is not None:
        write_dimacs_file(best.formula, outdir / files["best"])
    else:
        del files["best"]
    metric = config.stages[-1].metric
    manifest.update(
        metric=metric.value,
        initial_stats=_stats_dict(result.initial_stats),
        final_stats=_stats_dict(result.final_stats),
        best_stats=_stats_dict(best.stats if best else None),
        best_generation=best.generation if best else None,
        initial_score=metric.of(result.initial_stats),
        final_score=metric.of(result.final_stats),
        best_score=best.score if best else None,
        final_clauses=len(result.final.clauses),
        stage_ends=result.stage_ends,
    )
    (outdir / files["manifest"]).write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest


def cmd_evolve(args) -> int:
    config = build_config(args)
    outdir = Path(args.output)
    manifest = run_evolution(config, outdir, args.snapshot_every)
    print(
        f"{manifest['metric']}: initial {manifest['initial_score']} -> final "
        f"{manifest['final_score']} (best {manifest['best_score']}), "
        f"{manifest['final_clauses']} clauses; outputs in {outdir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------- batch


def _batch_worker(job: tuple[int, EvolutionConfig, str, Optional[int]]) -> dict:
    index, config, outdir, snapshot_every = job
    row = {"run": index, "seed": config.seed}
    try:
        manifest = run_evolution(config, Path(outdir), snapshot_every)
    except KeyboardInterrupt:
        raise
    except Exception as exc:  # one failed run must not sink the batch
        log.exception("run %d failed", index)
        row["error"] = f"{type(exc).__name__}: {exc}"
        return row
    row.update(
        initial_score=manifest["initial_score"],
        final_score=manifest["final_score"],
        best_score=manifest["best_score"],
        initial_decisions=manifest["initial_stats"]["decisions"],
        final_decisions=manifest["final_stats"]["decisions"],
        initial_propagations=manifest["initial_stats"]["propagations"],
        final_propagations=manifest["final_stats"]["propagations"],
        final_clauses=manifest["final_clauses"],
        final_status=manifest["final_stats"]["status"],
        error="",
    )
    return row


def run_batch(
    spec: BatchSpec, outdir: Path, workers: int = 1, snapshot_every: Optional[int] = None
) -> list[dict]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (i, cfg, str(outdir / f"run{i:03d}"), snapshot_every)
        for i, cfg in enumerate(spec.configs())
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_batch_worker, jobs))
    else:
        rows = [_batch_worker(job) for job in jobs]
    with open(outdir / "summary.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return rows


def cmd_batch(args) -> int:
    if args.spec:
        spec = load_batch_spec(args.spec)
    else:
        base = build_config(args)
        spec = BatchSpec(
            base=base,
            num_runs=args.runs,
            base_seed=args.seed if args.seed is not None else 0,
            seed_increment=args.seed_increment,
        )
    rows = run_batch(spec, Path(args.output), args.workers, args.snapshot_every)
    failed = [r for r in rows if r.get("error")]
    print(f"{len(rows) - len(failed)}/{len(rows)} runs succeeded; summary in {args.output}/summary.csv")
    return EXIT_OK


# ---------------------------------------------------------------- crosscheck


def external_spec_from_args(args) -> ExternalSolverSpec:
    patterns: dict[str, str] = {}
    if args.solver_preset:
        patterns.update(SOLVER_PRESETS[args.solver_preset])
    for item in args.pattern or ():
        name, sep, rx = item.partition("=")
        if not sep or not name:
            raise UsageError(f"--pattern expects NAME=REGEX, got {item!r}")
        patterns[name] = rx
    if not patterns:
        raise UsageError("give --solver-preset or at least one --pattern")
    exe = args.solver
    resolved = exe if os.path.sep in exe else None
    if resolved is None:
        from shutil import which

        resolved = which(exe)
    if resolved is None or not os.access(resolved, os.X_OK):
        raise UsageError(f"solver executable not found or not executable: {exe}")
    return ExternalSolverSpec(resolved, patterns, tuple(args.solver_arg or ()), args.timeout)


def cmd_crosscheck(args) -> int:
    spec = external_spec_from_args(args)
    initial = read_dimacs_file(args.initial)
    final = read_dimacs_file(args.final)
    report = transfer_report(initial, final, spec)
    if args.json:
        print(json.dumps(report.as_dict()))
    else:
        print(f"initial: {report.initial.status.value} {report.initial.counters}")
        print(f"final:   {report.final.status.value} {report.final.counters}")
        for name in spec.stat_patterns:
            if name in report.ratios:
                print(f"ratio {name}: {report.ratios[name]:.3f}")
            else:
                print(f"ratio {name}: absent (pattern did not match)")
    if args.report:
        Path(args.report).write_text(json.dumps(report.as_dict(), indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_solver_flags(p: argparse.ArgumentParser, default_heuristic: Optional[str]) -> None:
    p.add_argument("--heuristic", choices=[h.value for h in Heuristic], default=default_heuristic)
    p.add_argument("--solver-seed", type=int, help="seed for the random heuristic")
    p.add_argument("--negative-first", action="store_true", help="try the negative phase first")
    p.add_argument("--decision-limit", type=int)


def _add_evolution_flags(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--preset", choices=["fig1", "two-stage-unsat"])
    src.add_argument("--config", help="JSON config or run manifest")
    p.add_argument("-n", type=int, help="number of variables")
    p.add_argument("-m", type=int, help="initial number of clauses")
    p.add_argument("-k", type=int, help="clause width")
    p.add_argument("--initial", help="start from this DIMACS file instead of a random formula")
    p.add_argument("--seed", type=int)
    p.add_argument("--generations", type=int, help="fig1: total; two-stage: stage-2 generations")
    p.add_argument("--stage1-per-clause", type=float, help="two-stage: stage-1 budget per clause")
    p.add_argument("--ratio", type=float, help="two-stage: initial clause/variable ratio")
    p.add_argument("--metric", choices=[m.value for m in Metric])
    _add_solver_flags(p, None)
    p.add_argument(
        "--break-window",
        type=int,
        nargs="?",
        const=DEFAULT_BREAK_WINDOW,
        help=f"enable breaks after this many stagnant generations (default {DEFAULT_BREAK_WINDOW})",
    )
    p.add_argument("--break-size", type=int)
    p.add_argument("--weighted", action="store_true", help="weight-biased clause selection")
    p.add_argument("--record-every", type=int)
    p.add_argument("--snapshot-every", type=int, help="write the current formula every N generations")
    p.add_argument("-o", "--output", required=True, help="output directory")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardsat", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a random k-CNF formula")
    p.add_argument("-n", type=int, required=True)
    p.add_argument("-m", type=int, required=True)
    p.add_argument("-k", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="solve a DIMACS file and report effort counters")
    p.add_argument("input")
    _add_solver_flags(p, Heuristic.STATIC_MIN_INDEX.value)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--json", action="store_true", help="one JSON record")
    mode.add_argument("-q", "--quiet", action="store_true", help="no output; exit 10 SAT / 20 UNSAT")
    p.add_argument("--model", action="store_true", help="print the model on SAT")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evolve", help="evolve a formula toward hardness")
    _add_evolution_flags(p)
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("batch", help="independent evolutions with consecutive seeds")
    p.add_argument("spec", nargs="?", help="batch spec JSON; otherwise built from the flags")
    _add_evolution_flags(p)
    p.add_argument("--runs", type=int, default=1)
    p.add_argument("--seed-increment", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("crosscheck", help="compare two formulas with an external solver")
    p.add_argument("initial")
    p.add_argument("final")
    p.add_argument("--solver", required=True, help="solver executable")
    p.add_argument("--solver-arg", action="append", help="extra argument (repeatable)")
    p.add_argument("--solver-preset", choices=sorted(SOLVER_PRESETS))
    p.add_argument("--pattern", action="append", help="NAME=REGEX counter pattern (repeatable)")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--json", action="store_true")
    p.add_argument("--report", help="also write the report as JSON here")
    p.set_defaults(func=cmd_crosscheck)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (UsageError, ConfigError, InvalidSpecError) as exc:
        print(f"hardsat {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DimacsError as exc:
        print(f"hardsat {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (OSError, ExternalSolverError) as exc:
        print(f"hardsat {args.command}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except KeyboardInterrupt:
        print(f"hardsat {args.command}: interrupted", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
