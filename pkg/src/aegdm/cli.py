"""Command-line front end: run experiments, grid-search rates, compare methods.

Exit codes: 0 when the run completed and every attached check passed,
1 on a run or configuration error, 2 when a stability invariant failed.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import diagnostics, harness
from .harness import ConfigError, ExperimentConfig, Schedule

EXIT_OK = 0
EXIT_RUN_ERROR = 1
EXIT_INVARIANT_FAILURE = 2


def _parse_schedule(spec: str) -> Schedule:
    if spec == "constant":
        return Schedule()
    if spec.startswith("step_decay:"):
        body = spec.split(":", 1)[1]
        factor_str, at_str = body.split("@", 1)
        return Schedule(kind="step_decay", factor=float(factor_str),
                        at_step=int(at_str))
    raise ConfigError(
        f"schedule must be 'constant' or 'step_decay:FACTOR@STEP', got {spec!r}"
    )


def _add_override_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="sectioned key=value config file")
    parser.add_argument("--optimizer", choices=harness.OPTIMIZERS)
    parser.add_argument("--problem", choices=sorted(harness._PROBLEM_KEYS))
    parser.add_argument("--lr", type=float)
    parser.add_argument("--mu", type=float)
    parser.add_argument("--c", type=float)
    parser.add_argument("--iters", type=int)
    parser.add_argument("--batch-size", type=int, dest="batch_size")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--schedule", help="constant or step_decay:FACTOR@STEP")
    parser.add_argument("--theta0", help="comma-separated start point")
    parser.add_argument("--projection", help="lo,hi box or 'none'")
    parser.add_argument("--granularity", choices=("full", "scalar_only"))
    parser.add_argument("--out", help="trace CSV path")
    parser.add_argument("--reports", help="bound-report lines path")


def _build_config(args) -> ExperimentConfig:
    config = harness.load_config(args.config) if args.config \
        else harness.parse_config("")
    if args.optimizer:
        config = replace(config, optimizer=args.optimizer)
        if args.lr is None and "lr" not in _file_keys(args, "optimizer"):
            config = replace(config, hyper=replace(
                config.hyper, eta=harness.DEFAULT_LR[args.optimizer]))
    hyper = config.hyper
    if args.lr is not None:
        if not args.lr > 0:
            raise ConfigError(f"lr must be positive, got {args.lr}")
        hyper = replace(hyper, eta=args.lr)
    if args.mu is not None:
        if not 0.0 <= args.mu < 1.0:
            raise ConfigError(f"mu must lie in [0, 1), got {args.mu}")
        hyper = replace(hyper, mu=args.mu)
    if args.c is not None:
        hyper = replace(hyper, c=args.c)
    config = replace(config, hyper=hyper)
    if args.problem:
        config = replace(config, problem=args.problem, problem_params={})
    if args.iters is not None:
        if args.iters < 1:
            raise ConfigError(f"iters must be >= 1, got {args.iters}")
        config = replace(config, iters=args.iters)
    if args.batch_size is not None:
        config = replace(config, batch_size=args.batch_size)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.schedule:
        config = replace(config, schedule=_parse_schedule(args.schedule))
    if args.theta0:
        config = replace(
            config, theta0=tuple(float(tok) for tok in args.theta0.split(",")))
    if args.projection:
        if args.projection == "none":
            config = replace(config, projection=None)
        else:
            lo, hi = (float(tok) for tok in args.projection.split(","))
            config = replace(config, projection=(lo, hi))
    if args.granularity:
        config = replace(config, granularity=args.granularity)
    if args.out:
        config = replace(config, trace_path=args.out)
    if args.reports:
        config = replace(config, reports_path=args.reports)
    return config


def _file_keys(args, section: str) -> set:
    if not args.config:
        return set()
    with open(args.config, "r", encoding="utf-8") as fh:
        sections = harness._parse_sections(fh.read())
    return set(sections.get(section, {}))


def _cmd_run(args) -> int:
    config = _build_config(args)
    result = harness.run_experiment(config)
    for report in result.reports:
        print(diagnostics.format_report_line(report))
    print(f"iterations={result.iterations} wall_time={result.wall_time:.3f}s "
          f"final_f={'' if result.final_f is None else f'{result.final_f:.6g}'}")
    if result.aborted and result.aborted != "target_gap_reached":
        print(f"aborted: {result.aborted}", file=sys.stderr)
        return EXIT_RUN_ERROR
    if any(not report.satisfied for report in result.reports):
        print("invariant failure: energy stability check did not pass",
              file=sys.stderr)
        return EXIT_INVARIANT_FAILURE
    return EXIT_OK


def _cmd_grid(args) -> int:
    config = _build_config(args)
    candidates = [float(tok) for tok in args.lrs.split(",")]
    best, rows = harness.grid_search(config, candidates,
                                     criterion=args.criterion, gap=args.gap)
    for row in rows:
        print(f"lr={row['lr']:g} score={row['score']:g} "
              f"final_f={'' if row['final_f'] is None else f'{row['final_f']:.6g}'} "
              f"iters={row['iterations_to_gap']} {row['aborted']}")
    print(f"best lr={best.hyper.eta:g}")
    if args.out:
        harness.emit_grid_csv(rows, args.out)
    return EXIT_OK


def _cmd_compare(args) -> int:
    base = _build_config(args)
    names = args.optimizers.split(",")
    lrs = [float(tok) for tok in args.lrs.split(",")] if args.lrs else None
    if lrs is not None and len(lrs) != len(names):
        raise ConfigError("--lrs must list one rate per optimizer")
    configs = []
    for i, name in enumerate(names):
        if name not in harness.OPTIMIZERS:
            raise ConfigError(f"unknown optimizer {name!r}")
        eta = lrs[i] if lrs is not None else harness.DEFAULT_LR[name]
        configs.append(replace(base, optimizer=name,
                               hyper=replace(base.hyper, eta=eta)))
    results, summary = harness.compare_optimizers(configs)
    for label, entry in summary.items():
        parts = [f"{key}={value}" for key, value in entry.items()]
        print(f"{label}: " + " ".join(parts))
    if args.out:
        harness.emit_comparison_csv(results, args.out)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="aegdm",
        description="Energy-stable optimizer benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment")
    _add_override_flags(run_p)

    grid_p = sub.add_parser("grid", help="grid-search the base learning rate")
    _add_override_flags(grid_p)
    grid_p.add_argument("--lrs", required=True,
                        help="comma-separated candidate rates")
    grid_p.add_argument("--criterion", default="iterations_to_gap",
                        choices=("final_f", "iterations_to_gap"))
    grid_p.add_argument("--gap", type=float, default=1e-6)

    cmp_p = sub.add_parser("compare", help="run several optimizers side by side")
    _add_override_flags(cmp_p)
    cmp_p.add_argument("--optimizers", required=True,
                       help="comma-separated optimizer names")
    cmp_p.add_argument("--lrs", help="comma-separated rates, one per optimizer")

    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "grid":
            return _cmd_grid(args)
        return _cmd_compare(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_RUN_ERROR
    except (harness.MismatchedProblem, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUN_ERROR


if __name__ == "__main__":
    sys.exit(main())
