"""Command-line entry point.

Subcommands:
  run            simulate one scenario file, write a report
  sweep          saturation sweep over a load list for each configured policy
  replay-figures check the five golden micro-scenarios against stored logs

Exit codes: 0 success, 1 runtime error or golden divergence, 2 invalid
configuration.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import goldens
from .report import write_report_csv, write_report_json
from .scenario import load_scenario_file
from .sim import ScenarioError, run_scenario, saturation_sweep


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rnnbatchsim")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run one scenario")
    run.add_argument("config")
    run.add_argument("--output", default="report.csv")
    run.add_argument("--format", choices=("csv", "json"), default="csv")
    run.add_argument("--seed", type=int, default=None, help="override sim.seed")

    sweep = sub.add_parser("sweep", help="load sweep per configured policy")
    sweep.add_argument("config")
    sweep.add_argument("--loads", required=True,
                       help="comma-separated offered loads in requests/s")
    sweep.add_argument("--output", default="sweep.csv")
    sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    sweep.add_argument("--seed", type=int, default=None)
    sweep.add_argument("--jobs", type=int, default=1)

    replay = sub.add_parser("replay-figures", help="verify golden schedules")
    replay.add_argument("--bless", action="store_true",
                        help="regenerate the stored golden logs")
    return p


def _apply_seed(scenarios, seed):
    if seed is None:
        return scenarios
    return [replace(s, sim=replace(s.sim, seed=seed)) for s in scenarios]


def _write(reports, output, fmt):
    if fmt == "json":
        write_report_json(reports, output)
    else:
        write_report_csv(reports, output)


def cmd_run(args) -> int:
    scenarios = _apply_seed(load_scenario_file(args.config), args.seed)
    if len(scenarios) != 1:
        raise ScenarioError("policy: 'run' needs exactly one policy block")
    report = run_scenario(scenarios[0])
    _write([report], args.output, args.format)
    print(f"wrote {args.output}")
    return 0


def cmd_sweep(args) -> int:
    try:
        loads = [float(x) for x in args.loads.split(",") if x.strip()]
    except ValueError as exc:
        raise ScenarioError(f"--loads: {exc}") from exc
    if not loads:
        raise ScenarioError("--loads: empty load list")
    scenarios = _apply_seed(load_scenario_file(args.config), args.seed)
    reports = []
    for scenario in scenarios:
        for _, report in saturation_sweep(scenario, loads, jobs=args.jobs):
            reports.append(report)
    _write(reports, args.output, args.format)
    print(f"wrote {args.output} ({len(reports)} rows)")
    return 0


def cmd_replay_figures(args) -> int:
    if args.bless:
        goldens.bless()
        print("golden logs regenerated")
        return 0
    failed = False
    for name, diff in goldens.replay_all():
        if diff is None:
            print(f"{name}: ok")
        else:
            print(f"{name}: DIVERGED\n{diff}")
            failed = True
    return 1 if failed else 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep,
                "replay-figures": cmd_replay_figures}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
