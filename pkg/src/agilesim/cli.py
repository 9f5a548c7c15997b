"""Batch command-line interface.

Subcommands: ``simulate`` (run scenarios, optionally comparing both
allocators on identical seeds), ``fcm`` (iterate a concept map and
report its attractor), ``goalnet`` (build and export a goal net from a
story corpus), and ``ingest`` (sprint-log metrics).

Exit codes: 0 success, 1 runtime invariant breach, 2 usage or input
error. The default output directory comes from the AGILESIM_OUT
environment variable when set.

CSV contracts (all files carry a header row):

* ``utility.csv``: day, run, allocator, cumulative_utility
* ``allocation.csv``: agent, category, share, allocator
* ``queues.csv``: day, agent, pending_workload, congestion, allocator
  (series from the first repetition)
* ``summary.csv``: scenario, allocator, repetitions, mean_utility,
  std_utility, mean_completed, mean_delay_pct
* ``trajectory.csv``: iteration, then one column per map node
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

from . import __version__, core, fcm, goalnet, metrics, simulation


class CliInputError(ValueError):
    """Bad input reported with exit code 2."""


def _default_out() -> str:
    return os.environ.get("AGILESIM_OUT", "agilesim-out")


def _open_csv(path: Path):
    return open(path, "w", encoding="utf-8", newline="")


def _load_scenario_arg(args) -> core.ScenarioConfig:
    if args.preset:
        try:
            config = core.preset(args.preset)
        except core.UnknownPresetError as exc:
            raise CliInputError(str(exc.args[0])) from None
    else:
        try:
            config = core.load_scenario(args.scenario)
        except FileNotFoundError:
            raise CliInputError(f"scenario file not found: {args.scenario}") from None
        except (json.JSONDecodeError, core.ScenarioValidationError) as exc:
            raise CliInputError(f"invalid scenario file: {exc}") from None
    allocator = core.Allocator(args.allocator) if args.allocator else None
    return core.with_overrides(
        config,
        seed=args.seed,
        allocator=allocator,
        repetitions=args.repetitions,
    )


def _write_simulation_outputs(
    out_dir: Path, results: dict[str, simulation.RepeatedResult]
) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with _open_csv(out_dir / "utility.csv") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["day", "run", "allocator", "cumulative_utility"])
        for allocator, repeated in results.items():
            for run_index, result in enumerate(repeated.runs):
                for day, value in enumerate(result.cumulative_utility()):
                    writer.writerow([day, run_index, allocator, repr(value)])

    with _open_csv(out_dir / "allocation.csv") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["agent", "category", "share", "allocator"])
        for allocator, repeated in results.items():
            share_sums: dict[str, float] = {}
            counted = 0
            for result in repeated.runs:
                try:
                    report = metrics.allocation_proportion(result)
                except metrics.MetricsError:
                    continue
                counted += 1
                for agent, share in report.by_agent.items():
                    share_sums[agent] = share_sums.get(agent, 0.0) + share
            if not counted:
                continue
            categories = repeated.runs[0].categories
            for agent in repeated.runs[0].agent_ids:
                writer.writerow(
                    [
                        agent,
                        categories[agent],
                        repr(share_sums.get(agent, 0.0) / counted),
                        allocator,
                    ]
                )

    with _open_csv(out_dir / "queues.csv") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["day", "agent", "pending_workload", "congestion", "allocator"])
        for allocator, repeated in results.items():
            first = repeated.runs[0]
            for day in range(first.horizon):
                for agent in first.agent_ids:
                    writer.writerow(
                        [
                            day,
                            agent,
                            repr(first.pending_workload[agent][day]),
                            repr(first.congestion[day]),
                            allocator,
                        ]
                    )

    with _open_csv(out_dir / "summary.csv") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(
            [
                "scenario",
                "allocator",
                "repetitions",
                "mean_utility",
                "std_utility",
                "mean_completed",
                "mean_delay_pct",
            ]
        )
        for allocator, repeated in results.items():
            completed = repeated.mean["completed_count"]
            delays = repeated.mean["delay_count"]
            delay_pct = delays / completed if completed else 0.0
            writer.writerow(
                [
                    repeated.runs[0].scenario,
                    allocator,
                    len(repeated.runs),
                    repr(repeated.mean["global_utility"]),
                    repr(repeated.std["global_utility"]),
                    repr(completed),
                    repr(delay_pct),
                ]
            )


def _simulate_one(config: core.ScenarioConfig, compare: bool, out_dir: Path) -> None:
    if compare:
        pair = {}
        for allocator in (core.Allocator.SMART, core.Allocator.AWR):
            variant = core.with_overrides(config, allocator=allocator)
            pair[allocator.value] = simulation.run_repeated(variant)
        results = pair
    else:
        results = {config.allocator.value: simulation.run_repeated(config)}
    _write_simulation_outputs(out_dir, results)
    for allocator, repeated in results.items():
        print(
            f"{config.name} {allocator}: mean utility "
            f"{repeated.mean['global_utility']:.1f} "
            f"(sd {repeated.std['global_utility']:.1f}) over "
            f"{len(repeated.runs)} runs"
        )
    if compare:
        smart = results[core.Allocator.SMART.value].mean["global_utility"]
        awr = results[core.Allocator.AWR.value].mean["global_utility"]
        verdict = ">" if smart > awr else ("=" if smart == awr else "<")
        print(f"{config.name}: SMART {smart:.1f} {verdict} AWR {awr:.1f}")


def cmd_simulate(args) -> int:
    out_root = Path(args.out)
    if args.all_presets:
        for name in core.PRESET_NAMES:
            config = core.preset(name)
            allocator = core.Allocator(args.allocator) if args.allocator else None
            config = core.with_overrides(
                config,
                seed=args.seed,
                allocator=allocator,
                repetitions=args.repetitions,
            )
            _simulate_one(config, args.compare, out_root / name)
        return 0
    config = _load_scenario_arg(args)
    _simulate_one(config, args.compare, out_root)
    return 0


def cmd_fcm(args) -> int:
    map_arg = args.map
    if map_arg in fcm.bundled_map_names():
        cmap = fcm.bundled_map(map_arg)
    else:
        try:
            cmap = fcm.load_map(map_arg)
        except FileNotFoundError:
            raise CliInputError(f"map file not found: {map_arg}") from None
        except (json.JSONDecodeError, ValueError) as exc:
            raise CliInputError(f"invalid map file: {exc}") from None
    if args.transform or args.c is not None:
        from dataclasses import replace

        cmap = replace(
            cmap,
            transform=args.transform or cmap.transform,
            c=args.c if args.c is not None else cmap.c,
        )
    try:
        values = tuple(float(part) for part in args.initial.split(","))
    except ValueError:
        raise CliInputError(f"cannot parse initial state {args.initial!r}") from None
    if len(values) != cmap.node_count:
        raise CliInputError(
            f"initial state has {len(values)} values for a "
            f"{cmap.node_count}-node map"
        )
    trajectory = fcm.run(
        cmap,
        fcm.StateVector(values=values),
        max_iter=args.max_iter,
        tol=args.tol,
    )
    final = trajectory.final
    rendered = ", ".join(f"{v:.6f}" for v in final.values)
    print(f"terminal: {trajectory.terminal} at iteration {final.iteration}")
    print(f"state: ({rendered})")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "trajectory.csv").write_text(
        fcm.trajectory_to_csv(trajectory, cmap.labels), encoding="utf-8"
    )
    return 0


def cmd_goalnet(args) -> int:
    try:
        stories = goalnet.load_stories(args.stories)
    except FileNotFoundError:
        raise CliInputError(f"stories file not found: {args.stories}") from None
    except (goalnet.StoryParseError, goalnet.GoalNetError, json.JSONDecodeError) as exc:
        raise CliInputError(f"invalid stories file: {exc}") from None
    try:
        goals, assignment, root_label = goalnet.load_goals(args.goals)
    except FileNotFoundError:
        raise CliInputError(f"goals file not found: {args.goals}") from None
    except (goalnet.GoalNetError, json.JSONDecodeError) as exc:
        raise CliInputError(f"invalid goals file: {exc}") from None
    try:
        net = goalnet.build_goal_net(stories, goals, assignment, root_label=root_label)
    except goalnet.GoalNetError as exc:
        raise CliInputError(str(exc)) from None
    violations = goalnet.validate_net(net)
    if violations:
        for violation in violations:
            print(f"violation: {violation}", file=sys.stderr)
        return 1
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    goalnet.save_net(net, out_dir / "net.json")
    (out_dir / "net.dot").write_text(goalnet.export_dot(net), encoding="utf-8")
    print(
        f"valid goal net: {len(net.nodes)} nodes, {net.levels()} levels, "
        f"{len(net.transitions)} transitions, {len(net.cards)} cards"
    )
    return 0


def cmd_ingest(args) -> int:
    try:
        records = metrics.ingest_log(args.log)
    except FileNotFoundError:
        raise CliInputError(f"log file not found: {args.log}") from None
    except metrics.LogSchemaError as exc:
        for error in exc.errors:
            print(f"error: {error}", file=sys.stderr)
        return 2
    if not records:
        raise CliInputError("no records")
    agents = sorted({record.assignee_id for record in records})
    competence = {agent: metrics.competence(records, agent) for agent in agents}
    productivity = {
        agent: metrics.technical_productivity(records, agent) for agent in agents
    }
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with _open_csv(out_dir / "competence.csv") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["agent", "competence"])
        for agent in agents:
            writer.writerow([agent, repr(competence[agent])])
    with _open_csv(out_dir / "productivity.csv") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["agent", "productivity"])
        for agent in agents:
            writer.writerow([agent, repr(productivity[agent])])
    delay = metrics.delay_percentage(records)
    print(f"records: {len(records)} across {len(agents)} agents")
    print(f"delay percentage: {delay:.4f}")
    for agent in agents:
        print(
            f"{agent}: competence {competence[agent]:.4f}, "
            f"productivity {productivity[agent]:.2f}"
        )
    series = {"competence": competence, "productivity": productivity}
    if args.correlate:
        rows = []
        for spec in args.correlate:
            try:
                left, right = spec.split(":", 1)
            except ValueError:
                raise CliInputError(
                    f"--correlate expects NAME:NAME (got {spec!r})"
                ) from None
            if left not in series or right not in series:
                raise CliInputError(
                    f"unknown correlation series in {spec!r}; "
                    f"available: {', '.join(sorted(series))}"
                )
            x = [series[left][agent] for agent in agents]
            y = [series[right][agent] for agent in agents]
            try:
                r = metrics.pearson(x, y)
            except metrics.MetricsError as exc:
                raise CliInputError(f"correlation {spec}: {exc}") from None
            rows.append((left, right, r, len(agents)))
            print(f"pearson({left}, {right}) = {r:.4f} (n={len(agents)})")
        with _open_csv(out_dir / "correlations.csv") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["x", "y", "r", "n"])
            for left, right, r, n in rows:
                writer.writerow([left, right, repr(r), n])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="agilesim",
        description="Agile-team task allocation simulator and metrics toolkit",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario (or all presets)")
    source = sim.add_mutually_exclusive_group(required=True)
    source.add_argument("--preset", help="preset scenario name (e.g. S-M)")
    source.add_argument("--scenario", help="path to a scenario JSON file")
    source.add_argument(
        "--all-presets", action="store_true", help="run every preset scenario"
    )
    sim.add_argument("--seed", type=int, default=None, help="override the seed")
    sim.add_argument(
        "--allocator", choices=[a.value for a in core.Allocator], default=None
    )
    sim.add_argument(
        "--repetitions", type=int, default=None, help="override repetition count"
    )
    sim.add_argument(
        "--compare",
        action="store_true",
        help="run both allocators on identical seeds and summarize side by side",
    )
    sim.add_argument("--out", default=_default_out(), help="output directory")
    sim.set_defaults(func=cmd_simulate)

    fcm_cmd = sub.add_parser("fcm", help="iterate a concept map to its attractor")
    fcm_cmd.add_argument(
        "--map",
        required=True,
        help="map file path or bundled name "
        f"({', '.join(fcm.bundled_map_names())})",
    )
    fcm_cmd.add_argument(
        "--initial", required=True, help="comma-separated initial node values"
    )
    fcm_cmd.add_argument("--max-iter", type=int, default=200)
    fcm_cmd.add_argument("--tol", type=float, default=1e-6)
    fcm_cmd.add_argument(
        "--transform", choices=(fcm.BIVALENT, fcm.TRIVALENT, fcm.SIGMOID), default=None
    )
    fcm_cmd.add_argument("--c", type=float, default=None, help="sigmoid steepness")
    fcm_cmd.add_argument("--out", default=_default_out())
    fcm_cmd.set_defaults(func=cmd_fcm)

    net_cmd = sub.add_parser("goalnet", help="build a goal net from stories")
    net_cmd.add_argument("--stories", required=True, help="story corpus file")
    net_cmd.add_argument("--goals", required=True, help="high-level goals file")
    net_cmd.add_argument("--out", default=_default_out())
    net_cmd.set_defaults(func=cmd_goalnet)

    ingest_cmd = sub.add_parser("ingest", help="compute metrics from a sprint log")
    ingest_cmd.add_argument("--log", required=True, help="activity log CSV")
    ingest_cmd.add_argument(
        "--correlate",
        action="append",
        default=None,
        metavar="X:Y",
        help="emit the correlation between two per-agent series (repeatable)",
    )
    ingest_cmd.add_argument("--out", default=_default_out())
    ingest_cmd.set_defaults(func=cmd_ingest)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; keep that contract.
        return int(exc.code or 0)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except fcm.DimensionMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except core.ScenarioValidationError as exc:
        for error in exc.errors:
            print(f"error: {error}", file=sys.stderr)
        return 2
    except simulation.SimulationInvariantError as exc:
        print(f"invariant breach: {exc}", file=sys.stderr)
        return 1


def console_main() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
