"""Command-line harness.

Subcommands: ``build-acr`` (category table from logs), ``infer`` (probe one
object kind against a catalog), ``plan-bench``, ``explore-bench`` and
``rl-bench`` (the benchmark protocols).  Exit codes: 0 success, 1 usage,
2 data error, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .acr import LogFormatError, save_acr
from .catalog import canonical_catalog, load_catalog
from .experiments import (
    RL_CONDITIONS,
    TotalBudgetExceeded,
    build_acr_from_logs,
    format_category_table,
    rl_condition,
    run_exploration_bench,
    run_formation_bench,
    run_rl_matrix,
    write_rl_outputs,
)
from .inference import HypothesisSet, ProbeStrategy, infer_category
from .lightworld import MapFormatError, canonical_map, load_map
from .rl import RLParams

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BUDGET = 3

_STRATEGIES = {s.value: s for s in ProbeStrategy}


class _UsageExit(SystemExit):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise _UsageExit(EXIT_USAGE)


def _build_parser() -> _Parser:
    parser = _Parser(prog="acrlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "build-acr", help="build the category graph from action-code logs"
    )
    p.add_argument("logs", nargs="+", help="JSON-lines action-code log files")
    p.add_argument("-o", "--output", default="acr.json", help="export file path")

    p = sub.add_parser("infer", help="probe one object kind against a catalog")
    p.add_argument("--catalog", required=True)
    p.add_argument("--object", dest="kind", required=True)
    p.add_argument("--strategy", choices=sorted(_STRATEGIES), default="paper")

    p = sub.add_parser("plan-bench", help="formation planning benchmark")
    p.add_argument("--max-units", type=int, default=5)
    p.add_argument("--grid", default="5x5", help="WxH, e.g. 5x5")
    p.add_argument("--budget-s", type=float, default=60.0,
                   help="wall-clock cap per search cell")
    p.add_argument("--total-budget-s", type=float, default=None)
    p.add_argument("-o", "--out", default="out")

    p = sub.add_parser("explore-bench", help="exploration probe-count benchmark")
    p.add_argument("--catalog", default=None,
                   help="catalog JSON (defaults to the bundled canonical one)")
    p.add_argument("--build-order", action="append", default=None,
                   help="order name; repeatable (default: all)")
    p.add_argument("-o", "--out", default=None)

    p = sub.add_parser("rl-bench", help="gridworld learning benchmark")
    p.add_argument("--map", dest="map_path", default=None,
                   help="map file (defaults to the bundled canonical map)")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--episodes", type=int, default=1000)
    p.add_argument("--max-steps", type=int, default=500)
    p.add_argument("--alpha", type=float, default=0.25)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--n-acr", type=int, default=50)
    p.add_argument("--n-hat", type=int, default=50)
    p.add_argument("--agents", default=None,
                   help="comma-separated condition names (default: all)")
    p.add_argument("-o", "--out", default="out")
    return parser


def _cmd_build_acr(args) -> int:
    try:
        graph, categories = build_acr_from_logs(args.logs)
    except FileNotFoundError as exc:
        print(f"acrlab: {exc}", file=sys.stderr)
        return EXIT_DATA
    except LogFormatError as exc:
        print(f"acrlab: {exc}", file=sys.stderr)
        return EXIT_DATA
    if not len(categories):
        print("warning: no action codes found; export is empty", file=sys.stderr)
    save_acr(args.output, graph, categories)
    print(format_category_table(categories))
    print(f"wrote {args.output}")
    return EXIT_OK


def _cmd_infer(args) -> int:
    try:
        catalog = load_catalog(args.catalog)
        oracle = catalog.oracle(args.kind)
    except (OSError, ValueError, KeyError) as exc:
        print(f"acrlab: {exc}", file=sys.stderr)
        return EXIT_DATA
    report = infer_category(
        oracle,
        HypothesisSet(catalog.categories.categories),
        catalog.actions,
        _STRATEGIES[args.strategy],
    )
    print(json.dumps(report.to_json_dict(), indent=2))
    return EXIT_OK


def _cmd_plan_bench(args) -> int:
    try:
        width, height = (int(v) for v in args.grid.lower().split("x"))
    except ValueError:
        print(f"acrlab: bad --grid {args.grid!r}; expected WxH", file=sys.stderr)
        return EXIT_DATA
    try:
        cells = run_formation_bench(
            max_units=args.max_units,
            width=width,
            height=height,
            budget_s=args.budget_s,
            total_budget_s=args.total_budget_s,
            out_dir=args.out,
        )
    except TotalBudgetExceeded as exc:
        print(f"acrlab: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except ValueError as exc:
        print(f"acrlab: {exc}", file=sys.stderr)
        return EXIT_DATA
    for cell in cells:
        mark = " (censored)" if cell.censored else ""
        print(
            f"n={cell.n_units} {cell.mode:>8}: expanded={cell.expanded} "
            f"time={cell.time_ms:.1f}ms plan={cell.plan_length}{mark}"
        )
    print(f"wrote {Path(args.out) / 'results.csv'}")
    return EXIT_OK


def _cmd_explore_bench(args) -> int:
    try:
        catalog = (
            load_catalog(args.catalog) if args.catalog else canonical_catalog()
        )
        names = args.build_order
        if names:
            for name in names:
                if name not in catalog.build_orders:
                    raise ValueError(f"unknown build order {name!r}")
        table = run_exploration_bench(catalog, order_names=names, out_dir=args.out)
    except (OSError, ValueError) as exc:
        print(f"acrlab: {exc}", file=sys.stderr)
        return EXIT_DATA
    for row in sorted(table.rows, key=lambda r: r.sort_key()):
        if row.metric == "total_a_obj":
            print(f"{row.condition:>28}: total probes = {row.value}")
    if args.out:
        print(f"wrote {Path(args.out) / 'exploration.csv'}")
    return EXIT_OK


def _cmd_rl_bench(args) -> int:
    try:
        if args.map_path:
            grid = load_map(Path(args.map_path).read_text(encoding="utf-8"))
        else:
            grid = canonical_map()
        params = RLParams(
            alpha=args.alpha,
            gamma=args.gamma,
            epsilon=args.epsilon,
            n_acr=args.n_acr,
            n_hat=args.n_hat,
            episodes=args.episodes,
            max_steps=args.max_steps,
        )
        if args.agents:
            conditions = tuple(
                rl_condition(name.strip()) for name in args.agents.split(",")
            )
        else:
            conditions = RL_CONDITIONS
    except (OSError, MapFormatError, ValueError) as exc:
        print(f"acrlab: {exc}", file=sys.stderr)
        return EXIT_DATA
    seeds = list(range(args.base_seed, args.base_seed + args.seeds))
    curves = run_rl_matrix(grid, seeds, params, conditions=conditions)
    write_rl_outputs(curves, seeds, params, args.out, conditions=conditions, grid=grid)
    for cond in conditions:
        convs = [curves[(cond.name, s)].convergence_episode for s in seeds]
        print(f"{cond.name:>20}: mean convergence episode = "
              f"{sum(convs) / len(convs):.1f}")
    print(f"wrote {Path(args.out) / 'curves.csv'}")
    return EXIT_OK


_COMMANDS = {
    "build-acr": _cmd_build_acr,
    "infer": _cmd_infer,
    "plan-bench": _cmd_plan_bench,
    "explore-bench": _cmd_explore_bench,
    "rl-bench": _cmd_rl_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageExit as exc:
        return int(exc.code)
    return _COMMANDS[args.command](args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
