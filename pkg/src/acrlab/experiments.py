"""Benchmark drivers: category-table building, planning and learning protocols.

Each driver returns plain data and optionally writes CSV/SVG artifacts.
Stochastic experiments report per-seed raw data alongside aggregates, and
directional comparisons use an exact sign test across seeds rather than
single-run differences.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

from .acr import AcrGraph, CategorySet, build_graph, derive_categories, parse_log
from .catalog import SyntheticCatalog
from .charts import Axes, Series, render_svg
from .inference import ProbeStrategy
from .lightworld import GridMap
from .planner import (
    FormationProblem,
    GroundingMode,
    SearchBudgetExceeded,
    exploration_phase,
    formation_acr,
    search,
)
from .results import ResultTable, write_csv
from .rl import (
    OBJECT_KINDS,
    LearningCurve,
    RLParams,
    generate_demos,
    run_training,
)
from .rng import derive_seed

# Independent child-stream salts for demo generation.
_ACR_DEMO_SALT = 0xA1
_HAT_DEMO_SALT = 0xD2


class TotalBudgetExceeded(RuntimeError):
    """The overall wall-clock budget for a benchmark ran out."""


def threads_from_env(default: int | None = None) -> int:
    raw = os.environ.get("ACRLAB_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    if default is not None:
        return default
    return max(1, min(os.cpu_count() or 1, 4))


# ---------------------------------------------------------------------------
# Category-table building
# ---------------------------------------------------------------------------

def build_acr_from_logs(paths) -> tuple[AcrGraph, CategorySet]:
    graph = AcrGraph()
    for path in paths:
        with open(path, "r", encoding="utf-8") as fh:
            for code in parse_log(fh):
                graph.add(code)
    return graph, derive_categories(graph)


def format_category_table(cs: CategorySet) -> str:
    """Fixed-width category/actions/objects table for terminal output."""
    rows = [("category", "actions", "objects")]
    for cat in cs:
        rows.append(
            (
                f"c{cat.id}",
                ", ".join(cat.sorted_actions()),
                ", ".join(cat.sorted_objects()),
            )
        )
    widths = [max(len(row[i]) for row in rows) for i in range(3)]
    lines = []
    for i, row in enumerate(rows):
        lines.append(
            "  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip()
        )
        if i == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Formation planning benchmark
# ---------------------------------------------------------------------------

def formation_problem(width: int, height: int, n_units: int) -> FormationProblem:
    """Canonical benchmark instance: units on the top row, goals mirrored on
    the bottom row."""
    if n_units > width:
        raise ValueError("benchmark instance needs n_units <= width")
    units = tuple(f"u{i + 1}" for i in range(n_units))
    start = tuple((0, c) for c in range(n_units))
    goals = frozenset((height - 1, width - 1 - i) for i in range(n_units))
    return FormationProblem(width, height, units, start, goals)


@dataclass
class FormationCell:
    n_units: int
    mode: str
    expanded: int
    generated: int
    time_ms: float
    plan_length: int | None
    censored: bool


def run_formation_bench(
    max_units: int = 5,
    width: int = 5,
    height: int = 5,
    budget_s: float = 60.0,
    total_budget_s: float | None = None,
    backend: str = "auto",
    out_dir=None,
) -> list[FormationCell]:
    """Both grounding modes for 1..max_units; censored cells carry node counts
    observed before the budget ran out.  Raises TotalBudgetExceeded (after
    writing partial results) if the overall budget lapses."""
    cells: list[FormationCell] = []
    started = time.monotonic()
    exceeded = False
    for n in range(1, max_units + 1):
        problem = formation_problem(width, height, n)
        acr = formation_acr(problem)
        for mode in (GroundingMode.BASELINE, GroundingMode.ACR_TYPED):
            if (
                total_budget_s is not None
                and time.monotonic() - started > total_budget_s
            ):
                exceeded = True
                break
            try:
                _, stats = search(problem, mode, acr, budget_s=budget_s, backend=backend)
            except SearchBudgetExceeded as exc:
                stats = exc.stats
            cells.append(
                FormationCell(
                    n,
                    mode.value,
                    stats.expanded,
                    stats.generated,
                    stats.wall_time_s * 1000.0,
                    stats.plan_length,
                    stats.censored,
                )
            )
        if exceeded:
            break
    if out_dir is not None:
        write_formation_outputs(cells, out_dir, config={
            "experiment": "plan-bench",
            "max_units": max_units,
            "grid": f"{width}x{height}",
            "budget_s": budget_s,
        })
    if exceeded:
        raise TotalBudgetExceeded("plan-bench total budget exceeded")
    return cells


def write_formation_outputs(cells, out_dir, config: dict) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = [
        (
            c.n_units,
            c.mode,
            c.expanded,
            c.generated,
            c.time_ms,
            "" if c.plan_length is None else c.plan_length,
            int(c.censored),
        )
        for c in cells
    ]
    write_csv(
        out / "results.csv",
        ("n_units", "mode", "expanded", "generated", "time_ms", "plan_len", "censored"),
        rows,
        config,
    )
    # Deterministic companion without wall-clock columns (used for
    # reproducibility checks; timings vary run to run).
    write_csv(
        out / "nodes.csv",
        ("n_units", "mode", "expanded", "generated", "plan_len", "censored"),
        [
            (c.n_units, c.mode, c.expanded, c.generated,
             "" if c.plan_length is None else c.plan_length, int(c.censored))
            for c in cells
        ],
        config,
    )
    by_mode: dict[str, list[FormationCell]] = {}
    for c in cells:
        by_mode.setdefault(c.mode, []).append(c)
    node_series = []
    time_series = []
    for mode in sorted(by_mode):
        complete = [c for c in by_mode[mode] if not c.censored]
        if not complete:
            continue
        xs = [c.n_units for c in complete]
        node_series.append(Series(mode, xs, [float(c.expanded) for c in complete]))
        time_series.append(Series(mode, xs, [c.time_ms for c in complete]))
    if node_series:
        (out / "nodes.svg").write_text(
            render_svg(
                node_series,
                Axes("expanded search states", "units", "expanded nodes"),
            ),
            encoding="utf-8",
        )
    if time_series:
        (out / "time.svg").write_text(
            render_svg(time_series, Axes("planning time", "units", "time (ms)")),
            encoding="utf-8",
        )


# ---------------------------------------------------------------------------
# Exploration-phase benchmark
# ---------------------------------------------------------------------------

def run_exploration_bench(
    catalog: SyntheticCatalog,
    order_names=None,
    strategies=(
        ProbeStrategy.PAPER_MIN_ENTROPY,
        ProbeStrategy.MAX_ENTROPY,
        ProbeStrategy.LEXICOGRAPHIC,
    ),
    out_dir=None,
) -> ResultTable:
    table = ResultTable()
    names = sorted(order_names or catalog.build_orders)
    for name in names:
        order = catalog.build_orders[name]
        base = exploration_phase(order, catalog, use_acr=False)
        table.add("explore-bench", f"{name}/baseline", None, "total_a_obj", base.total_a_obj)
        table.add(
            "explore-bench", f"{name}/baseline", None, "unseen_kinds", len(base.reports)
        )
        for strat in strategies:
            rep = exploration_phase(order, catalog, use_acr=True, strategy=strat)
            cond = f"{name}/acr-{strat.value}"
            table.add("explore-bench", cond, None, "total_a_obj", rep.total_a_obj)
            table.add("explore-bench", cond, None, "unseen_kinds", len(rep.reports))
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        table.write_csv(
            out / "exploration.csv",
            {"experiment": "explore-bench", "orders": names},
        )
    return table


# ---------------------------------------------------------------------------
# Learning benchmark
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RLCondition:
    name: str
    agent_kind: str
    demo_quality: str | None = None
    demo_count: int = 0


RL_CONDITIONS = (
    RLCondition("q", "q"),
    RLCondition("acr", "acr"),
    RLCondition("hat-expert-5", "hat", "expert", 5),
    RLCondition("hat-subopt-5", "hat", "suboptimal", 5),
    RLCondition("hat-expert-1", "hat", "expert", 1),
    RLCondition("acr-hat-expert-1", "acr_hat", "expert", 1),
    RLCondition("acr-hat-subopt-5", "acr_hat", "suboptimal", 5),
)
_CONDITIONS_BY_NAME = {c.name: c for c in RL_CONDITIONS}


def rl_condition(name: str) -> RLCondition:
    try:
        return _CONDITIONS_BY_NAME[name]
    except KeyError:
        raise ValueError(f"unknown agent condition {name!r}") from None


def _build_probe_acr(grid: GridMap, seed: int) -> CategorySet:
    """Category set from a single expert demonstration log.

    The expert path performs every object interaction, so the derived
    categories are the same whichever expert demo produced them.
    """
    _, demo_log = generate_demos(grid, "expert", 1, derive_seed(seed, _ACR_DEMO_SALT))
    return derive_categories(build_graph(demo_log))


def run_rl_cell(
    grid: GridMap, condition: RLCondition, seed: int, params: RLParams
) -> LearningCurve:
    """One (condition, seed) training run with its derived demo/category inputs.

    The category-restricted agent re-identifies the object kinds by probing
    (they are withheld as previously unseen); the combined agent checks the
    decision list against the known categories directly.
    """
    run_params = replace(params, seed=seed)
    acr = None
    demos = None
    probe_kinds = ()
    if condition.agent_kind in ("acr", "acr_hat"):
        acr = _build_probe_acr(grid, seed)
    if condition.agent_kind == "acr":
        probe_kinds = OBJECT_KINDS
    if condition.demo_count:
        demos, _ = generate_demos(
            grid,
            condition.demo_quality,
            condition.demo_count,
            derive_seed(seed, _HAT_DEMO_SALT),
        )
    return run_training(
        grid,
        condition.agent_kind,
        run_params,
        acr=acr,
        demos=demos,
        probe_kinds=probe_kinds,
    )


def _rl_cell_task(args):
    grid, condition, seed, params = args
    curve = run_rl_cell(grid, condition, seed, params)
    return condition.name, seed, curve


def run_rl_matrix(
    grid: GridMap,
    seeds,
    params: RLParams,
    conditions=RL_CONDITIONS,
    threads: int | None = None,
) -> dict[tuple[str, int], LearningCurve]:
    """Train every (condition, seed) cell, optionally in parallel processes."""
    tasks = [(grid, cond, seed, params) for cond in conditions for seed in seeds]
    workers = threads if threads is not None else threads_from_env()
    curves: dict[tuple[str, int], LearningCurve] = {}
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for name, seed, curve in pool.map(_rl_cell_task, tasks, chunksize=1):
                curves[(name, seed)] = curve
    else:
        for task in tasks:
            name, seed, curve = _rl_cell_task(task)
            curves[(name, seed)] = curve
    return curves


def mean_reward(curve: LearningCurve, first: int, last: int) -> float:
    """Mean reward over episode indices [first, last)."""
    span = curve.rewards[first:last]
    return sum(span) / len(span)


def sign_test_p(wins: int, losses: int) -> float:
    """One-sided exact binomial tail P[X >= wins | p=1/2]; ties are dropped
    by the caller."""
    n = wins + losses
    if n == 0:
        return 1.0
    return sum(math.comb(n, k) for k in range(wins, n + 1)) / 2.0**n


def paired_sign_test(values_a, values_b) -> tuple[int, int, float]:
    """Per-seed comparison a < b treated as a win for a (lower is better
    callers flip operands); returns (wins, losses, p)."""
    wins = sum(1 for a, b in zip(values_a, values_b) if a < b)
    losses = sum(1 for a, b in zip(values_a, values_b) if a > b)
    return wins, losses, sign_test_p(wins, losses)


def summarize_rl(
    curves: dict[tuple[str, int], LearningCurve], seeds, conditions=RL_CONDITIONS
) -> ResultTable:
    table = ResultTable()
    for cond in conditions:
        convs = []
        mean_steps = []
        for seed in seeds:
            curve = curves[(cond.name, seed)]
            table.add("rl-bench", cond.name, seed, "convergence_episode",
                      curve.convergence_episode)
            per_seed_steps = sum(curve.steps) / len(curve.steps)
            table.add("rl-bench", cond.name, seed, "mean_actions", per_seed_steps)
            convs.append(curve.convergence_episode)
            mean_steps.append(per_seed_steps)
        table.add("rl-bench", cond.name, None, "mean_convergence_episode",
                  sum(convs) / len(convs))
        table.add("rl-bench", cond.name, None, "mean_actions",
                  sum(mean_steps) / len(mean_steps))
    return table


def write_rl_outputs(
    curves: dict[tuple[str, int], LearningCurve],
    seeds,
    params: RLParams,
    out_dir,
    conditions=RL_CONDITIONS,
    grid: GridMap | None = None,
) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    config = {
        "experiment": "rl-bench",
        "seeds": list(seeds),
        "episodes": params.episodes,
        "params": (params.alpha, params.gamma, params.epsilon, params.n_acr,
                   params.n_hat, params.max_steps),
        "conditions": [c.name for c in conditions],
    }
    rows = []
    for cond in conditions:
        for seed in seeds:
            curve = curves[(cond.name, seed)]
            for episode, (reward, steps) in enumerate(
                zip(curve.rewards, curve.steps)
            ):
                rows.append((episode, reward, steps, cond.name, seed))
    rows.sort(key=lambda r: (r[3], r[4], r[0]))
    write_csv(out / "curves.csv", ("episode", "reward", "steps", "agent", "seed"),
              rows, config)
    summarize_rl(curves, seeds, conditions).write_csv(out / "summary.csv", config)

    def curve_series(name: str) -> Series:
        per_seed = [curves[(name, seed)].rewards for seed in seeds]
        episodes = list(range(len(per_seed[0])))
        mean = [sum(col) / len(col) for col in zip(*per_seed)]
        lo = [min(col) for col in zip(*per_seed)]
        hi = [max(col) for col in zip(*per_seed)]
        return Series(name, episodes, mean, band=(lo, hi))

    have = {c.name for c in conditions}
    figures = (
        ("fig-demo-quality.svg", ("q", "acr", "hat-expert-5", "hat-subopt-5"),
         "demonstration quality"),
        ("fig-demo-count.svg", ("q", "acr", "hat-expert-1"),
         "single demonstration"),
        ("fig-combined.svg", ("acr", "hat-expert-1", "acr-hat-expert-1",
                              "acr-hat-subopt-5"),
         "category checks combined with demonstration bootstrapping"),
    )
    for filename, names, title in figures:
        present = [n for n in names if n in have]
        if len(present) < 2:
            continue
        svg = render_svg(
            [curve_series(n) for n in present],
            Axes(title, "episode", "mean reward (min/max band)"),
        )
        (out / filename).write_text(svg, encoding="utf-8")

    if grid is not None:
        _write_demo_artifacts(grid, out, seeds[0], conditions)


def _write_demo_artifacts(grid, out: Path, seed: int, conditions) -> None:
    """Demonstrations for the first seed: (state key, action) JSONL plus the
    companion action-code log."""
    import json

    from .lightworld import state_key

    demo_specs = sorted(
        {(c.demo_quality, c.demo_count) for c in conditions if c.demo_count}
    )
    demo_dir = out / "demos"
    if not demo_specs:
        return
    demo_dir.mkdir(exist_ok=True)
    for quality, count in demo_specs:
        demos, demo_log = generate_demos(
            grid, quality, count, derive_seed(seed, _HAT_DEMO_SALT)
        )
        stem = f"{quality}-{count}"
        with open(demo_dir / f"{stem}.jsonl", "w", encoding="utf-8") as fh:
            for i, demo in enumerate(demos):
                for state, action in demo:
                    fh.write(
                        json.dumps(
                            {"demo": i, "state": state_key(state), "action": action}
                        )
                        + "\n"
                    )
        with open(demo_dir / f"{stem}.log.jsonl", "w", encoding="utf-8") as fh:
            for code in demo_log:
                fh.write(
                    json.dumps(
                        {"objects": list(code.objects), "actions": list(code.actions)}
                    )
                    + "\n"
                )
