"""Formation planning with two grounding modes, plus exploration-cost accounting.

The *baseline* grounding instantiates one move operator per (unit, direction)
and tracks each unit's position separately; the *category-typed* grounding
exploits that all units share one action category, collapsing the state to
the multiset of occupied cells.  Both searches are breadth-first with a
deterministic expansion order, so node counts are exactly reproducible.
"""

from __future__ import annotations

import re
import time
from dataclasses import dataclass
from enum import Enum
from math import comb
from typing import Iterable, Iterator, Sequence

from . import _backend
from .acr import AcrGraph, ActionCode, CategorySet, categories_of, derive_categories
from .catalog import SyntheticCatalog
from .inference import (
    HypothesisSet,
    ProbeReport,
    ProbeStrategy,
    baseline_probe,
    infer_category,
)

DIRECTIONS = ("down", "left", "right", "up")
_DELTAS = {"down": (1, 0), "left": (0, -1), "right": (0, 1), "up": (-1, 0)}
_LABEL_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_-]*$")


class UnsolvableProblemError(ValueError):
    def __init__(self, stats: "SearchStats"):
        super().__init__("state space exhausted without reaching the goal")
        self.stats = stats


class SearchBudgetExceeded(RuntimeError):
    def __init__(self, stats: "SearchStats"):
        super().__init__("search wall-clock budget exceeded")
        self.stats = stats


@dataclass(frozen=True)
class FormationProblem:
    width: int
    height: int
    units: tuple[str, ...]
    start: tuple[tuple[int, int], ...]
    goals: frozenset[tuple[int, int]]

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "start", tuple(tuple(p) for p in self.start))
        object.__setattr__(self, "goals", frozenset(tuple(p) for p in self.goals))
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if len(set(self.units)) != len(self.units):
            raise ValueError("unit labels must be distinct")
        if len(self.start) != len(self.units):
            raise ValueError("one start position per unit required")
        if len(self.goals) != len(self.units):
            raise ValueError(
                f"goal cells ({len(self.goals)}) must match unit count "
                f"({len(self.units)})"
            )
        seen = set()
        for pos in list(self.start) + list(self.goals):
            r, c = pos
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ValueError(f"position {pos} out of bounds")
        for pos in self.start:
            if pos in seen:
                raise ValueError(f"duplicate start position {pos}")
            seen.add(pos)

    @property
    def cells(self) -> int:
        return self.width * self.height


class GroundingMode(Enum):
    BASELINE = "baseline"
    ACR_TYPED = "acr"


@dataclass(frozen=True)
class GroundedOperator:
    name: str
    mover: str
    direction: str


@dataclass(frozen=True)
class GroundedOperatorSet:
    operators: tuple[GroundedOperator, ...]

    def __len__(self) -> int:
        return len(self.operators)

    def __iter__(self) -> Iterator[GroundedOperator]:
        return iter(self.operators)


@dataclass
class SearchStats:
    expanded: int
    generated: int
    frontier_peak: int
    wall_time_s: float
    plan_length: int | None = None
    plan: tuple[str, ...] | None = None
    censored: bool = False


def formation_acr(problem: FormationProblem) -> CategorySet:
    """Category set observed from moving every unit: one shared move category."""
    graph = AcrGraph()
    for unit in problem.units:
        graph.add(ActionCode((unit,), DIRECTIONS))
    return derive_categories(graph)


def _shared_category(problem: FormationProblem, acr: CategorySet):
    common: set[int] | None = None
    for unit in problem.units:
        ids = {c.id for c in categories_of(acr, unit)}
        if not ids:
            raise ValueError(f"unit {unit!r} is not mapped to any action category")
        common = ids if common is None else common & ids
    if common is None:
        return None
    if not common:
        raise ValueError("units span multiple action categories")
    return acr.get(min(common))


def ground(
    problem: FormationProblem, mode: GroundingMode, acr: CategorySet | None = None
) -> GroundedOperatorSet:
    """Instantiate move operators: per (unit, direction) or per (category, direction)."""
    if mode is GroundingMode.BASELINE:
        ops = tuple(
            GroundedOperator(f"move-{u}-{d}", u, d)
            for u in problem.units
            for d in DIRECTIONS
        )
        return GroundedOperatorSet(ops)
    if not problem.units:
        return GroundedOperatorSet(())
    if acr is None:
        raise ValueError("category-typed grounding requires a category set")
    category = _shared_category(problem, acr)
    tag = f"cat{category.id}"
    ops = tuple(
        GroundedOperator(f"move-{tag}-{d}", tag, d) for d in DIRECTIONS
    )
    return GroundedOperatorSet(ops)


def _encode(problem: FormationProblem, positions: Sequence[tuple[int, int]]) -> int:
    cells = problem.cells
    sid = 0
    for i, (r, c) in enumerate(positions):
        sid += (r * problem.width + c) * cells**i
    return sid


def _decode(problem: FormationProblem, sid: int, n: int) -> list[int]:
    cells = problem.cells
    out = []
    for _ in range(n):
        out.append(sid % cells)
        sid //= cells
    return out


def search(
    problem: FormationProblem,
    mode: GroundingMode,
    acr: CategorySet | None = None,
    budget_s: float | None = None,
    backend: str = "auto",
) -> tuple[tuple[str, ...], SearchStats]:
    """Optimal forward search; returns the plan and node statistics.

    Raises UnsolvableProblemError after exhausting the space and
    SearchBudgetExceeded when ``budget_s`` elapses (stats are attached to
    both).
    """
    typed = mode is GroundingMode.ACR_TYPED
    n = len(problem.units)
    mover_tag = "cat"
    if typed and n and acr is not None:
        mover_tag = f"cat{_shared_category(problem, acr).id}"
    start_positions = sorted(problem.start) if typed else list(problem.start)
    start_id = _encode(problem, start_positions)
    goal_mask = 0
    for r, c in problem.goals:
        goal_mask |= 1 << (r * problem.width + c)
    t0 = time.perf_counter()
    res = _backend.formation_bfs(
        problem.cells,
        n,
        problem.width,
        typed,
        start_id,
        goal_mask,
        budget_s=budget_s,
        backend=backend,
    )
    wall = time.perf_counter() - t0
    stats = SearchStats(res.expanded, res.generated, res.frontier_peak, wall)
    if res.timed_out:
        stats.censored = True
        raise SearchBudgetExceeded(stats)
    if res.goal_id < 0:
        raise UnsolvableProblemError(stats)
    plan = []
    for prev_id, op in res.plan_ops:
        positions = _decode(problem, prev_id, n)
        slot, d = divmod(op, 4)
        p = positions[slot]
        r, c = divmod(p, problem.width)
        dr, dc = _DELTAS[DIRECTIONS[d]]
        mover = mover_tag if typed else problem.units[slot]
        plan.append(
            f"move {mover} {DIRECTIONS[d]} ({r},{c})->({r + dr},{c + dc})"
        )
    stats.plan = tuple(plan)
    stats.plan_length = len(plan)
    return stats.plan, stats


def count_reachable_states(
    problem: FormationProblem, mode: GroundingMode, backend: str = "auto"
) -> int:
    """Exhaustively enumerate the reachable state space (goal ignored)."""
    n = len(problem.units)
    if n == 0:
        return 1
    typed = mode is GroundingMode.ACR_TYPED
    start_positions = sorted(problem.start) if typed else list(problem.start)
    start_id = _encode(problem, start_positions)
    # A zero goal mask is unreachable for n >= 1, so BFS exhausts the space.
    res = _backend.formation_bfs(
        problem.cells, n, problem.width, typed, start_id, 0, backend=backend
    )
    return res.expanded


def state_space_size(problem: FormationProblem, mode: GroundingMode) -> int:
    """Closed-form placement count.

    Category-typed states are cell subsets: C(cells, n).  The baseline figure
    uses the multiply-by-n convention, C(cells, n) * n; measured node counts
    are reported separately and do not rely on this formula.
    """
    cells = problem.cells
    n = len(problem.units)
    if n > cells:
        raise ValueError(f"{n} units cannot fit on {cells} cells")
    if mode is GroundingMode.ACR_TYPED:
        return comb(cells, n)
    return comb(cells, n) * n


def branching_factor(
    n_objects: int,
    action_count: int,
    groups: Iterable[tuple[int, int]] | None = None,
) -> int:
    """Baseline n_o * |A|; with ``groups`` (objects, actions per category),
    the categorized sum over categories."""
    if n_objects < 0 or action_count < 0:
        raise ValueError("counts must be nonnegative")
    if groups is None:
        return n_objects * action_count
    total = 0
    for n_objs, n_actions in groups:
        if n_objs < 0 or n_actions < 0:
            raise ValueError("counts must be nonnegative")
        total += n_objs * n_actions
    return total


# ---------------------------------------------------------------------------
# PDDL emission (STRIPS + typing)
# ---------------------------------------------------------------------------

def _pddl_label(label: str) -> str:
    if not _LABEL_RE.match(label):
        raise ValueError(f"label {label!r} is not usable as a PDDL name")
    return label


def _cell_name(pos: tuple[int, int]) -> str:
    return f"c{pos[0]}-{pos[1]}"


def _adjacency_facts(problem: FormationProblem) -> list[str]:
    facts = []
    for r in range(problem.height):
        for c in range(problem.width):
            for dr, dc in _DELTAS.values():
                nr, nc = r + dr, c + dc
                if 0 <= nr < problem.height and 0 <= nc < problem.width:
                    facts.append(f"(adj {_cell_name((r, c))} {_cell_name((nr, nc))})")
    return sorted(facts)


def emit_pddl(
    problem: FormationProblem, mode: GroundingMode, acr: CategorySet | None = None
) -> tuple[str, str]:
    """Deterministic PDDL domain and problem text for the formation task."""
    units = [_pddl_label(u) for u in problem.units]
    cell_names = [
        _cell_name((r, c))
        for r in range(problem.height)
        for c in range(problem.width)
    ]
    occupied = set(problem.start)
    free_cells = [
        _cell_name((r, c))
        for r in range(problem.height)
        for c in range(problem.width)
        if (r, c) not in occupied
    ]
    init = []
    init.extend(f"(free {c})" for c in free_cells)
    init.extend(f"(occupied {_cell_name(p)})" for p in sorted(occupied))
    init.extend(_adjacency_facts(problem))
    goal = [f"(occupied {_cell_name(p)})" for p in sorted(problem.goals)]

    move_effect = (
        "(and (not (at {u} ?from)) (at {u} ?to) (free ?from) (not (free ?to)) "
        "(occupied ?to) (not (occupied ?from)))"
    )
    move_pre = "(and (at {u} ?from) (adj ?from ?to) (free ?to))"

    if mode is GroundingMode.BASELINE:
        domain_name = "formation-baseline"
        types = ["cell - object", "unit - object"]
        types.extend(f"u-{u} - unit" for u in units)
        constants = [f"{u} - u-{u}" for u in units]
        actions = []
        for u in units:
            actions.append(
                "  (:action move-{u}\n"
                "   :parameters (?from - cell ?to - cell)\n"
                "   :precondition {pre}\n"
                "   :effect {eff})".format(
                    u=u, pre=move_pre.format(u=u), eff=move_effect.format(u=u)
                )
            )
        object_decls = [f"{' '.join(cell_names)} - cell"]
        init_at = [
            f"(at {u} {_cell_name(problem.start[i])})" for i, u in enumerate(units)
        ]
    else:
        if not problem.units:
            raise ValueError("category-typed PDDL needs at least one unit")
        if acr is None:
            acr = formation_acr(problem)
        category = _shared_category(problem, acr)
        cat_type = f"cat{category.id}"
        domain_name = "formation-acr"
        types = ["cell - object", f"{cat_type} - object"]
        constants = []
        actions = [
            "  (:action move\n"
            "   :parameters (?u - {ct} ?from - cell ?to - cell)\n"
            "   :precondition {pre}\n"
            "   :effect {eff})".format(
                ct=cat_type, pre=move_pre.format(u="?u"), eff=move_effect.format(u="?u")
            )
        ]
        object_decls = [
            f"{' '.join(units)} - {cat_type}",
            f"{' '.join(cell_names)} - cell",
        ]
        init_at = [
            f"(at {u} {_cell_name(problem.start[i])})" for i, u in enumerate(units)
        ]

    unit_pred = "?u - unit" if mode is GroundingMode.BASELINE else f"?u - {cat_type}"
    predicates = [
        f"(at {unit_pred} ?c - cell)",
        "(free ?c - cell)",
        "(occupied ?c - cell)",
        "(adj ?a - cell ?b - cell)",
    ]
    domain_lines = [
        f"(define (domain {domain_name})",
        " (:requirements :strips :typing)",
        " (:types " + " ".join(types) + ")",
    ]
    if constants:
        domain_lines.append(" (:constants " + " ".join(constants) + ")")
    domain_lines.append(" (:predicates " + " ".join(predicates) + ")")
    domain_lines.extend(actions)
    domain_lines.append(")")

    problem_lines = [
        f"(define (problem {domain_name}-{len(units)})",
        f" (:domain {domain_name})",
        " (:objects " + " ".join(object_decls) + ")",
        " (:init",
    ]
    problem_lines.extend(f"  {fact}" for fact in init_at + init)
    problem_lines.append(" )")
    problem_lines.append(" (:goal (and " + " ".join(goal) + "))")
    problem_lines.append(")")
    return "\n".join(domain_lines) + "\n", "\n".join(problem_lines) + "\n"


# ---------------------------------------------------------------------------
# Exploration-phase probe accounting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplorationReport:
    total_a_obj: int
    reports: tuple[tuple[str, ProbeReport], ...]

    @property
    def unseen_kinds(self) -> tuple[str, ...]:
        return tuple(kind for kind, _ in self.reports)


def exploration_phase(
    build_order: Sequence[str],
    catalog: SyntheticCatalog,
    use_acr: bool,
    strategy: ProbeStrategy = ProbeStrategy.PAPER_MIN_ENTROPY,
) -> ExplorationReport:
    """Total probes spent identifying each previously unseen kind in order.

    Repeat occurrences cost nothing; the uncategorized baseline pays the full
    action inventory per unseen kind.
    """
    seen: set[str] = set()
    reports: list[tuple[str, ProbeReport]] = []
    total = 0
    for kind in build_order:
        if kind not in catalog.kind_index:
            raise ValueError(f"unknown object kind {kind!r}")
        if kind in seen:
            continue
        seen.add(kind)
        oracle = catalog.oracle(kind)
        if use_acr:
            report = infer_category(
                oracle,
                HypothesisSet(catalog.categories.categories),
                catalog.actions,
                strategy,
            )
        else:
            report = baseline_probe(oracle, catalog.actions)
        total += report.a_obj
        reports.append((kind, report))
    return ExplorationReport(total, tuple(reports))
