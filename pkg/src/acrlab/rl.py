"""Tabular Q-learning on the gridworld, plus biased agent variants.

Four agents share one epsilon-greedy learner: plain Q; category-restricted Q
(action choice limited to the categories of reachable objects for the first
``n_acr`` episodes, probing unknown objects entropy-wise); decision-list
bootstrapped Q (forced demonstrated actions for the first ``n_hat``
episodes); and the combination, which takes the decision-list action only
when it conforms to the category restriction.  After the bias window every
agent is exactly plain epsilon-greedy.

Training runs on integer-encoded transition tables so the hot episode loop
can execute in the compiled kernel; the ``reference`` backend replays the
whole run through the object-level code paths instead and produces
bit-identical curves (see tests/test_backends.py).
"""

from __future__ import annotations

import logging
from array import array
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

from . import _backend
from .acr import (
    CategorySet,
    ObservationLog,
    allowed_actions,
    categories_of,
    non_object_actions,
)
from .inference import (
    HypothesisSet,
    OnlineInference,
    ProbeReport,
    ProbeStrategy,
)
from .lightworld import (
    ACTIONS,
    KEY_KIND,
    MOVE_DELTAS,
    SWITCH_KIND,
    GridMap,
    GridState,
    StepOutcome,
    interactable_objects,
    record_log,
    state_key,
    step,
)
from .rng import SplitMix64

log = logging.getLogger(__name__)

AGENT_KINDS = ("q", "acr", "hat", "acr_hat")
OBJECT_KINDS = (KEY_KIND, SWITCH_KIND)


@dataclass(frozen=True)
class RLParams:
    alpha: float = 0.25
    gamma: float = 0.99
    epsilon: float = 0.1
    n_acr: int = 50
    n_hat: int = 50
    episodes: int = 1000
    max_steps: int = 500
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must be in (0, 1]")
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must be in [0, 1]")
        if not 0 <= self.epsilon <= 1:
            raise ValueError("epsilon must be in [0, 1]")
        if self.n_acr < 0 or self.n_hat < 0:
            raise ValueError("bias windows must be nonnegative")
        if self.episodes < 0 or self.max_steps < 1:
            raise ValueError("episodes must be >= 0 and max_steps >= 1")


class QTable:
    """Sparse state-action values; unvisited pairs read as 0."""

    def __init__(self, actions: Sequence[str] = ACTIONS):
        self.actions = tuple(sorted(actions))
        self._values: dict[tuple, float] = {}

    def get(self, s, a) -> float:
        return self._values.get((s, a), 0.0)

    def set(self, s, a, value: float) -> None:
        self._values[(s, a)] = value

    def items(self):
        return self._values.items()

    def __len__(self) -> int:
        return len(self._values)


def _table_key(s):
    return state_key(s) if isinstance(s, GridState) else s


def q_update(
    q: QTable, s, a, r, s_next, params: RLParams, next_actions=None
) -> QTable:
    """Standard one-step update; pass ``s_next=None`` for terminal transitions.

    ``next_actions`` restricts the bootstrap max to the successor's permitted
    action set; agents whose bias window genuinely reduces the action space
    pass it so values never bootstrap off actions they cannot take.  The
    default is the table's full action set.
    """
    sk = _table_key(s)
    current = q.get(sk, a)
    if s_next is None:
        max_next = 0.0
    else:
        nk = _table_key(s_next)
        max_next = max(q.get(nk, b) for b in (next_actions or q.actions))
    q.set(sk, a, current + params.alpha * (r + params.gamma * max_next - current))
    return q


def select_action_restricted(
    q: QTable, s, rng: SplitMix64, params: RLParams, permitted: Iterable[str]
) -> str:
    """Epsilon-greedy over a permitted subset (lexicographic tie-break).

    An empty subset falls back to the full action set, with a warning.
    """
    actions = tuple(sorted(permitted))
    if not actions:
        log.warning("empty permitted action set; falling back to all actions")
        actions = q.actions
    if rng.uniform() < params.epsilon:
        return actions[rng.randrange(len(actions))]
    sk = _table_key(s)
    best = actions[0]
    best_v = q.get(sk, best)
    for a in actions[1:]:
        v = q.get(sk, a)
        if v > best_v:
            best, best_v = a, v
    return best


def select_action_plain(q: QTable, s, rng: SplitMix64, params: RLParams) -> str:
    return select_action_restricted(q, s, rng, params, q.actions)


class InferenceState:
    """Per-object-kind probe bookkeeping, shared across episodes.

    Kinds listed in ``probe_kinds`` are treated as previously unseen even if
    the category set links them, so their categories are re-identified from
    interaction outcomes; each kind is probed once, not once per episode.
    The hypothesis candidates are the object-linked categories (the agent
    pseudo-category is definitionally not a candidate for an object).
    """

    def __init__(
        self,
        acr: CategorySet,
        all_actions: Sequence[str] = ACTIONS,
        strategy: ProbeStrategy = ProbeStrategy.PAPER_MIN_ENTROPY,
        probe_kinds: Iterable[str] = (),
    ):
        self._acr = acr
        self._all_actions = tuple(all_actions)
        self._strategy = strategy
        self._probe_kinds = frozenset(probe_kinds)
        self._runs: dict[str, OnlineInference] = {}
        self._pending: tuple[str, str] | None = None

    def _candidates(self) -> tuple:
        return tuple(c for c in self._acr if c.is_object_linked)

    def is_unseen(self, kind: str) -> bool:
        run = self._runs.get(kind)
        if run is not None:
            return not run.done
        if not self._candidates():
            return False
        if kind in self._probe_kinds:
            return True
        return not categories_of(self._acr, kind)

    def allowed_for(self, kind: str) -> set[str] | None:
        """Actions known to apply to the kind, or None while unknown."""
        run = self._runs.get(kind)
        if run is not None and run.done:
            return set(run.result.actions)
        if kind not in self._probe_kinds and categories_of(self._acr, kind):
            return allowed_actions(self._acr, [kind])
        return None

    def next_probe(self, kind: str) -> str | None:
        """Next probe action for the kind; None if it resolved without probing."""
        run = self._runs.get(kind)
        if run is None:
            run = OnlineInference(
                HypothesisSet(self._candidates()), self._all_actions, self._strategy
            )
            self._runs[kind] = run
        if run.done:
            return None
        action = run.next_probe()
        self._pending = (kind, action)
        return action

    def feed(self, outcome: StepOutcome) -> None:
        """Answer the pending probe, if any, from a step outcome."""
        if self._pending is None:
            return
        kind, action = self._pending
        self._pending = None
        run = self._runs[kind]
        if not run.done:
            run.observe(action, outcome.interacted == kind)

    def report(self, kind: str) -> ProbeReport | None:
        run = self._runs.get(kind)
        if run is not None and run.done:
            return run.report()
        return None


def _category_permitted(
    q_actions, acr: CategorySet, env_objects, inference_state: InferenceState | None
) -> set[str]:
    """Non-object actions plus the category actions of the present objects.

    With an inference state, probe-resolved kinds contribute their identified
    action sets and still-unknown kinds contribute nothing; without one, the
    category links are used directly.
    """
    permitted = set(non_object_actions(acr, q_actions))
    for kind in env_objects:
        if inference_state is not None:
            allowed = inference_state.allowed_for(kind)
        else:
            allowed = allowed_actions(acr, [kind])
        if allowed:
            permitted |= allowed & set(q_actions)
    return permitted


def select_action_acr(
    q: QTable,
    s: GridState,
    env_objects: Iterable[str],
    acr: CategorySet,
    episode: int,
    rng: SplitMix64,
    params: RLParams,
    inference_state: InferenceState,
) -> str:
    """Category-restricted selection during the first ``n_acr`` episodes.

    Known reachable objects restrict epsilon-greedy choice to their category
    actions plus the non-object actions; an unseen object forces its next
    entropy-selected probe; with no objects, only non-object actions are
    considered.  From episode ``n_acr`` on this is exactly plain selection.
    """
    if episode >= params.n_acr:
        return select_action_plain(q, s, rng, params)
    kinds = sorted(env_objects)
    for kind in kinds:
        if inference_state.is_unseen(kind):
            probe = inference_state.next_probe(kind)
            if probe is not None:
                return probe
    permitted = _category_permitted(q.actions, acr, kinds, inference_state)
    return select_action_restricted(q, s, rng, params, permitted)


# ---------------------------------------------------------------------------
# Decision lists learned from demonstrations
# ---------------------------------------------------------------------------

class FeatureExtractor:
    """Discrete state features for rule induction.

    ``underfoot`` (key/switch/plain), first-step direction along a shortest
    open path to the nearest outstanding key, switch, and the goal
    (none/here/down/left/right/up), and one open/closed bit per door.
    """

    _ORDER = ("down", "left", "right", "up")

    def __init__(self, grid: GridMap):
        self.grid = grid
        self._cache: dict[tuple, dict[str, str]] = {}

    def __call__(self, state: GridState) -> dict[str, str]:
        ck = (state.pos, state.held_keys, state.pressed_switches, state.open_doors)
        cached = self._cache.get(ck)
        if cached is not None:
            return cached
        grid = self.grid
        key_id = grid.key_at(state.pos)
        if key_id is not None and key_id not in state.held_keys:
            underfoot = "key"
        elif grid.switch_at(state.pos) is not None:
            underfoot = "switch"
        else:
            underfoot = "plain"
        feats = {"underfoot": underfoot}
        key_targets = [p for k, p in grid.keys if k not in state.held_keys]
        switch_targets = [
            p for sid, p in grid.switches if sid not in state.pressed_switches
        ]
        feats["key_dir"] = self._direction(state, key_targets)
        feats["switch_dir"] = self._direction(state, switch_targets)
        feats["goal_dir"] = self._direction(state, [grid.goal])
        for door in grid.doors:
            feats[f"door_{door.door_id}"] = (
                "open" if door.door_id in state.open_doors else "closed"
            )
        self._cache[ck] = feats
        return feats

    def _passable(self, pos, open_doors) -> bool:
        grid = self.grid
        if not grid.in_bounds(pos) or pos in grid.walls or pos in grid.pits:
            return False
        door = grid.door_at(pos)
        return door is None or door.door_id in open_doors

    def _direction(self, state: GridState, targets) -> str:
        if not targets:
            return "none"
        target_set = set(targets)
        if state.pos in target_set:
            return "here"
        seen = {state.pos}
        queue = deque()
        for d in self._ORDER:
            dr, dc = MOVE_DELTAS[d]
            nxt = (state.pos[0] + dr, state.pos[1] + dc)
            if self._passable(nxt, state.open_doors) and nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, d))
        while queue:
            pos, first = queue.popleft()
            if pos in target_set:
                return first
            for d in self._ORDER:
                dr, dc = MOVE_DELTAS[d]
                nxt = (pos[0] + dr, pos[1] + dc)
                if self._passable(nxt, state.open_doors) and nxt not in seen:
                    seen.add(nxt)
                    queue.append((nxt, first))
        return "none"


@dataclass(frozen=True)
class Rule:
    conditions: tuple[tuple[str, str], ...]
    action: str
    coverage: int
    precision: float

    def matches(self, feats: dict[str, str]) -> bool:
        return all(feats.get(f) == v for f, v in self.conditions)


@dataclass(frozen=True, eq=False)
class DecisionList:
    """First-matching-rule classifier; unmatched states draw uniformly."""

    rules: tuple[Rule, ...]
    default_actions: tuple[str, ...]
    extractor: FeatureExtractor

    def action_for(self, feats: dict[str, str]) -> str | None:
        for rule in self.rules:
            if rule.matches(feats):
                return rule.action
        return None

    def act(self, state: GridState, rng: SplitMix64) -> str:
        action = self.action_for(self.extractor(state))
        if action is not None:
            return action
        return self.default_actions[rng.randrange(len(self.default_actions))]


def _grow_rule(examples: list[tuple[dict[str, str], str]]) -> Rule:
    counts: dict[str, int] = {}
    for _, a in examples:
        counts[a] = counts.get(a, 0) + 1
    top = max(counts.values())
    target = min(a for a, n in counts.items() if n == top)
    conds: dict[str, str] = {}
    covered = examples
    while True:
        correct = sum(1 for _, a in covered if a == target)
        precision = correct / len(covered)
        if precision == 1.0:
            break
        literals = sorted(
            {
                (f, v)
                for feats, a in covered
                if a == target
                for f, v in feats.items()
                if f not in conds
            }
        )
        best = None
        best_key = None
        best_sub = None
        for f, v in literals:
            sub = [e for e in covered if e[0].get(f) == v]
            pos = sum(1 for _, a in sub if a == target)
            key = (pos / len(sub), len(sub))
            if best_key is None or key > best_key:
                best, best_key, best_sub = (f, v), key, sub
        if best is None or best_key[0] <= precision:
            break
        conds[best[0]] = best[1]
        covered = best_sub
    correct = sum(1 for _, a in covered if a == target)
    return Rule(
        tuple(sorted(conds.items())), target, len(covered), correct / len(covered)
    )


def hat_train(grid: GridMap, demos: Sequence[Sequence[tuple[GridState, str]]]) -> DecisionList:
    """Summarize demonstrations as an ordered rule list (greedy covering).

    Rules are grown one at a time for the majority action of the still
    uncovered pairs, adding the literal that most improves precision until
    pure or stuck; the final list is ordered by training-set coverage, then
    precision, then discovery order.  Conflicting identical feature vectors
    resolve to the more frequent action (lexicographic on ties).
    """
    if not demos:
        raise ValueError("at least one demonstration is required")
    extractor = FeatureExtractor(grid)
    examples = [(extractor(s), a) for demo in demos for s, a in demo]
    if not examples:
        raise ValueError("demonstrations contain no state-action pairs")
    grown: list[Rule] = []
    remaining = list(examples)
    while remaining:
        rule = _grow_rule(remaining)
        grown.append(rule)
        remaining = [e for e in remaining if not rule.matches(e[0])]
    finalized: list[tuple[int, Rule]] = []
    for born, rule in enumerate(grown):
        covered = [e for e in examples if rule.matches(e[0])]
        correct = sum(1 for _, a in covered if a == rule.action)
        finalized.append(
            (
                born,
                Rule(rule.conditions, rule.action, len(covered), correct / len(covered)),
            )
        )
    finalized.sort(key=lambda t: (-t[1].coverage, -t[1].precision, t[0]))
    return DecisionList(tuple(r for _, r in finalized), ACTIONS, extractor)


def select_action_hat(
    q: QTable,
    s: GridState,
    dlist: DecisionList,
    episode: int,
    rng: SplitMix64,
    params: RLParams,
) -> str:
    """Forced decision-list action for the first ``n_hat`` episodes, then plain."""
    if episode < params.n_hat:
        return dlist.act(s, rng)
    return select_action_plain(q, s, rng, params)


def select_action_acr_hat(
    q: QTable,
    s: GridState,
    env_objects: Iterable[str],
    acr: CategorySet,
    dlist: DecisionList,
    episode: int,
    rng: SplitMix64,
    params: RLParams,
) -> str:
    """Decision-list action, vetoed unless it conforms to the category checks.

    With objects present the permitted set is the non-object actions plus the
    objects' category actions; without objects it is the non-object actions
    alone.  A non-conforming suggestion is replaced by epsilon-greedy choice
    over the permitted set.
    """
    if episode >= max(params.n_acr, params.n_hat):
        return select_action_plain(q, s, rng, params)
    permitted = _category_permitted(q.actions, acr, set(env_objects), None)
    suggestion = dlist.act(s, rng)
    if suggestion in permitted:
        return suggestion
    return select_action_restricted(q, s, rng, params, permitted)


# ---------------------------------------------------------------------------
# Compiled transition tables
# ---------------------------------------------------------------------------

class UnsupportedMapError(ValueError):
    """Map cannot be indexed by (cell, door mask) for the fast kernels."""


class CompiledGrid:
    """Integer-indexed transition tables; built by exhaustively calling step().

    State index = cell * 2**n_doors + door-open bitmask.  This requires every
    key and switch to operate a door (held keys and pressed switches are then
    implied by the mask).
    """

    def __init__(self, grid: GridMap):
        for key_id, _ in grid.keys:
            if grid.door_for_key(key_id) is None:
                raise UnsupportedMapError(f"key {key_id!r} operates no door")
        for switch_id, _ in grid.switches:
            if grid.door_for_switch(switch_id) is None:
                raise UnsupportedMapError(f"switch {switch_id!r} operates no door")
        if len(grid.door_ids) > 16:
            raise UnsupportedMapError("more than 16 doors")
        self.grid = grid
        self.door_ids = grid.door_ids
        self.n_doors = len(self.door_ids)
        self.n_masks = 1 << self.n_doors
        self.n_cells = grid.width * grid.height
        self.n_states = self.n_cells * self.n_masks
        self.n_actions = len(ACTIONS)
        self.states: list[GridState] = [
            self._decode(idx) for idx in range(self.n_states)
        ]
        self.state_keys = [state_key(st) for st in self.states]
        n = self.n_states * self.n_actions
        self.next_state = array("i", bytes(4 * n))
        self.reward = array("d", bytes(8 * n))
        self.terminal = bytearray(n)
        self.succeeded = bytearray(n)
        self.interacted = array("b", [-1]) * n
        kind_index = {kind: i for i, kind in enumerate(OBJECT_KINDS)}
        for idx, st in enumerate(self.states):
            base = idx * self.n_actions
            if st.terminal or st.pos in grid.walls:
                for a_i in range(self.n_actions):
                    self.next_state[base + a_i] = idx
                    self.terminal[base + a_i] = 1
                continue
            for a_i, action in enumerate(ACTIONS):
                outcome = step(grid, st, action)
                self.next_state[base + a_i] = self.encode(outcome.state)
                self.reward[base + a_i] = outcome.reward
                self.terminal[base + a_i] = 1 if outcome.terminal else 0
                self.succeeded[base + a_i] = 1 if outcome.succeeded else 0
                if outcome.interacted is not None:
                    self.interacted[base + a_i] = kind_index[outcome.interacted]
        self.start_index = self.encode(GridState.initial(grid))

    def _decode(self, idx: int) -> GridState:
        cell, mask = divmod(idx, self.n_masks)
        pos = divmod(cell, self.grid.width)
        open_doors = frozenset(
            self.door_ids[i] for i in range(self.n_doors) if mask & (1 << i)
        )
        held = frozenset(
            d.operator_id
            for d in self.grid.doors
            if d.operated_by == KEY_KIND and d.door_id in open_doors
        )
        pressed = frozenset(
            d.operator_id
            for d in self.grid.doors
            if d.operated_by == SWITCH_KIND and d.door_id in open_doors
        )
        terminal = pos in self.grid.pits or pos == self.grid.goal
        return GridState(
            pos=pos,
            held_keys=held,
            pressed_switches=pressed,
            open_doors=open_doors,
            terminal=terminal,
        )

    def encode(self, state: GridState) -> int:
        mask = 0
        for i, door_id in enumerate(self.door_ids):
            if door_id in state.open_doors:
                mask |= 1 << i
        cell = state.pos[0] * self.grid.width + state.pos[1]
        return cell * self.n_masks + mask

    def zero_q(self):
        return array("d", bytes(8 * self.n_states * self.n_actions))


def compile_grid(grid: GridMap) -> CompiledGrid:
    return CompiledGrid(grid)


class OptimalPolicy:
    """Shortest actions-to-goal over the compiled state graph."""

    def __init__(self, cg: CompiledGrid):
        self.cg = cg
        INF = float("inf")
        dist = [INF] * cg.n_states
        rev: list[list[int]] = [[] for _ in range(cg.n_states)]
        sources = []
        for idx, st in enumerate(cg.states):
            if st.terminal:
                if st.pos == cg.grid.goal:
                    dist[idx] = 0.0
                    sources.append(idx)
                continue
            if st.pos in cg.grid.walls:
                continue
            base = idx * cg.n_actions
            for a_i in range(cg.n_actions):
                ns = cg.next_state[base + a_i]
                if ns != idx:
                    rev[ns].append(idx)
        queue = deque(sources)
        while queue:
            cur = queue.popleft()
            for prev in rev[cur]:
                if dist[prev] == INF:
                    dist[prev] = dist[cur] + 1
                    queue.append(prev)
        self.dist = dist

    def optimal_actions(self, idx: int) -> tuple[int, ...]:
        """Action indices along some shortest path (empty if goal unreachable)."""
        cg = self.cg
        d = self.dist[idx]
        if d == float("inf") or d == 0:
            return ()
        base = idx * cg.n_actions
        out = []
        for a_i in range(cg.n_actions):
            ns = cg.next_state[base + a_i]
            if ns != idx and self.dist[ns] == d - 1:
                out.append(a_i)
        return tuple(out)


# ---------------------------------------------------------------------------
# Demonstrations
# ---------------------------------------------------------------------------

def generate_demos(
    grid: GridMap, quality: str, count: int, seed: int
) -> tuple[list[list[tuple[GridState, str]]], ObservationLog]:
    """Scripted demonstrations plus their combined action-code log.

    Expert demos follow a shortest path (random tie-break among optimal
    actions, so repeated demos vary).  Suboptimal demos corrupt the optimal
    policy with a 20% chance of a random detour action per step and a 25%
    chance of stopping early, before the goal.
    """
    if quality not in ("expert", "suboptimal"):
        raise ValueError(f"unknown demo quality {quality!r}")
    cg = compile_grid(grid)
    policy = OptimalPolicy(cg)
    start_dist = policy.dist[cg.start_index]
    if start_dist == float("inf"):
        raise ValueError("map is unsolvable: goal unreachable from start")
    optimal_len = int(start_dist)
    rng = SplitMix64(seed)
    demos: list[list[tuple[GridState, str]]] = []
    codes = []
    for _ in range(count):
        pairs: list[tuple[GridState, str]] = []
        actions: list[str] = []
        state = GridState.initial(grid)
        idx = cg.start_index
        cutoff = None
        if quality == "suboptimal" and rng.uniform() < 0.25:
            cutoff = 1 + rng.randrange(max(1, optimal_len - 1))
        cap = 4 * optimal_len + 8
        while not state.terminal and len(actions) < cap:
            if cutoff is not None and len(actions) >= cutoff:
                break
            if quality == "suboptimal" and rng.uniform() < 0.2:
                a_i = rng.randrange(len(ACTIONS))
            else:
                optimal = policy.optimal_actions(idx)
                if not optimal:
                    break
                a_i = optimal[rng.randrange(len(optimal))]
            action = ACTIONS[a_i]
            pairs.append((state, action))
            outcome = step(grid, state, action)
            actions.append(action)
            state = outcome.state
            idx = cg.next_state[idx * cg.n_actions + a_i]
        demos.append(pairs)
        codes.extend(record_log(grid, actions).codes)
    return demos, ObservationLog(codes)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------

@dataclass
class LearningCurve:
    rewards: list[float]
    steps: list[int]
    convergence_episode: int
    transitions: list[list[tuple[str, str]]] | None = None


def convergence_episode(
    rewards: Sequence[float],
    window: int = 50,
    plateau_window: int = 100,
    tolerance: float = 0.05,
) -> int:
    """First episode whose forward window mean reaches the final plateau.

    The plateau is the mean of the last ``plateau_window`` episodes; the
    threshold sits ``tolerance`` of its magnitude below it.  Returns the
    episode count when the curve never levels out (or is too short).
    """
    n = len(rewards)
    if n < window or n < plateau_window:
        return n
    plateau = sum(rewards[-plateau_window:]) / plateau_window
    threshold = plateau - tolerance * abs(plateau)
    for e in range(n - window + 1):
        if sum(rewards[e : e + window]) / window >= threshold:
            return e
    return n


def _make_selector(
    grid: GridMap,
    agent_kind: str,
    params: RLParams,
    acr: CategorySet | None,
    dlist: DecisionList | None,
    inference: InferenceState | None,
):
    """Action selector plus the agent's permitted-set function.

    ``permitted_fn(state, episode)`` reports the reduced action space the
    agent is operating under (None when unrestricted); the episode runner
    bootstraps value updates over that same set.
    """
    if agent_kind == "q":
        return (lambda q, s, ep, rng: select_action_plain(q, s, rng, params)), None
    if agent_kind == "acr":
        selector = lambda q, s, ep, rng: select_action_acr(
            q, s, interactable_objects(grid, s), acr, ep, rng, params, inference
        )

        def permitted_fn(state: GridState, episode: int):
            if episode >= params.n_acr:
                return None
            return tuple(
                sorted(
                    _category_permitted(
                        ACTIONS, acr, interactable_objects(grid, state), inference
                    )
                )
            )

        return selector, permitted_fn
    if agent_kind == "hat":
        # Forced demonstrated actions do not shrink the action space.
        return (
            lambda q, s, ep, rng: select_action_hat(q, s, dlist, ep, rng, params)
        ), None
    selector = lambda q, s, ep, rng: select_action_acr_hat(
        q, s, interactable_objects(grid, s), acr, dlist, ep, rng, params
    )

    def permitted_fn(state: GridState, episode: int):
        if episode >= max(params.n_acr, params.n_hat):
            return None
        return tuple(
            sorted(
                _category_permitted(
                    ACTIONS, acr, interactable_objects(grid, state), None
                )
            )
        )

    return selector, permitted_fn


def _run_episode_objects(
    grid: GridMap,
    q: QTable,
    rng: SplitMix64,
    params: RLParams,
    selector,
    permitted_fn,
    episode: int,
    inference: InferenceState | None,
    sink: list | None,
) -> tuple[float, int]:
    state = GridState.initial(grid)
    total = 0.0
    steps = 0
    for _ in range(params.max_steps):
        action = selector(q, state, episode, rng)
        outcome = step(grid, state, action)
        if inference is not None:
            inference.feed(outcome)
        sk = state_key(state)
        if outcome.terminal:
            nk = None
            next_actions = None
        else:
            nk = state_key(outcome.state)
            next_actions = (
                permitted_fn(outcome.state, episode) if permitted_fn else None
            )
        q_update(q, sk, action, outcome.reward, nk, params, next_actions)
        if sink is not None:
            sink.append((sk, action))
        total += outcome.reward
        steps += 1
        state = outcome.state
        if outcome.terminal:
            break
    return total, steps


def run_training(
    grid: GridMap,
    agent_kind: str,
    params: RLParams,
    acr: CategorySet | None = None,
    demos: Sequence[Sequence[tuple[GridState, str]]] | None = None,
    probe_kinds: Iterable[str] = (),
    strategy: ProbeStrategy = ProbeStrategy.PAPER_MIN_ENTROPY,
    backend: str = "auto",
    keep_transitions: bool = False,
) -> LearningCurve:
    """Train one agent for ``params.episodes`` episodes.

    ``probe_kinds`` lists object kinds the category-restricted agent must
    treat as previously unseen and identify by probing.  ``backend`` is
    "auto"/"native"/"pure" for the split bias-window/kernel execution, or
    "reference" to replay everything through the object-level path
    (required for ``keep_transitions``); all backends produce identical
    curves for identical inputs.
    """
    if agent_kind not in AGENT_KINDS:
        raise ValueError(f"unknown agent kind {agent_kind!r}")
    if agent_kind in ("acr", "acr_hat") and acr is None:
        raise ValueError(f"agent {agent_kind!r} requires a category set")
    if agent_kind in ("hat", "acr_hat") and not demos:
        raise ValueError(f"agent {agent_kind!r} requires demonstrations")
    dlist = hat_train(grid, demos) if agent_kind in ("hat", "acr_hat") else None
    inference = (
        InferenceState(acr, ACTIONS, strategy, probe_kinds)
        if agent_kind == "acr"
        else None
    )
    selector, permitted_fn = _make_selector(
        grid, agent_kind, params, acr, dlist, inference
    )
    if agent_kind == "q":
        bias_end = 0
    elif agent_kind == "acr":
        bias_end = params.n_acr
    elif agent_kind == "hat":
        bias_end = params.n_hat
    else:
        bias_end = max(params.n_acr, params.n_hat)
    bias_end = min(bias_end, params.episodes)

    if keep_transitions:
        backend = "reference"
    if backend == "reference":
        return _train_reference(
            grid, params, selector, permitted_fn, inference, keep_transitions
        )

    try:
        cg = compile_grid(grid)
    except UnsupportedMapError as exc:
        log.warning("falling back to reference training loop: %s", exc)
        return _train_reference(
            grid, params, selector, permitted_fn, inference, keep_transitions
        )

    rng = SplitMix64(params.seed)
    qt = QTable()
    rewards: list[float] = []
    steps: list[int] = []
    for episode in range(bias_end):
        total, n = _run_episode_objects(
            grid, qt, rng, params, selector, permitted_fn, episode, inference, None
        )
        rewards.append(total)
        steps.append(n)
    q = cg.zero_q()
    if len(qt):
        for idx in range(cg.n_states):
            key = cg.state_keys[idx]
            base = idx * cg.n_actions
            for a_i, action in enumerate(qt.actions):
                value = qt.get(key, action)
                if value != 0.0:
                    q[base + a_i] = value
    more_rewards, more_steps, _ = _backend.run_episodes(
        q,
        cg.next_state,
        cg.reward,
        cg.terminal,
        cg.start_index,
        cg.n_actions,
        params.episodes - bias_end,
        params.max_steps,
        params.alpha,
        params.gamma,
        params.epsilon,
        rng.state,
        backend=backend,
    )
    rewards.extend(more_rewards)
    steps.extend(more_steps)
    return LearningCurve(rewards, steps, convergence_episode(rewards))


def _train_reference(
    grid: GridMap,
    params: RLParams,
    selector,
    permitted_fn,
    inference: InferenceState | None,
    keep_transitions: bool,
) -> LearningCurve:
    rng = SplitMix64(params.seed)
    qt = QTable()
    rewards: list[float] = []
    steps: list[int] = []
    transitions: list[list[tuple[str, str]]] | None = [] if keep_transitions else None
    for episode in range(params.episodes):
        sink: list[tuple[str, str]] | None = [] if keep_transitions else None
        total, n = _run_episode_objects(
            grid, qt, rng, params, selector, permitted_fn, episode, inference, sink
        )
        rewards.append(total)
        steps.append(n)
        if keep_transitions:
            transitions.append(sink)
    return LearningCurve(rewards, steps, convergence_episode(rewards), transitions)
