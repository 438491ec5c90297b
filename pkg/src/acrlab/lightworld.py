"""Deterministic gridworld of locked rooms: keys, switches, spike pits, goal.

Map text format
---------------
Line 1 is ``<width> <height>``; the next ``height`` lines are rows of exactly
``width`` characters:

====  =======================================================
``#``  wall
``.``  floor
``S``  agent start (exactly one)
``G``  goal (exactly one, terminal, +100)
``^``  spike pit (terminal, -10)
a-z    a key; picking it up opens the same-letter uppercase door
A-Z    door opened by the matching lowercase key
0-9    a switch; pressing it opens its linked door
``|``  a switch-operated door
====  =======================================================

Each ``|`` cell is linked to its switch by a sidecar line after the grid:
``door <digit> <row> <col>`` (0-based coordinates of the ``|`` cell).
Every door must have exactly one operator and vice versa.  The loader
round-trips: parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import cached_property
from importlib import resources

from .acr import AGENT_OBJECT, ActionCode, ObservationLog

# The full action inventory, in lexicographic order (used for tie-breaks).
ACTIONS = ("down", "left", "pickup", "press", "right", "up")
MOVE_DELTAS = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}

STEP_REWARD = -0.04
GOAL_REWARD = 100.0
PIT_REWARD = -10.0

KEY_KIND = "key"
SWITCH_KIND = "switch"


class MapFormatError(ValueError):
    """Raised when map text violates the grammar or an invariant."""


class ReplayError(ValueError):
    """A trajectory could not be replayed; carries the failing step index."""

    def __init__(self, index: int, message: str):
        super().__init__(f"step {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class Door:
    door_id: str                 # uppercase key letter, or the switch digit
    pos: tuple[int, int]
    operated_by: str             # "key" | "switch"
    operator_id: str             # lowercase letter, or digit
    operator_pos: tuple[int, int]


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    walls: frozenset[tuple[int, int]]
    pits: frozenset[tuple[int, int]]
    start: tuple[int, int]
    goal: tuple[int, int]
    keys: tuple[tuple[str, tuple[int, int]], ...]      # (key id, position)
    switches: tuple[tuple[str, tuple[int, int]], ...]  # (switch id, position)
    doors: tuple[Door, ...]                            # sorted by door_id

    @cached_property
    def _door_by_pos(self) -> dict[tuple[int, int], Door]:
        return {d.pos: d for d in self.doors}

    @cached_property
    def _key_by_pos(self) -> dict[tuple[int, int], str]:
        return {pos: key_id for key_id, pos in self.keys}

    @cached_property
    def _switch_by_pos(self) -> dict[tuple[int, int], str]:
        return {pos: switch_id for switch_id, pos in self.switches}

    @cached_property
    def door_ids(self) -> tuple[str, ...]:
        return tuple(d.door_id for d in self.doors)

    def in_bounds(self, pos: tuple[int, int]) -> bool:
        r, c = pos
        return 0 <= r < self.height and 0 <= c < self.width

    def door_at(self, pos) -> Door | None:
        return self._door_by_pos.get(pos)

    def key_at(self, pos) -> str | None:
        return self._key_by_pos.get(pos)

    def switch_at(self, pos) -> str | None:
        return self._switch_by_pos.get(pos)

    def door_for_key(self, key_id: str) -> Door | None:
        for d in self.doors:
            if d.operated_by == KEY_KIND and d.operator_id == key_id:
                return d
        return None

    def door_for_switch(self, switch_id: str) -> Door | None:
        for d in self.doors:
            if d.operated_by == SWITCH_KIND and d.operator_id == switch_id:
                return d
        return None


@dataclass(frozen=True)
class GridState:
    pos: tuple[int, int]
    held_keys: frozenset[str] = frozenset()
    pressed_switches: frozenset[str] = frozenset()
    open_doors: frozenset[str] = frozenset()
    terminal: bool = False
    reward: float = 0.0          # cumulative over the episode

    @classmethod
    def initial(cls, grid: GridMap) -> "GridState":
        return cls(pos=grid.start)


@dataclass(frozen=True)
class StepOutcome:
    state: GridState
    reward: float
    terminal: bool
    interacted: str | None       # object kind acted upon, if any
    succeeded: bool


def state_key(state: GridState) -> str:
    """Canonical serialization of the non-cumulative state fields."""
    return "|".join(
        (
            f"{state.pos[0]},{state.pos[1]}",
            "k:" + ",".join(sorted(state.held_keys)),
            "s:" + ",".join(sorted(state.pressed_switches)),
            "d:" + ",".join(sorted(state.open_doors)),
            f"t:{int(state.terminal)}",
        )
    )


def step(grid: GridMap, state: GridState, action: str) -> StepOutcome:
    """Apply one action; unsuccessful actions never change the state.

    Non-terminal transitions earn the flat step reward; entering the goal or
    a pit earns only the terminal reward.
    """
    if state.terminal:
        raise ValueError("cannot step on a terminal state")
    if action not in ACTIONS:
        raise ValueError(f"unknown action {action!r}")

    if action in MOVE_DELTAS:
        dr, dc = MOVE_DELTAS[action]
        target = (state.pos[0] + dr, state.pos[1] + dc)
        door = grid.door_at(target) if grid.in_bounds(target) else None
        blocked = (
            not grid.in_bounds(target)
            or target in grid.walls
            or (door is not None and door.door_id not in state.open_doors)
        )
        if blocked:
            next_state = replace(state, reward=state.reward + STEP_REWARD)
            return StepOutcome(next_state, STEP_REWARD, False, None, False)
        if target in grid.pits:
            next_state = replace(
                state, pos=target, terminal=True, reward=state.reward + PIT_REWARD
            )
            return StepOutcome(next_state, PIT_REWARD, True, None, True)
        if target == grid.goal:
            next_state = replace(
                state, pos=target, terminal=True, reward=state.reward + GOAL_REWARD
            )
            return StepOutcome(next_state, GOAL_REWARD, True, None, True)
        next_state = replace(state, pos=target, reward=state.reward + STEP_REWARD)
        return StepOutcome(next_state, STEP_REWARD, False, None, True)

    if action == "pickup":
        key_id = grid.key_at(state.pos)
        if key_id is not None and key_id not in state.held_keys:
            door = grid.door_for_key(key_id)
            opened = state.open_doors | {door.door_id} if door else state.open_doors
            next_state = replace(
                state,
                held_keys=state.held_keys | {key_id},
                open_doors=opened,
                reward=state.reward + STEP_REWARD,
            )
            return StepOutcome(next_state, STEP_REWARD, False, KEY_KIND, True)
        next_state = replace(state, reward=state.reward + STEP_REWARD)
        return StepOutcome(next_state, STEP_REWARD, False, None, False)

    # press: a switch stays on its cell, so pressing is repeatable.
    switch_id = grid.switch_at(state.pos)
    if switch_id is not None:
        door = grid.door_for_switch(switch_id)
        opened = state.open_doors | {door.door_id} if door else state.open_doors
        next_state = replace(
            state,
            pressed_switches=state.pressed_switches | {switch_id},
            open_doors=opened,
            reward=state.reward + STEP_REWARD,
        )
        return StepOutcome(next_state, STEP_REWARD, False, SWITCH_KIND, True)
    next_state = replace(state, reward=state.reward + STEP_REWARD)
    return StepOutcome(next_state, STEP_REWARD, False, None, False)


def interactable_objects(grid: GridMap, state: GridState) -> set[str]:
    """Object kinds on the agent's cell (a picked-up key is gone from it)."""
    out: set[str] = set()
    key_id = grid.key_at(state.pos)
    if key_id is not None and key_id not in state.held_keys:
        out.add(KEY_KIND)
    if grid.switch_at(state.pos) is not None:
        out.add(SWITCH_KIND)
    return out


def record_log(
    grid: GridMap, trajectory, include_movement: bool = True
) -> ObservationLog:
    """Replay a trajectory from the start and log its action codes.

    Successful object interactions emit ``({kind}, {action})`` codes;
    successful movements are attributed to the agent pseudo-object (omit them
    with ``include_movement=False``).  Unsuccessful actions emit nothing.
    """
    state = GridState.initial(grid)
    codes: list[ActionCode] = []
    for index, action in enumerate(trajectory):
        if state.terminal:
            raise ReplayError(index, "trajectory continues past a terminal state")
        try:
            outcome = step(grid, state, action)
        except ValueError as exc:
            raise ReplayError(index, str(exc)) from exc
        if outcome.interacted is not None:
            codes.append(ActionCode((outcome.interacted,), (action,)))
        elif include_movement and outcome.succeeded and action in MOVE_DELTAS:
            codes.append(ActionCode((AGENT_OBJECT,), (action,)))
        state = outcome.state
    return ObservationLog(codes)


# ---------------------------------------------------------------------------
# Map parsing
# ---------------------------------------------------------------------------

def load_map(text: str) -> GridMap:
    lines = text.splitlines()
    if not lines:
        raise MapFormatError("empty map text")
    header = lines[0].split()
    if len(header) != 2:
        raise MapFormatError("header must be '<width> <height>'")
    try:
        width, height = int(header[0]), int(header[1])
    except ValueError as exc:
        raise MapFormatError("header must be '<width> <height>'") from exc
    if width <= 0 or height <= 0:
        raise MapFormatError("width and height must be positive")
    if len(lines) < 1 + height:
        raise MapFormatError(f"expected {height} grid rows, got {len(lines) - 1}")

    walls: set[tuple[int, int]] = set()
    pits: set[tuple[int, int]] = set()
    starts: list[tuple[int, int]] = []
    goals: list[tuple[int, int]] = []
    keys: dict[str, tuple[int, int]] = {}
    key_doors: dict[str, tuple[int, int]] = {}
    switches: dict[str, tuple[int, int]] = {}
    switch_door_cells: set[tuple[int, int]] = set()

    for r in range(height):
        row = lines[1 + r]
        if len(row) != width:
            raise MapFormatError(f"row {r} has length {len(row)}, expected {width}")
        for c, ch in enumerate(row):
            pos = (r, c)
            if ch == "#":
                walls.add(pos)
            elif ch == ".":
                pass
            elif ch == "S":
                starts.append(pos)
            elif ch == "G":
                goals.append(pos)
            elif ch == "^":
                pits.add(pos)
            elif ch == "|":
                switch_door_cells.add(pos)
            elif ch.islower() and ch.isalpha():
                if ch in keys:
                    raise MapFormatError(f"duplicate key {ch!r} at {pos}")
                keys[ch] = pos
            elif ch.isupper() and ch.isalpha():
                if ch in key_doors:
                    raise MapFormatError(f"duplicate door {ch!r} at {pos}")
                key_doors[ch] = pos
            elif ch.isdigit():
                if ch in switches:
                    raise MapFormatError(f"duplicate switch {ch!r} at {pos}")
                switches[ch] = pos
            else:
                raise MapFormatError(f"unknown map character {ch!r} at {pos}")

    sidecar_links: dict[str, tuple[int, int]] = {}
    for extra in lines[1 + height:]:
        if not extra.strip():
            continue
        parts = extra.split()
        if len(parts) != 4 or parts[0] != "door":
            raise MapFormatError(f"bad sidecar line {extra!r}")
        digit = parts[1]
        try:
            pos = (int(parts[2]), int(parts[3]))
        except ValueError as exc:
            raise MapFormatError(f"bad sidecar line {extra!r}") from exc
        if digit not in switches:
            raise MapFormatError(f"sidecar references unknown switch {digit!r}")
        if digit in sidecar_links:
            raise MapFormatError(f"switch {digit!r} linked to more than one door")
        if pos not in switch_door_cells:
            raise MapFormatError(f"sidecar points at non-door cell {pos}")
        sidecar_links[digit] = pos

    if len(starts) != 1:
        raise MapFormatError(f"expected exactly one start, found {len(starts)}")
    if len(goals) != 1:
        raise MapFormatError(f"expected exactly one goal, found {len(goals)}")

    doors: list[Door] = []
    for letter, pos in key_doors.items():
        key_id = letter.lower()
        if key_id not in keys:
            raise MapFormatError(f"unlinked door at {pos}")
        doors.append(Door(letter, pos, KEY_KIND, key_id, keys[key_id]))
    linked_cells = set(sidecar_links.values())
    for pos in switch_door_cells:
        if pos not in linked_cells:
            raise MapFormatError(f"unlinked door at {pos}")
    for digit, pos in sidecar_links.items():
        doors.append(Door(digit, pos, SWITCH_KIND, digit, switches[digit]))

    return GridMap(
        width=width,
        height=height,
        walls=frozenset(walls),
        pits=frozenset(pits),
        start=starts[0],
        goal=goals[0],
        keys=tuple(sorted(keys.items())),
        switches=tuple(sorted(switches.items())),
        doors=tuple(sorted(doors, key=lambda d: d.door_id)),
    )


def serialize_map(grid: GridMap) -> str:
    """Canonical text form; ``load_map(serialize_map(g)) == g``."""
    rows = [["." for _ in range(grid.width)] for _ in range(grid.height)]
    for r, c in grid.walls:
        rows[r][c] = "#"
    for r, c in grid.pits:
        rows[r][c] = "^"
    rows[grid.start[0]][grid.start[1]] = "S"
    rows[grid.goal[0]][grid.goal[1]] = "G"
    for key_id, (r, c) in grid.keys:
        rows[r][c] = key_id
    for switch_id, (r, c) in grid.switches:
        rows[r][c] = switch_id
    sidecars = []
    for door in grid.doors:
        r, c = door.pos
        if door.operated_by == KEY_KIND:
            rows[r][c] = door.door_id
        else:
            rows[r][c] = "|"
            sidecars.append(f"door {door.operator_id} {r} {c}")
    lines = [f"{grid.width} {grid.height}"]
    lines.extend("".join(row) for row in rows)
    lines.extend(sorted(sidecars))
    return "\n".join(lines) + "\n"


def canonical_map() -> GridMap:
    """The bundled 7x8 experiment map (1 key door, 1 switch door, 2 pits)."""
    text = (
        resources.files("acrlab.data").joinpath("lightworld.map").read_text("utf-8")
    )
    return load_map(text)
