"""Action-code logs and the object/action-category graph built from them.

An *action code* records which actions were applied to which objects at one
observation timestep.  Ingesting codes grows a bipartite action-object graph;
actions whose object neighborhoods are set-equal collapse into one *action
category*, yielding a compact one-to-many map from categories to objects that
downstream planning and learning code uses to restrict action choices.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Sequence

# Reserved pseudo-object for actions observed without any real object (e.g.
# plain movement).  Categories linked only to it never feed allowed_actions
# and their actions stay in the non-object action set.
AGENT_OBJECT = "__agent__"


class LogFormatError(ValueError):
    """A log line failed to parse or validate; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _clean_labels(values: Iterable[str], what: str) -> tuple[str, ...]:
    """Validate and dedupe labels, preserving first-seen order."""
    out: dict[str, None] = {}
    count = 0
    for v in values:
        count += 1
        if not isinstance(v, str):
            raise ValueError(f"{what} labels must be strings, got {v!r}")
        if not v or v != v.strip():
            raise ValueError(
                f"{what} label {v!r} must be nonempty with no surrounding whitespace"
            )
        out[v] = None
    if count == 0:
        raise ValueError(f"{what} must be nonempty")
    return tuple(out)


@dataclass(frozen=True)
class ActionCode:
    """One (object set, action set) observation; both sets ordered and deduped."""

    objects: tuple[str, ...]
    actions: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "objects", _clean_labels(self.objects, "objects"))
        object.__setattr__(self, "actions", _clean_labels(self.actions, "actions"))


@dataclass
class ObservationLog:
    """Ordered sequence of action codes, as read; duplicates permitted."""

    codes: list[ActionCode] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.codes)

    def __iter__(self) -> Iterator[ActionCode]:
        return iter(self.codes)


def parse_log(source: str | IO[str] | Iterable[str]) -> ObservationLog:
    """Parse a JSON-lines action-code log.

    Each line is ``{"objects": [...], "actions": [...]}``; an optional ``"t"``
    field is informational and ignored.  Blank lines are skipped.  Errors
    carry the 1-based line number.
    """
    lines = source.splitlines() if isinstance(source, str) else source
    codes: list[ActionCode] = []
    for line_no, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(line_no, f"malformed JSON ({exc.msg})") from exc
        if not isinstance(record, dict):
            raise LogFormatError(line_no, "expected a JSON object")
        for key in ("objects", "actions"):
            if key not in record:
                raise LogFormatError(line_no, f'missing "{key}" field')
            if not isinstance(record[key], list):
                raise LogFormatError(line_no, f'"{key}" must be an array')
        try:
            codes.append(ActionCode(tuple(record["objects"]), tuple(record["actions"])))
        except ValueError as exc:
            raise LogFormatError(line_no, str(exc)) from exc
    return ObservationLog(codes)


class AcrGraph:
    """Bipartite action-object co-occurrence graph, grown incrementally.

    Vertex insertion order is preserved (it fixes category ids); equality is
    structural, so two graphs built from the same codes in any order compare
    equal.
    """

    def __init__(self):
        self._action_objects: dict[str, set[str]] = {}
        self._object_actions: dict[str, set[str]] = {}

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(self._action_objects)

    @property
    def objects(self) -> tuple[str, ...]:
        return tuple(self._object_actions)

    @property
    def edges(self) -> frozenset[tuple[str, str]]:
        return frozenset(
            (a, o) for a, objs in self._action_objects.items() for o in objs
        )

    def neighborhood(self, action: str) -> frozenset[str]:
        return frozenset(self._action_objects.get(action, ()))

    def actions_of(self, obj: str) -> frozenset[str]:
        return frozenset(self._object_actions.get(obj, ()))

    def add(self, code: ActionCode) -> "AcrGraph":
        for a in code.actions:
            self._action_objects.setdefault(a, set()).update(code.objects)
        for o in code.objects:
            self._object_actions.setdefault(o, set()).update(code.actions)
        return self

    def copy(self) -> "AcrGraph":
        g = AcrGraph()
        g._action_objects = {a: set(objs) for a, objs in self._action_objects.items()}
        g._object_actions = {o: set(acts) for o, acts in self._object_actions.items()}
        return g

    def __eq__(self, other) -> bool:
        if not isinstance(other, AcrGraph):
            return NotImplemented
        return (
            self._action_objects == other._action_objects
            and self._object_actions == other._object_actions
        )

    def __repr__(self) -> str:
        return (
            f"AcrGraph({len(self._action_objects)} actions, "
            f"{len(self._object_actions)} objects, {len(self.edges)} edges)"
        )


def ingest(graph: AcrGraph, code: ActionCode) -> AcrGraph:
    """Add a code's full action x object cross-product of edges (idempotent)."""
    return graph.add(code)


def build_graph(log: ObservationLog) -> AcrGraph:
    graph = AcrGraph()
    for code in log:
        graph.add(code)
    return graph


@dataclass(frozen=True)
class ActionCategory:
    """Maximal set of actions sharing one object neighborhood."""

    id: int
    actions: frozenset[str]
    objects: frozenset[str]

    @property
    def is_object_linked(self) -> bool:
        """True when linked to at least one real (non-pseudo) object."""
        return any(o != AGENT_OBJECT for o in self.objects)

    def sorted_actions(self) -> tuple[str, ...]:
        return tuple(sorted(self.actions))

    def sorted_objects(self) -> tuple[str, ...]:
        return tuple(sorted(self.objects))


@dataclass(frozen=True)
class CategorySet:
    """Partition of a graph's actions into categories, in discovery-id order."""

    categories: tuple[ActionCategory, ...] = ()

    def __len__(self) -> int:
        return len(self.categories)

    def __iter__(self) -> Iterator[ActionCategory]:
        return iter(self.categories)

    def get(self, category_id: int) -> ActionCategory:
        for c in self.categories:
            if c.id == category_id:
                return c
        raise KeyError(category_id)


def derive_categories(graph: AcrGraph) -> CategorySet:
    """Group actions by exact neighborhood equality.

    Ids are assigned in order of the first appearance of any member action;
    actions with empty neighborhoods share one category with an empty object
    set.
    """
    groups: dict[frozenset[str], list[str]] = {}
    for action in graph.actions:
        groups.setdefault(graph.neighborhood(action), []).append(action)
    cats = tuple(
        ActionCategory(id=i, actions=frozenset(actions), objects=signature)
        for i, (signature, actions) in enumerate(groups.items(), start=1)
    )
    return CategorySet(cats)


def categories_of(cs: CategorySet, obj: str) -> list[ActionCategory]:
    """All categories whose object set contains ``obj``, in id order."""
    return [c for c in cs if obj in c.objects]


def allowed_actions(cs: CategorySet, objects: Iterable[str]) -> set[str]:
    """Union of the action sets of every category linked to any given object."""
    out: set[str] = set()
    for obj in objects:
        for c in categories_of(cs, obj):
            out |= c.actions
    return out


def non_object_actions(cs: CategorySet, all_actions: Iterable[str]) -> set[str]:
    """``all_actions`` minus every object-linked category's actions.

    Categories linked only to the agent pseudo-object (or to nothing) do not
    count as object-linked, so their actions stay in the result.
    """
    universe = set(all_actions)
    for c in cs:
        for a in c.actions:
            if a not in universe:
                raise ValueError(
                    f"categorized action {a!r} is missing from all_actions"
                )
    covered: set[str] = set()
    for c in cs:
        if c.is_object_linked:
            covered |= c.actions
    return universe - covered


# ---------------------------------------------------------------------------
# Export format
# ---------------------------------------------------------------------------

def acr_to_dict(graph: AcrGraph, cs: CategorySet | None = None) -> dict:
    """JSON-ready export: arrays sorted lexicographically, categories by id."""
    if cs is None:
        cs = derive_categories(graph)
    return {
        "actions": sorted(graph.actions),
        "objects": sorted(graph.objects),
        "edges": sorted([a, o] for (a, o) in graph.edges),
        "categories": [
            {
                "id": c.id,
                "actions": list(c.sorted_actions()),
                "objects": list(c.sorted_objects()),
            }
            for c in cs
        ],
    }


def acr_from_dict(data: dict) -> tuple[AcrGraph, CategorySet]:
    graph = AcrGraph()
    for a in data.get("actions", []):
        graph._action_objects.setdefault(a, set())
    for o in data.get("objects", []):
        graph._object_actions.setdefault(o, set())
    for a, o in data.get("edges", []):
        graph._action_objects.setdefault(a, set()).add(o)
        graph._object_actions.setdefault(o, set()).add(a)
    cats = tuple(
        ActionCategory(
            id=int(c["id"]),
            actions=frozenset(c["actions"]),
            objects=frozenset(c["objects"]),
        )
        for c in data.get("categories", [])
    )
    return graph, CategorySet(cats)


def save_acr(path, graph: AcrGraph, cs: CategorySet | None = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(acr_to_dict(graph, cs), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_acr(path) -> tuple[AcrGraph, CategorySet]:
    with open(path, "r", encoding="utf-8") as fh:
        return acr_from_dict(json.load(fh))
