"""Synthetic object/action catalog for the exploration-cost benchmarks.

The catalog plays the role of a game-style domain inventory: a fixed action
set partitioned into categories, object kinds each mapped to exactly one
category (the ground truth probe oracles answer from), and named build
orders listing the kinds an agent must learn about in sequence.  The bundled
canonical instance has 9 actions in 4 categories over 12 kinds; it is a
plain JSON config so alternative inventories drop in without code changes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property

from .acr import (
    AcrGraph,
    ActionCategory,
    ActionCode,
    CategorySet,
    derive_categories,
)


@dataclass(frozen=True)
class SyntheticCatalog:
    actions: tuple[str, ...]
    categories: CategorySet
    build_orders: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(
            self,
            "build_orders",
            {name: tuple(order) for name, order in self.build_orders.items()},
        )
        covered: set[str] = set()
        for cat in self.categories:
            if not cat.actions:
                raise ValueError(f"category {cat.id} has no actions")
            overlap = covered & cat.actions
            if overlap:
                raise ValueError(f"actions {sorted(overlap)} in multiple categories")
            covered |= cat.actions
        if covered != set(self.actions):
            raise ValueError("categories must partition the action set")
        kind_owner: dict[str, int] = {}
        for cat in self.categories:
            for kind in cat.objects:
                if kind in kind_owner:
                    raise ValueError(f"object kind {kind!r} in multiple categories")
                kind_owner[kind] = cat.id
        for name, order in self.build_orders.items():
            for kind in order:
                if kind not in kind_owner:
                    raise ValueError(
                        f"build order {name!r} references unknown kind {kind!r}"
                    )

    @cached_property
    def kind_index(self) -> dict[str, ActionCategory]:
        out: dict[str, ActionCategory] = {}
        for cat in self.categories:
            for kind in cat.objects:
                out[kind] = cat
        return out

    @property
    def kinds(self) -> tuple[str, ...]:
        return tuple(sorted(self.kind_index))

    def category_of(self, kind: str) -> ActionCategory:
        try:
            return self.kind_index[kind]
        except KeyError:
            raise ValueError(f"unknown object kind {kind!r}") from None

    def oracle(self, kind: str):
        """Ground-truth association oracle for one object kind."""
        actions = self.category_of(kind).actions
        return lambda action: action in actions


# Canonical inventory: (category actions, kinds of that category).  Order
# fixes the category ids.
_CANONICAL = (
    (("attack", "move", "patrol"), ("soldier", "tank", "gunship", "scout-walker")),
    (("train", "set-rally"), ("barracks", "factory", "starport")),
    (("gather", "return-cargo"), ("harvester", "hauler")),
    (("research", "upgrade"), ("lab", "forge", "archive")),
)

_CANONICAL_ORDERS = {
    "outpost": ("barracks", "soldier", "soldier", "harvester", "barracks"),
    "armory-push": ("factory", "tank", "tank", "forge", "gunship", "harvester"),
    "tech-rush": (
        "lab",
        "archive",
        "starport",
        "scout-walker",
        "hauler",
        "soldier",
        "lab",
    ),
}


def canonical_catalog() -> SyntheticCatalog:
    graph = AcrGraph()
    for actions, kinds in _CANONICAL:
        for kind in kinds:
            graph.add(ActionCode((kind,), actions))
    return SyntheticCatalog(
        actions=tuple(sorted(graph.actions)),
        categories=derive_categories(graph),
        build_orders=dict(_CANONICAL_ORDERS),
    )


def catalog_to_dict(catalog: SyntheticCatalog) -> dict:
    """Mirrors the category-graph export format, plus build orders."""
    edges = sorted(
        [action, kind]
        for cat in catalog.categories
        for action in cat.actions
        for kind in cat.objects
    )
    return {
        "actions": sorted(catalog.actions),
        "objects": list(catalog.kinds),
        "edges": edges,
        "categories": [
            {
                "id": cat.id,
                "actions": list(cat.sorted_actions()),
                "objects": list(cat.sorted_objects()),
            }
            for cat in catalog.categories
        ],
        "build_orders": {
            name: list(order) for name, order in sorted(catalog.build_orders.items())
        },
    }


def catalog_from_dict(data: dict) -> SyntheticCatalog:
    cats = tuple(
        ActionCategory(
            id=int(c["id"]),
            actions=frozenset(c["actions"]),
            objects=frozenset(c["objects"]),
        )
        for c in data.get("categories", [])
    )
    return SyntheticCatalog(
        actions=tuple(sorted(data["actions"])),
        categories=CategorySet(cats),
        build_orders={
            name: tuple(order)
            for name, order in data.get("build_orders", {}).items()
        },
    )


def load_catalog(path) -> SyntheticCatalog:
    with open(path, "r", encoding="utf-8") as fh:
        return catalog_from_dict(json.load(fh))


def save_catalog(path, catalog: SyntheticCatalog) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(catalog_to_dict(catalog), fh, indent=2, sort_keys=True)
        fh.write("\n")
