"""Probe-based identification of a novel object's action category.

Given the known categories as candidate hypotheses, actions are tried one at
a time on the object and every candidate inconsistent with the observed
association is eliminated.  Probe order comes from the binary entropy of the
candidate-membership probability; three strategies are provided because the
minimum-entropy rule and the information-gain convention (maximum entropy)
pick opposite ends of the same ranking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Callable, Iterable, Iterator

from .acr import ActionCategory

# Entropy values closer than this are considered tied; ties break
# lexicographically on the action label.
ENTROPY_TIE_TOL = 1e-12


class ProbeStrategy(Enum):
    PAPER_MIN_ENTROPY = "paper"
    MAX_ENTROPY = "maxent"
    LEXICOGRAPHIC = "lex"


class IndistinguishableCandidatesError(ValueError):
    """No untried action can tell the remaining candidates apart."""

    def __init__(self, candidates: tuple[ActionCategory, ...]):
        names = [sorted(c.actions) for c in candidates]
        super().__init__(f"indistinguishable candidates: {names}")
        self.candidates = candidates


@dataclass(frozen=True)
class HypothesisSet:
    """Candidate categories still consistent with the probes so far."""

    candidates: tuple[ActionCategory, ...]

    def __len__(self) -> int:
        return len(self.candidates)

    def __iter__(self) -> Iterator[ActionCategory]:
        return iter(self.candidates)


@dataclass(frozen=True)
class NewCategory:
    """Result marker: the object matched no known category."""

    actions: frozenset[str]


@dataclass(frozen=True)
class ProbeReport:
    """Trace of one identification run; ``a_obj`` is the probe count."""

    probes: tuple[tuple[str, bool], ...]
    result: ActionCategory | NewCategory

    @property
    def a_obj(self) -> int:
        return len(self.probes)

    def to_json_dict(self) -> dict:
        if isinstance(self.result, NewCategory):
            result = {"new_category": sorted(self.result.actions)}
        else:
            result = {"known_id": self.result.id}
        return {
            "probes": [[a, ans] for a, ans in self.probes],
            "result": result,
            "a_obj": self.a_obj,
        }


def probability_contains(action: str, s: HypothesisSet) -> Fraction:
    """Exact fraction of candidates whose action set contains ``action``."""
    if len(s) == 0:
        raise ValueError("empty hypothesis set")
    hits = sum(1 for c in s if action in c.actions)
    return Fraction(hits, len(s))


def _binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def entropy(action: str, s: HypothesisSet) -> float:
    """Binary entropy (bits) of the membership probability; H(0) = H(1) = 0."""
    return _binary_entropy(float(probability_contains(action, s)))


def eliminate(s: HypothesisSet, action: str, associated: bool) -> HypothesisSet:
    """Keep candidates containing ``action`` if associated, else those without."""
    if associated:
        kept = tuple(c for c in s if action in c.actions)
    else:
        kept = tuple(c for c in s if action not in c.actions)
    return HypothesisSet(kept)


def select_probe(
    s: HypothesisSet, tried: Iterable[str], strategy: ProbeStrategy
) -> str:
    """Pick the next action to try on the object.

    Only discriminating actions (membership probability strictly between 0
    and 1 over the current candidates) are ever selected; ties break
    lexicographically.
    """
    if len(s) <= 1:
        raise ValueError("select_probe needs at least two candidates")
    tried = set(tried)
    candidate_actions = sorted({a for c in s for a in c.actions} - tried)
    discriminating: list[tuple[str, Fraction]] = []
    for a in candidate_actions:
        p = probability_contains(a, s)
        if 0 < p < 1:
            discriminating.append((a, p))
    if not discriminating:
        raise IndistinguishableCandidatesError(s.candidates)
    if strategy is ProbeStrategy.LEXICOGRAPHIC:
        return discriminating[0][0]
    minimize = strategy is ProbeStrategy.PAPER_MIN_ENTROPY
    best_action = discriminating[0][0]
    best_h = _binary_entropy(float(discriminating[0][1]))
    for a, p in discriminating[1:]:
        h = _binary_entropy(float(p))
        if (minimize and h < best_h - ENTROPY_TIE_TOL) or (
            not minimize and h > best_h + ENTROPY_TIE_TOL
        ):
            best_action, best_h = a, h
    return best_action


class OnlineInference:
    """Stepwise driver for identifying one object's category.

    ``next_probe``/``observe`` advance one probe at a time so the same logic
    serves both batch identification (``infer_category``) and the learning
    agent, which interleaves probes with environment steps.  When elimination
    empties the candidate set the driver falls back to exhaustively probing
    the untried actions and reports the exact associated set as a new
    category.
    """

    def __init__(
        self,
        s0: HypothesisSet,
        all_actions: Iterable[str],
        strategy: ProbeStrategy = ProbeStrategy.PAPER_MIN_ENTROPY,
    ):
        if len(s0) == 0:
            raise ValueError("empty hypothesis set")
        self._all_actions = tuple(sorted(set(all_actions)))
        universe = set(self._all_actions)
        for c in s0:
            missing = c.actions - universe
            if missing:
                raise ValueError(
                    f"candidate actions {sorted(missing)} not in all_actions"
                )
        self._candidates = s0
        self._strategy = strategy
        self._tried: set[str] = set()
        self._probes: list[tuple[str, bool]] = []
        self._result: ActionCategory | NewCategory | None = None
        self._settle()

    @property
    def done(self) -> bool:
        return self._result is not None

    @property
    def result(self) -> ActionCategory | NewCategory:
        if self._result is None:
            raise ValueError("inference still running")
        return self._result

    @property
    def candidates(self) -> HypothesisSet:
        return self._candidates

    def _untried(self) -> list[str]:
        return [a for a in self._all_actions if a not in self._tried]

    def _settle(self) -> None:
        if self._result is not None:
            return
        if len(self._candidates) == 1:
            # The survivor is accepted without re-verifying its actions.
            self._result = self._candidates.candidates[0]
        elif len(self._candidates) == 0 and not self._untried():
            associated = frozenset(a for a, ans in self._probes if ans)
            self._result = NewCategory(associated)

    def next_probe(self) -> str:
        if self.done:
            raise ValueError("inference already finished")
        if len(self._candidates) > 1:
            return select_probe(self._candidates, self._tried, self._strategy)
        # Contradiction: learn the new category exhaustively.
        return self._untried()[0]

    def observe(self, action: str, associated: bool) -> None:
        if self.done:
            raise ValueError("inference already finished")
        if action in self._tried:
            raise ValueError(f"action {action!r} probed twice")
        self._tried.add(action)
        self._probes.append((action, bool(associated)))
        self._candidates = eliminate(self._candidates, action, associated)
        self._settle()

    def report(self) -> ProbeReport:
        return ProbeReport(tuple(self._probes), self.result)


def infer_category(
    oracle: Callable[[str], bool],
    s0: HypothesisSet,
    all_actions: Iterable[str],
    strategy: ProbeStrategy = ProbeStrategy.PAPER_MIN_ENTROPY,
) -> ProbeReport:
    """Probe until one candidate survives or a new category is pinned down.

    ``oracle(action)`` answers whether the action is associated with the
    object; it must be total and deterministic over ``all_actions``.
    """
    inference = OnlineInference(s0, all_actions, strategy)
    while not inference.done:
        action = inference.next_probe()
        inference.observe(action, bool(oracle(action)))
    return inference.report()


def baseline_probe(
    oracle: Callable[[str], bool], all_actions: Iterable[str]
) -> ProbeReport:
    """Uncategorized baseline: try every action once, in lexicographic order."""
    probes = tuple((a, bool(oracle(a))) for a in sorted(set(all_actions)))
    associated = frozenset(a for a, ans in probes if ans)
    return ProbeReport(probes, NewCategory(associated))
