"""Backend selection: compiled kernels when importable, pure Python otherwise.

Both backends implement identical semantics (bit-for-bit, including RNG
consumption), so everything above this module is backend-agnostic.  Set the
environment variable ``ACRLAB_PURE=1`` to force the pure path even when the
extension built.
"""

from __future__ import annotations

import os
import time
from array import array
from typing import NamedTuple

from . import _pure

try:
    from . import _core  # type: ignore[attr-defined]
except ImportError:  # extension not built
    _core = None

HAVE_NATIVE = _core is not None

# Dense parent/queue arrays are only worth it below this encoded-space size;
# larger spaces fall back to the dict-based pure search.
DENSE_LIMIT = 1 << 25
MAX_UNITS = 16


def resolve(backend: str = "auto") -> str:
    if backend == "auto":
        if HAVE_NATIVE and not os.environ.get("ACRLAB_PURE"):
            return "native"
        return "pure"
    if backend == "native":
        if not HAVE_NATIVE:
            raise RuntimeError("compiled kernels are not available")
        return "native"
    if backend == "pure":
        return "pure"
    raise ValueError(f"unknown backend {backend!r}")


def run_episodes(
    q,
    next_state,
    reward,
    terminal,
    start,
    n_actions,
    episodes,
    max_steps,
    alpha,
    gamma,
    epsilon,
    rng_state,
    backend="auto",
):
    """Run seeded epsilon-greedy episodes; returns (rewards, steps, rng_state)."""
    if episodes <= 0:
        return [], [], rng_state
    out_rewards = array("d", bytes(8 * episodes))
    out_steps = array("i", bytes(4 * episodes))
    if resolve(backend) == "native":
        st = _core.run_episodes(
            q,
            next_state,
            reward,
            terminal,
            start,
            n_actions,
            episodes,
            max_steps,
            alpha,
            gamma,
            epsilon,
            rng_state,
            out_rewards,
            out_steps,
        )
    else:
        st = _pure.run_episodes(
            q,
            next_state,
            reward,
            terminal,
            start,
            n_actions,
            episodes,
            max_steps,
            alpha,
            gamma,
            epsilon,
            rng_state,
            out_rewards,
            out_steps,
        )
    return list(out_rewards), list(out_steps), st


class EncodedSearchResult(NamedTuple):
    goal_id: int
    expanded: int
    generated: int
    frontier_peak: int
    timed_out: bool
    plan_ops: list  # (predecessor_id, slot*4 + direction) pairs


def formation_bfs(
    cells,
    n_units,
    width,
    sort_positions,
    start_id,
    goal_mask,
    budget_s=None,
    backend="auto",
) -> EncodedSearchResult:
    """BFS over encoded unit placements; see _pure.formation_bfs for semantics."""
    n_states = cells**n_units if n_units else 1
    mode = resolve(backend)
    if mode == "native" and n_states <= DENSE_LIMIT and 0 < n_units <= MAX_UNITS:
        deadline = time.monotonic() + budget_s if budget_s is not None else -1.0
        parent_state = array("i", [-2]) * n_states
        parent_op = array("b", [-1]) * n_states
        queue = array("i", bytes(4 * n_states))
        goal_id, expanded, generated, peak, timed_out = _core.formation_bfs(
            cells,
            n_units,
            width,
            sort_positions,
            start_id,
            goal_mask,
            parent_state,
            parent_op,
            queue,
            deadline,
        )
        plan_ops = []
        if goal_id >= 0:
            cur = goal_id
            while True:
                prev = parent_state[cur]
                if prev < 0:
                    break
                plan_ops.append((prev, parent_op[cur]))
                cur = prev
            plan_ops.reverse()
        return EncodedSearchResult(
            goal_id, expanded, generated, peak, timed_out, plan_ops
        )
    deadline = time.monotonic() + budget_s if budget_s is not None else None
    goal_id, expanded, generated, peak, timed_out, plan_ops = _pure.formation_bfs(
        cells, n_units, width, sort_positions, start_id, goal_mask, deadline
    )
    return EncodedSearchResult(goal_id, expanded, generated, peak, timed_out, plan_ops)
