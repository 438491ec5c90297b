"""Pure-Python fallbacks for the compiled kernels.

These are the reference semantics: ``acrlab._core`` reimplements exactly the
same loops in C, including RNG consumption and float operation order, so both
backends produce bit-identical results (covered by tests/test_backends.py).
"""

from __future__ import annotations

import time
from collections import deque

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_INV53 = 1.0 / 9007199254740992.0


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
    out_rewards,
    out_steps,
):
    """Epsilon-greedy tabular Q-learning episodes over precompiled tables.

    ``q`` is a flat state-major value table, mutated in place.  Returns the
    final RNG state so callers can keep consuming one seeded stream.
    """
    nxt = list(next_state)
    rew = list(reward)
    term = bytes(terminal)
    st = rng_state
    for ep in range(episodes):
        s = start
        total = 0.0
        n = 0
        for _ in range(max_steps):
            st = (st + _GOLDEN) & _MASK
            z = st
            z = ((z ^ (z >> 30)) * _MIX1) & _MASK
            z = ((z ^ (z >> 27)) * _MIX2) & _MASK
            z ^= z >> 31
            if (z >> 11) * _INV53 < epsilon:
                st = (st + _GOLDEN) & _MASK
                z = st
                z = ((z ^ (z >> 30)) * _MIX1) & _MASK
                z = ((z ^ (z >> 27)) * _MIX2) & _MASK
                z ^= z >> 31
                a = z % n_actions
            else:
                base = s * n_actions
                a = 0
                best = q[base]
                for b in range(1, n_actions):
                    v = q[base + b]
                    if v > best:
                        best = v
                        a = b
            idx = s * n_actions + a
            ns = nxt[idx]
            r = rew[idx]
            t = term[idx]
            if t:
                mx = 0.0
            else:
                nb = ns * n_actions
                mx = q[nb]
                for b in range(1, n_actions):
                    v = q[nb + b]
                    if v > mx:
                        mx = v
            q[idx] = q[idx] + alpha * (r + gamma * mx - q[idx])
            total += r
            n += 1
            s = ns
            if t:
                break
        out_rewards[ep] = total
        out_steps[ep] = n
    return st


def formation_bfs(
    cells, n_units, width, sort_positions, start_id, goal_mask, deadline
):
    """Breadth-first search over base-``cells`` encoded unit placements.

    Successors are generated unit-by-unit (ascending slot) and direction in
    (down, left, right, up) order; ``generated`` counts every legal successor
    constructed, duplicates included.  Returns
    ``(goal_id, expanded, generated, frontier_peak, timed_out, plan_ops)``
    where plan_ops is a list of (predecessor_id, slot*4+direction) pairs.
    """
    pows = [cells**i for i in range(max(n_units, 1))]
    parent: dict[int, tuple[int, int]] = {start_id: (-1, -1)}
    queue = deque([start_id])
    expanded = 0
    generated = 1
    peak = 1
    timed_out = False
    goal_id = -1
    pos = [0] * n_units
    while queue:
        if (
            deadline is not None
            and (expanded & 4095) == 0
            and time.monotonic() > deadline
        ):
            timed_out = True
            break
        s = queue.popleft()
        expanded += 1
        t = s
        mask = 0
        for i in range(n_units):
            p = t % cells
            t //= cells
            pos[i] = p
            mask |= 1 << p
        if mask == goal_mask:
            goal_id = s
            break
        for i in range(n_units):
            p = pos[i]
            for d in range(4):
                if d == 0:
                    np_ = p + width
                    if np_ >= cells:
                        continue
                elif d == 1:
                    if p % width == 0:
                        continue
                    np_ = p - 1
                elif d == 2:
                    np_ = p + 1
                    if np_ % width == 0:
                        continue
                else:
                    np_ = p - width
                    if np_ < 0:
                        continue
                if mask & (1 << np_):
                    continue
                if sort_positions:
                    moved = sorted(pos[:i] + [np_] + pos[i + 1 :])
                    ns = 0
                    for j in range(n_units):
                        ns += moved[j] * pows[j]
                else:
                    ns = s + (np_ - p) * pows[i]
                generated += 1
                if ns not in parent:
                    parent[ns] = (s, i * 4 + d)
                    queue.append(ns)
        if len(queue) > peak:
            peak = len(queue)
    plan_ops: list[tuple[int, int]] = []
    if goal_id >= 0:
        cur = goal_id
        while True:
            prev, op = parent[cur]
            if prev < 0:
                break
            plan_ops.append((prev, op))
            cur = prev
        plan_ops.reverse()
    return goal_id, expanded, generated, peak, timed_out, plan_ops
