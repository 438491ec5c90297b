# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops: episode runner and formation breadth-first search.

Mirrors acrlab._pure bit-for-bit (same RNG stream, same float operation
order); see that module for the reference semantics and
benchmarks/compare_backends.py for the speed comparison.
"""

from libc.stdint cimport int64_t, uint64_t

import time


cdef inline uint64_t _next_u64(uint64_t *state) noexcept:
    state[0] = state[0] + <uint64_t>0x9E3779B97F4A7C15
    cdef uint64_t z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def run_episodes(double[::1] q,
                 int[::1] next_state,
                 double[::1] reward,
                 unsigned char[::1] terminal,
                 int start,
                 int n_actions,
                 int episodes,
                 int max_steps,
                 double alpha,
                 double gamma,
                 double epsilon,
                 unsigned long long rng_state,
                 double[::1] out_rewards,
                 int[::1] out_steps):
    cdef uint64_t st = rng_state
    cdef uint64_t z
    cdef double inv53 = 1.0 / 9007199254740992.0
    cdef int ep, s, a, b, n, ns
    cdef int64_t base, idx, nb
    cdef unsigned char t
    cdef double total, best, v, mx, r
    cdef int step_i

    for ep in range(episodes):
        s = start
        total = 0.0
        n = 0
        for step_i in range(max_steps):
            z = _next_u64(&st)
            if (<double>(z >> 11)) * inv53 < epsilon:
                z = _next_u64(&st)
                a = <int>(z % <uint64_t>n_actions)
            else:
                base = <int64_t>s * n_actions
                a = 0
                best = q[base]
                for b in range(1, n_actions):
                    v = q[base + b]
                    if v > best:
                        best = v
                        a = b
            idx = <int64_t>s * n_actions + a
            ns = next_state[idx]
            r = reward[idx]
            t = terminal[idx]
            if t:
                mx = 0.0
            else:
                nb = <int64_t>ns * n_actions
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


def formation_bfs(int cells,
                  int n_units,
                  int width,
                  bint sort_positions,
                  long long start_id,
                  unsigned long long goal_mask,
                  int[::1] parent_state,
                  signed char[::1] parent_op,
                  int[::1] queue,
                  double deadline):
    """Dense-array BFS twin of acrlab._pure.formation_bfs.

    ``parent_state`` must be pre-filled with -2 (unvisited); pass a negative
    ``deadline`` to disable the time budget.  Plan reconstruction happens in
    the caller by walking the parent arrays.
    """
    cdef long long head = 0, tail = 0
    cdef long long expanded = 0, generated = 0, peak = 0
    cdef long long s, t, ns, goal_id = -1
    cdef uint64_t mask
    cdef int i, j, d, d2, p, np_, tmp
    cdef int pos[16]
    cdef int moved[16]
    cdef int64_t pows[16]
    cdef bint timed_out = False

    pows[0] = 1
    for i in range(1, n_units):
        pows[i] = pows[i - 1] * cells

    queue[tail] = <int>start_id
    tail += 1
    parent_state[start_id] = -1
    parent_op[start_id] = -1
    generated = 1
    peak = 1

    while head < tail:
        if (expanded & 4095) == 0 and deadline > 0.0:
            if time.monotonic() > deadline:
                timed_out = True
                break
        s = queue[head]
        head += 1
        expanded += 1
        t = s
        mask = 0
        for i in range(n_units):
            p = <int>(t % cells)
            t = t // cells
            pos[i] = p
            mask |= (<uint64_t>1) << p
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
                if mask & ((<uint64_t>1) << np_):
                    continue
                if sort_positions:
                    for j in range(n_units):
                        moved[j] = pos[j]
                    moved[i] = np_
                    # insertion sort; n_units <= 16
                    for j in range(1, n_units):
                        tmp = moved[j]
                        d2 = j - 1
                        while d2 >= 0 and moved[d2] > tmp:
                            moved[d2 + 1] = moved[d2]
                            d2 -= 1
                        moved[d2 + 1] = tmp
                    ns = 0
                    for j in range(n_units):
                        ns += moved[j] * pows[j]
                else:
                    ns = s + (<int64_t>(np_ - p)) * pows[i]
                generated += 1
                if parent_state[ns] == -2:
                    parent_state[ns] = <int>s
                    parent_op[ns] = <signed char>(i * 4 + d)
                    queue[tail] = <int>ns
                    tail += 1
        if tail - head > peak:
            peak = tail - head

    return goal_id, expanded, generated, peak, timed_out
