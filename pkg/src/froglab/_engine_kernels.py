"""Compiled frog-model engine.

Frogs are aggregated into counts per ``(vertex, arrival code)``: code 0 for
a frog that has not moved yet, 1 for a frog that arrived from the parent,
``2 + i`` for one that arrived from child ``i``.  The simple-random-walk
variant ignores the arrival direction and uses a single code.  Vertices are
heap indices of the rooted tree (root 0, child ``i`` of ``v`` is
``v*d + 1 + i``) stored densely up to a fixed depth.
"""

from __future__ import annotations

import numpy as np
from numba import njit

STANDARD, NONBACKTRACKING, SELF_SIMILAR = 0, 1, 2
INIT_POISSON, INIT_ONE, INIT_FIXED = 0, 1, 2

OK, ERR_DEPTH, ERR_FROGS = 0, 1, 2


@njit(cache=True)
def heap_size(d, depth):
    """Number of vertices at levels ``0..depth``."""
    total = 0
    size = 1
    for _ in range(depth + 1):
        total += size
        size *= d
    return total


@njit(cache=True)
def _sleepers(rng, init_kind, mu, k_fixed):
    if init_kind == INIT_POISSON:
        return rng.poisson(mu)
    if init_kind == INIT_ONE:
        return 1
    return k_fixed


@njit(cache=True)
def simulate(rng, finite, height, d, variant, root_reflect, init_kind, mu, k_fixed, T, observe_depth, depth_alloc, frog_cap):
    """Run one frog model to time ``T``.

    Parameters
    ----------
    finite, height : tree is levels ``0..height`` when ``finite``
    variant : STANDARD, NONBACKTRACKING or SELF_SIMILAR
    observe_depth : frogs at depth ``m`` at time ``t`` with
        ``t + max(0, m - observe_depth) > T`` are dropped; ``-1`` keeps all
    depth_alloc : deepest level held in memory; deeper moves abort the run

    Returns
    -------
    tuple
        ``(status, steps_done, returns, D, D_exact, active, first_visit,
        created, killed, pruned, max_entries)``
    """
    C = 1 if variant == STANDARD else d + 2
    N = heap_size(d, depth_alloc)
    cur = np.zeros(N * C, np.int64)
    nxt = np.zeros(N * C, np.int64)
    first_visit = np.full(N, -1, np.int32)
    inlist = np.zeros(N, np.uint8)
    entries = np.zeros(N, np.int32)
    cur_v = np.empty(N, np.int64)
    cur_dep = np.empty(N, np.int64)
    nxt_v = np.empty(N, np.int64)
    nxt_dep = np.empty(N, np.int64)
    lvl = np.zeros(depth_alloc + 2, np.int64)
    full = np.zeros(depth_alloc + 2, np.int64)
    size = 1
    for l in range(depth_alloc + 2):
        full[l] = size
        size *= d

    returns = np.zeros(T + 1, np.int64)
    D = np.zeros(T + 1, np.int64)
    D_exact = np.zeros(T + 1, np.bool_)
    active = np.zeros(T + 1, np.int64)
    dest_v = np.empty(d + 1, np.int64)
    dest_c = np.empty(d + 1, np.int64)
    dest_p = np.empty(d + 1, np.float64)

    first_visit[0] = 0
    lvl[0] = 1
    cur[0] = 1  # the initial frog, code 0
    cur_v[0] = 0
    cur_dep[0] = 0
    n_cur = 1
    created = 1
    killed = 0
    pruned = 0
    max_entries = 0
    frontier = 1
    biased_root = variant == NONBACKTRACKING or (variant == SELF_SIMILAR and root_reflect)
    active[0] = 1
    D_exact[0] = observe_depth < 0 or 1 <= observe_depth + T

    for t in range(1, T + 1):
        n_nxt = 0
        for idx in range(n_cur):
            v = cur_v[idx]
            dep = cur_dep[idx]
            is_root = v == 0
            is_leaf = finite and dep == height
            for code in range(C):
                k = cur[v * C + code]
                if k == 0:
                    continue
                cur[v * C + code] = 0
                # list the destinations and their probabilities
                m = 0
                if is_leaf:
                    dest_v[0] = (v - 1) // d
                    dest_c[0] = 2 + (v - 1) % d
                    dest_p[0] = 1.0
                    m = 1
                elif variant == STANDARD or code == 0:
                    if not is_root:
                        dest_v[m] = (v - 1) // d
                        dest_c[m] = 2 + (v - 1) % d
                        m += 1
                    for i in range(d):
                        dest_v[m] = v * d + 1 + i
                        dest_c[m] = 1
                        m += 1
                    for i in range(m):
                        dest_p[i] = 1.0 / m
                elif code == 1:
                    for i in range(d):
                        dest_v[m] = v * d + 1 + i
                        dest_c[m] = 1
                        dest_p[m] = 1.0 / d
                        m += 1
                elif is_root:
                    back = code - 2
                    for i in range(d):
                        dest_v[m] = 1 + i
                        dest_c[m] = 1
                        if biased_root:
                            dest_p[m] = 1.0 / (d * d) if i == back else (d + 1.0) / (d * d)
                        else:
                            dest_p[m] = 0.0 if i == back else 1.0 / (d - 1)
                        m += 1
                else:
                    back = code - 2
                    dest_v[m] = (v - 1) // d
                    dest_c[m] = 2 + (v - 1) % d
                    m += 1
                    for i in range(d):
                        if i != back:
                            dest_v[m] = v * d + 1 + i
                            dest_c[m] = 1
                            m += 1
                    for i in range(m):
                        dest_p[i] = 1.0 / m
                # multinomial split by sequential binomials
                remaining = k
                mass = 1.0
                for i in range(m):
                    if remaining == 0:
                        break
                    if i == m - 1 or dest_p[i] >= mass:
                        x = remaining
                    elif dest_p[i] <= 0.0:
                        x = 0
                    else:
                        x = rng.binomial(remaining, min(1.0, dest_p[i] / mass))
                    mass -= dest_p[i]
                    remaining -= x
                    if x == 0:
                        continue
                    w = dest_v[i]
                    wd = dep - 1 if dest_c[i] >= 2 else dep + 1
                    if observe_depth >= 0:
                        excess = wd - observe_depth
                        if excess < 0:
                            excess = 0
                        if t + excess > T:
                            pruned += x
                            continue
                    if wd > depth_alloc:
                        return (ERR_DEPTH, t - 1, returns, D, D_exact, active, first_visit, created, killed, pruned, max_entries)
                    if inlist[w] == 0:
                        inlist[w] = 1
                        nxt_v[n_nxt] = w
                        nxt_dep[n_nxt] = wd
                        n_nxt += 1
                    nxt[w * C + (0 if C == 1 else dest_c[i])] += x

        # arrivals at time t: returns, kills and wake-ups
        n_keep = 0
        alive = 0
        for idx in range(n_nxt):
            w = nxt_v[idx]
            wd = nxt_dep[idx]
            inlist[w] = 0
            total = 0
            for c in range(C):
                total += nxt[w * C + c]
            if w == 0:
                returns[t] += total
                if variant == SELF_SIMILAR and not root_reflect:
                    for c in range(C):
                        nxt[c] = 0
                    killed += total
                    total = 0
            elif first_visit[w] < 0:
                first_visit[w] = t
                lvl[wd] += 1
                if variant == SELF_SIMILAR:
                    # every arrival came from the parent; one survives
                    for c in range(C):
                        nxt[w * C + c] = 0
                    nxt[w * C + 1] = 1
                    killed += total - 1
                    total = 1
                    entries[w] += 1
                    if entries[w] > max_entries:
                        max_entries = entries[w]
                s = _sleepers(rng, init_kind, mu, k_fixed)
                if s > 0:
                    nxt[w * C] += s
                    total += s
                    created += s
                    if created > frog_cap:
                        return (ERR_FROGS, t - 1, returns, D, D_exact, active, first_visit, created, killed, pruned, max_entries)
            elif variant == SELF_SIMILAR:
                # later entries from outside the subtree are killed
                x = nxt[w * C + 1]
                if x > 0:
                    nxt[w * C + 1] = 0
                    killed += x
                    total -= x
            if total > 0:
                cur_v[n_keep] = w
                cur_dep[n_keep] = wd
                n_keep += 1
                alive += total
        # swap buffers; cur is all zeros after the move loop
        tmp = cur
        cur = nxt
        nxt = tmp
        n_cur = n_keep
        active[t] = alive

        while frontier <= depth_alloc and lvl[frontier] == full[frontier]:
            frontier += 1
        D[t] = frontier - 1
        exact = frontier <= depth_alloc
        if observe_depth >= 0 and frontier > observe_depth + T - t:
            exact = False
        D_exact[t] = exact

    return (OK, T, returns, D, D_exact, active, first_visit, created, killed, pruned, max_entries)


@njit(cache=True)
def star_A(pool, d, mu, trials, horizon, rng):
    """Return-time counts of the star-graph particle system.

    ``pool`` is a count matrix of point patterns; each copy of the input
    process is a uniformly drawn row (an empty pool means the empty
    process).  Output row ``s`` counts the visits to the outer root vertex
    at each time ``0..horizon`` in trial ``s``.
    """
    out = np.zeros((trials, horizon + 1), np.int64)
    n_pool = pool.shape[0]
    width = pool.shape[1]
    INF = 1 << 60
    s_time = np.empty(d, np.int64)
    done = np.zeros(d, np.bool_)
    for trial in range(trials):
        for i in range(d):
            s_time[i] = INF
            done[i] = False
        s_time[0] = 2
        # sleepers at the centre: woken at time 1, one uniform step at time 2
        z = rng.poisson(mu)
        for _ in range(z):
            r = rng.integers(0, d + 1)
            if r == d:
                if 2 <= horizon:
                    out[trial, 2] += 1
            elif 2 < s_time[r]:
                s_time[r] = 2
        while True:
            best = -1
            for i in range(d):
                if not done[i] and s_time[i] < INF and (best < 0 or s_time[i] < s_time[best]):
                    best = i
            if best < 0 or s_time[best] > horizon:
                break
            done[best] = True
            if n_pool == 0:
                continue
            row = rng.integers(0, n_pool)
            base = s_time[best]
            for k in range(width):
                m = pool[row, k]
                if m == 0:
                    continue
                when = base + k
                if when > horizon:
                    break
                for _ in range(m):
                    # to the centre at when - 1, then a nonbacktracking step
                    r = rng.integers(0, d)
                    if r == best:
                        r = d  # slot d stands for the outer root
                    if r == d:
                        out[trial, when] += 1
                    elif when < s_time[r]:
                        s_time[r] = when
    return out
