"""Compiled walk samplers.

Vertices are triples ``(up, h, depth)``: ``up`` steps above the root of the
homogeneous tree, then the vertex with heap index ``h`` (root 0, child ``i``
of ``h`` is ``h*d + 1 + i``) at ``depth`` below that ancestor.  Vertices of
the rooted trees have ``up == 0``.

Neighbor *slots* are ``0`` for the parent and ``1 + i`` for child ``i``.
Tree kinds: ``HOM``, ``ROOTED`` and ``FINITE`` (with height ``n``).
"""

from __future__ import annotations

import numpy as np
from numba import njit

HOM, ROOTED, FINITE = 0, 1, 2

# error codes returned by the kernels
OK, ERR_DEPTH, ERR_STEPS, ERR_CAP = 0, 1, 2, 3


@njit(cache=True)
def max_depth(d):
    """Deepest level whose heap indices fit comfortably in int64."""
    depth = 0
    size = 1
    while size < (1 << 60) // d:
        size *= d
        depth += 1
    return depth - 1


@njit(cache=True)
def parent_of(d, up, h, dep):
    if h == 0:
        return up + 1, 0, 0
    return up, (h - 1) // d, dep - 1


@njit(cache=True)
def child_of(d, up, h, dep, i):
    if h == 0 and up > 0:
        if i == 0:
            return up - 1, 0, 0
        return up, 1 + i, 1
    return up, h * d + 1 + i, dep + 1


@njit(cache=True)
def neighbor(d, up, h, dep, slot):
    if slot == 0:
        return parent_of(d, up, h, dep)
    return child_of(d, up, h, dep, slot - 1)


@njit(cache=True)
def slot_of(d, up, h, dep, xu, xh, xdep):
    """Slot under which ``x`` appears among the neighbors of ``w``."""
    pu, ph, pdep = parent_of(d, up, h, dep)
    if pu == xu and ph == xh and pdep == xdep:
        return 0
    if xh == 0:
        return 1  # x is the ancestor below w on the ray above the root
    return 1 + (xh - 1) % d


@njit(cache=True)
def in_target(kind, n, up, h, dep):
    if kind == HOM:
        return True
    if up != 0:
        return False
    return kind == ROOTED or dep <= n


@njit(cache=True)
def is_root(kind, up, h, dep):
    return kind != HOM and up == 0 and h == 0


@njit(cache=True)
def is_leaf(kind, n, up, h, dep):
    return kind == FINITE and up == 0 and dep == n


@njit(cache=True)
def target_slots(kind, n, up, h, dep, d, out):
    """Fill ``out`` with the neighbor slots inside the target tree; return the count."""
    m = 0
    if not is_root(kind, up, h, dep):
        out[m] = 0
        m += 1
    if not is_leaf(kind, n, up, h, dep):
        for i in range(d):
            out[m] = 1 + i
            m += 1
    return m


@njit(cache=True)
def geo(rng, p):
    """Number of failures before the first success."""
    if p >= 1.0:
        return 0
    return rng.geometric(p) - 1


@njit(cache=True)
def excursion(kind, n, d, uu, uh, udep, vu, vh, vdep, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack):
    """Append a restricted excursion from ``u`` with first step ``v`` to ``Y``.

    ``Y[pos-1]`` must be ``u``.  Returns ``(new pos, error code)``; ``pos``
    stops advancing at ``cap`` but the excursion is still run to completion so
    that the returned length is exact when ``cap`` is large enough.
    """
    p_back = d / (d + 1.0)
    stack[0, 0] = uu
    stack[0, 1] = uh
    stack[0, 2] = udep
    stack[1, 0] = vu
    stack[1, 1] = vh
    stack[1, 2] = vdep
    top = 1
    lu, lh, ldep = uu, uh, udep  # last vertex written to the restricted path
    wu, wh, wdep = vu, vh, vdep
    steps = 0
    while True:
        if in_target(kind, n, wu, wh, wdep) and not (wu == lu and wh == lh and wdep == ldep):
            if pos < cap:
                Yu[pos] = wu
                Yh[pos] = wh
                Ydep[pos] = wdep
            pos += 1
            lu, lh, ldep = wu, wh, wdep
        if top == 0:
            return pos, OK
        steps += 1
        if steps > max_steps:
            return pos, ERR_STEPS
        if rng.random() < p_back:
            top -= 1
        else:
            back = slot_of(d, wu, wh, wdep, stack[top - 1, 0], stack[top - 1, 1], stack[top - 1, 2])
            r = rng.integers(0, d)
            slot = r if r < back else r + 1
            nu, nh, ndep = neighbor(d, wu, wh, wdep, slot)
            if ndep > dmax or top + 1 >= stack.shape[0]:
                return pos, ERR_DEPTH
            top += 1
            stack[top, 0] = nu
            stack[top, 1] = nh
            stack[top, 2] = ndep
        wu = stack[top, 0]
        wh = stack[top, 1]
        wdep = stack[top, 2]


@njit(cache=True)
def _excursions(kind, n, d, count, u, slots, m_slots, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack):
    """``count`` excursions from ``u`` with first step uniform over ``slots[:m_slots]``."""
    for _ in range(count):
        slot = slots[rng.integers(0, m_slots)]
        v = neighbor(d, u[0], u[1], u[2], slot)
        pos, err = excursion(kind, n, d, u[0], u[1], u[2], v[0], v[1], v[2], rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack)
        if err != OK:
            return pos, err
    return pos, OK


@njit(cache=True)
def block(kind, n, d, j, prev, cur, nxt, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack, slots):
    """Insert the excursions that follow spine vertex ``cur`` (spine index ``j``).

    ``prev`` and ``nxt`` are the neighboring spine vertices (``prev`` is
    ignored when ``j == 0``).  Returns ``(new pos, error code)``.
    """
    up, h, dep = cur
    if is_leaf(kind, n, up, h, dep):
        slots[0] = 0
        return _excursions(kind, n, d, geo(rng, (d - 1.0) / d), cur, slots, 1, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack)
    m_all = target_slots(kind, n, up, h, dep, d, slots)
    if j == 0:
        return _excursions(kind, n, d, geo(rng, (d - 1.0) / d), cur, slots, m_all, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack)
    back = slot_of(d, up, h, dep, prev[0], prev[1], prev[2])
    m = 0
    for k in range(m_all):
        if slots[k] != back:
            slots[m] = slots[k]
            m += 1
    if not is_root(kind, up, h, dep):
        return _excursions(kind, n, d, geo(rng, d / (d + 1.0)), cur, slots, m, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack)
    # root revisited: split between the "other children" and "all children" laws
    g1 = geo(rng, d * d / (d * d + d - 1.0))
    pos, err = _excursions(kind, n, d, g1, cur, slots, m, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack)
    if err != OK:
        return pos, err
    same = prev[0] == nxt[0] and prev[1] == nxt[1] and prev[2] == nxt[2]
    if same or rng.random() < 1.0 / (d + 1):
        m_all = target_slots(kind, n, up, h, dep, d, slots)
        g2 = geo(rng, (d - 1.0) / d)
        pos, err = _excursions(kind, n, d, g2, cur, slots, m_all, rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack)
    return pos, err


@njit(cache=True)
def spine_step(kind, n, d, has_prev, prev, cur, rng, slots):
    """One step of the spine walk: uniform nonbacktracking on the homogeneous
    tree, root-biased nonbacktracking on the rooted trees."""
    up, h, dep = cur
    m = target_slots(kind, n, up, h, dep, d, slots)
    if not has_prev:
        return neighbor(d, up, h, dep, slots[rng.integers(0, m)])
    if is_leaf(kind, n, up, h, dep):
        return parent_of(d, up, h, dep)
    back = slot_of(d, up, h, dep, prev[0], prev[1], prev[2])
    if is_root(kind, up, h, dep) and rng.random() < 1.0 / (d * d):
        return neighbor(d, up, h, dep, back)
    r = rng.integers(0, m - 1)
    k = 0
    for i in range(m):
        if slots[i] == back:
            continue
        if k == r:
            return neighbor(d, up, h, dep, slots[i])
        k += 1
    return neighbor(d, up, h, dep, back)  # unreachable


@njit(cache=True)
def path_code(d, Yu, Yh, Ydep, steps):
    """Base-``d+1`` code of the slots taken by the first ``steps`` moves."""
    code = 0
    mult = 1
    for i in range(steps):
        s = slot_of(d, Yu[i], Yh[i], Ydep[i], Yu[i + 1], Yh[i + 1], Ydep[i + 1])
        code += s * mult
        mult *= d + 1
    return code


@njit(cache=True)
def composed_path_law(kind, n, d, start, steps, samples, rng, max_steps):
    """Compose walks from freshly sampled spines and record their first
    ``steps`` moves.

    Returns ``(codes, J, err)`` where ``J[s]`` is the spine index whose block
    contains time ``steps``.
    """
    dmax = max_depth(d)
    cap = steps + 1
    Yu = np.zeros(cap, np.int64)
    Yh = np.zeros(cap, np.int64)
    Ydep = np.zeros(cap, np.int64)
    stack = np.zeros((dmax + 64, 3), np.int64)
    slots = np.zeros(d + 1, np.int64)
    codes = np.zeros(samples, np.int64)
    J = np.zeros(samples, np.int64)
    spine = np.zeros((steps + 3, 3), np.int64)
    for s in range(samples):
        spine[0, 0] = start[0]
        spine[0, 1] = start[1]
        spine[0, 2] = start[2]
        nxt = spine_step(kind, n, d, False, spine[0], spine[0], rng, slots)
        spine[1, 0], spine[1, 1], spine[1, 2] = nxt
        Yu[0], Yh[0], Ydep[0] = start[0], start[1], start[2]
        pos = 1
        j = 0
        while True:
            pos, err = block(kind, n, d, j, spine[max(j - 1, 0)], spine[j], spine[j + 1], rng, Yu, Yh, Ydep, pos, cap, max_steps, dmax, stack, slots)
            if err != OK:
                return codes, J, err
            if pos >= cap:
                break
            # move along the spine
            Yu[pos], Yh[pos], Ydep[pos] = spine[j + 1, 0], spine[j + 1, 1], spine[j + 1, 2]
            pos += 1
            j += 1
            nxt = spine_step(kind, n, d, True, spine[j - 1], spine[j], rng, slots)
            spine[j + 1, 0], spine[j + 1, 1], spine[j + 1, 2] = nxt
            if pos >= cap:
                break
        codes[s] = path_code(d, Yu, Yh, Ydep, steps)
        J[s] = j
    return codes, J, OK


@njit(cache=True)
def srw_path_law(kind, n, d, start, steps, samples, rng):
    """First ``steps`` moves of directly simulated simple random walks."""
    slots = np.zeros(d + 1, np.int64)
    codes = np.zeros(samples, np.int64)
    for s in range(samples):
        up, h, dep = start[0], start[1], start[2]
        code = 0
        mult = 1
        for _ in range(steps):
            m = target_slots(kind, n, up, h, dep, d, slots)
            slot = slots[rng.integers(0, m)]
            code += slot * mult
            mult *= d + 1
            up, h, dep = neighbor(d, up, h, dep, slot)
        codes[s] = code
    return codes


@njit(cache=True)
def insertion_lengths(kind, n, d, spine, samples, rng, max_steps):
    """``ell[s, j]`` for a fixed spine, ``j = 0 .. len(spine) - 2``."""
    dmax = max_depth(d)
    m = spine.shape[0] - 1
    ell = np.zeros((samples, m), np.int64)
    Yu = np.zeros(1, np.int64)
    Yh = np.zeros(1, np.int64)
    Ydep = np.zeros(1, np.int64)
    stack = np.zeros((dmax + 64, 3), np.int64)
    slots = np.zeros(d + 1, np.int64)
    for s in range(samples):
        for j in range(m):
            # cap = 0: lengths only, nothing stored
            pos, err = block(kind, n, d, j, spine[max(j - 1, 0)], spine[j], spine[j + 1], rng, Yu, Yh, Ydep, 0, 0, max_steps, dmax, stack, slots)
            if err != OK:
                return ell, err
            ell[s, j] = pos
    return ell, OK


@njit(cache=True)
def excursion_lengths(kind, n, d, u, v, samples, rng, max_steps):
    dmax = max_depth(d)
    out = np.zeros(samples, np.int64)
    Yu = np.zeros(1, np.int64)
    Yh = np.zeros(1, np.int64)
    Ydep = np.zeros(1, np.int64)
    stack = np.zeros((dmax + 64, 3), np.int64)
    for s in range(samples):
        pos, err = excursion(kind, n, d, u[0], u[1], u[2], v[0], v[1], v[2], rng, Yu, Yh, Ydep, 0, 0, max_steps, dmax, stack)
        if err != OK:
            return out, err
        out[s] = pos
    return out, OK
