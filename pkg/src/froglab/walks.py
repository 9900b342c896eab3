"""Step kernels, excursions and the excursion decomposition of tree walks.

A simple random walk on a tree splits into a nonbacktracking *spine*
(its loop erasure) plus excursions hung off each spine vertex.
:func:`compose_srw` runs this in reverse: starting from a nonbacktracking
spine it inserts independent geometric numbers of excursions and returns a
walk with the law of simple random walk, together with the inserted
lengths.

The object-level functions here work on :class:`~froglab.tree.VertexRef`.
Batch versions for Monte Carlo (:func:`composed_path_codes`,
:func:`srw_path_codes`, :func:`insertion_samples`) run compiled kernels and
describe paths by integer codes (see :func:`path_code`).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _walk_kernels as K
from .tree import (
    FINITE,
    HOMOGENEOUS,
    ROOT,
    TreeKind,
    VertexRef,
    are_neighbors,
    check_vertex,
    contains,
    navigate,
    to_string,
)

DEFAULT_MAX_STEPS = 10**6


class StepKernel(enum.Enum):
    SIMPLE = "simple"
    UNIFORM_NB = "uniform_nonbacktracking"
    ROOT_BIASED_NB = "root_biased_nonbacktracking"


class ExcursionTooLong(RuntimeError):
    """An excursion exceeded the step cap (or the addressable depth)."""


@dataclass(frozen=True)
class ExcursionDraw:
    path: tuple

    @property
    def length(self) -> int:
        return len(self.path) - 1


@dataclass(frozen=True)
class ComposedWalk:
    walk: tuple
    insertions: tuple


def _pick(rng: np.random.Generator, options: Sequence):
    return options[int(rng.integers(len(options)))]


def step(kernel: StepKernel, tree: TreeKind, current: VertexRef, previous: Optional[VertexRef], rng) -> VertexRef:
    """Sample the next vertex of a walk.

    ``previous`` is ``None`` for the first step.  Nonbacktracking kernels
    avoid ``previous``; the root-biased kernel instead returns to it with
    probability ``1/d**2`` when at the root, and a leaf of a finite tree
    always steps to its parent.
    """
    nb = navigate(tree, current)
    if previous is not None and previous not in nb.neighbors:
        raise ValueError(f"{to_string(previous)!r} is not a neighbor of {to_string(current)!r}")
    if kernel is StepKernel.SIMPLE or previous is None:
        return _pick(rng, nb.neighbors)
    if kernel is StepKernel.ROOT_BIASED_NB and tree.is_homogeneous:
        raise ValueError("the root-biased kernel is defined on rooted trees only")
    if nb.is_leaf:
        return nb.parent
    if kernel is StepKernel.ROOT_BIASED_NB and current == ROOT:
        if rng.random() < 1.0 / tree.d**2:
            return previous
    return _pick(rng, [w for w in nb.neighbors if w != previous])


def sample_walk(kernel: StepKernel, tree: TreeKind, start: VertexRef, steps: int, rng) -> list:
    check_vertex(tree, start)
    path = [start]
    prev = None
    for _ in range(steps):
        nxt = step(kernel, tree, path[-1], prev, rng)
        prev = path[-1]
        path.append(nxt)
    return path


def spine_kernel(tree: TreeKind) -> StepKernel:
    """The nonbacktracking kernel whose spines :func:`compose_srw` expects."""
    return StepKernel.UNIFORM_NB if tree.is_homogeneous else StepKernel.ROOT_BIASED_NB


def restrict_path(path: Sequence[VertexRef], target: TreeKind) -> list:
    """Drop the vertices outside ``target`` and merge consecutive repeats."""
    out: list = []
    for v in path:
        if contains(target, v) and (not out or out[-1] != v):
            out.append(v)
    return out


def _hom(tree: TreeKind) -> TreeKind:
    return tree if tree.is_homogeneous else TreeKind.homogeneous(tree.d)


def sample_excursion(tree: TreeKind, u: VertexRef, v: VertexRef, rng, max_steps: int = DEFAULT_MAX_STEPS) -> ExcursionDraw:
    """Excursion from ``u`` with first step ``v``.

    On the homogeneous tree, after the first step the walk moves toward
    ``u`` with probability ``d/(d+1)`` and otherwise to one of the other
    ``d`` neighbors uniformly, ending on return to ``u``.  On rooted trees
    the homogeneous excursion is restricted to the tree, so ``v`` may be the
    parent of the root (giving a one-vertex path).
    """
    hom = _hom(tree)
    if not are_neighbors(u, v):
        raise ValueError(f"{to_string(u)!r} and {to_string(v)!r} are not neighbors")
    check_vertex(hom, u)
    check_vertex(hom, v)
    p_back = tree.d / (tree.d + 1)
    path = [u, v]
    stack = [u, v]
    steps = 1
    while len(stack) > 1:
        if steps >= max_steps:
            raise ExcursionTooLong(f"excursion exceeded {max_steps} steps")
        if rng.random() < p_back:
            stack.pop()
        else:
            w = stack[-1]
            stack.append(_pick(rng, [x for x in navigate(hom, w).neighbors if x != stack[-2]]))
        path.append(stack[-1])
        steps += 1
    if not tree.is_homogeneous:
        path = restrict_path(path, tree)
    return ExcursionDraw(tuple(path))


def _excursion_block(tree: TreeKind, u: VertexRef, count: int, first_steps: list, rng, max_steps: int) -> list:
    out = []
    for _ in range(count):
        out.extend(sample_excursion(tree, u, _pick(rng, first_steps), rng, max_steps).path[1:])
    return out


def _geo(rng, p: float) -> int:
    return int(rng.geometric(p)) - 1


def compose_srw(spine: Sequence[VertexRef], tree: TreeKind, rng, max_steps: int = DEFAULT_MAX_STEPS) -> ComposedWalk:
    """Insert excursions into a nonbacktracking spine to get a simple random walk.

    Between spine vertices ``X_j`` and ``X_{j+1}`` (``j = 0 .. len-2``) the
    walk receives a geometric number of independent excursions from ``X_j``:

    * ``j = 0``: ``Geo((d-1)/d)`` excursions, first step uniform over all
      neighbors of ``X_0``;
    * ``X_j`` not the root: ``Geo(d/(d+1))`` excursions, first step uniform
      over the neighbors other than ``X_{j-1}``;
    * ``X_j`` the root of a rooted tree (``j >= 1``): ``Geo(d^2/(d^2+d-1))``
      excursions avoiding ``X_{j-1}``, followed by ``Geo((d-1)/d)``
      excursions into any child.  The second batch is always present when
      ``X_{j+1} == X_{j-1}`` and otherwise with probability ``1/(d+1)``;
    * ``X_j`` a leaf of a finite tree: ``Geo((d-1)/d)`` excursions to the
      parent.

    ``Geo(p)`` counts failures before the first success.
    """
    spine = list(spine)
    if not spine:
        raise ValueError("empty spine")
    for v in spine:
        check_vertex(tree, v)
    for a, b in zip(spine, spine[1:]):
        if not are_neighbors(a, b):
            raise ValueError(f"spine is not nearest-neighbor at {to_string(a)!r} -> {to_string(b)!r}")
    d = tree.d
    walk = [spine[0]]
    insertions = []
    for j in range(len(spine) - 1):
        x = spine[j]
        nb = navigate(tree, x)
        if nb.is_leaf:
            block = _excursion_block(tree, x, _geo(rng, (d - 1) / d), [nb.parent], rng, max_steps)
        elif j == 0:
            block = _excursion_block(tree, x, _geo(rng, (d - 1) / d), nb.neighbors, rng, max_steps)
        else:
            others = [w for w in nb.neighbors if w != spine[j - 1]]
            if tree.is_homogeneous or x != ROOT:
                block = _excursion_block(tree, x, _geo(rng, d / (d + 1)), others, rng, max_steps)
            else:
                block = _excursion_block(tree, x, _geo(rng, d * d / (d * d + d - 1)), others, rng, max_steps)
                if spine[j + 1] == spine[j - 1] or rng.random() < 1 / (d + 1):
                    block += _excursion_block(tree, x, _geo(rng, (d - 1) / d), nb.children, rng, max_steps)
        insertions.append(len(block))
        walk.extend(block)
        walk.append(spine[j + 1])
    return ComposedWalk(tuple(walk), tuple(insertions))


def dilate_times(spine_times: Sequence[int], insertions: Sequence[int]) -> list:
    """Map spine index ``k`` to ``k + sum(insertions[:k])``."""
    ell = np.asarray(insertions, dtype=np.int64)
    if np.any(ell < 0):
        raise ValueError("insertion lengths must be nonnegative")
    offsets = np.concatenate([[0], np.cumsum(ell)])
    out = []
    for k in spine_times:
        if not 0 <= k < len(offsets):
            raise ValueError(f"spine index {k} outside the range covered by the insertions")
        out.append(int(k + offsets[k]))
    return out


# ---------------------------------------------------------------------------
# integer path codes and exact laws


def _kind_code(tree: TreeKind):
    if tree.is_homogeneous:
        return K.HOM, 0
    if tree.variant == FINITE:
        return K.FINITE, tree.n
    return K.ROOTED, 0


def to_triple(v: VertexRef, d: int) -> np.ndarray:
    """``(up, heap index, depth)`` used by the compiled kernels."""
    h = 0
    for i in v.path:
        h = h * d + 1 + i
    return np.array([v.up, h, len(v.path)], dtype=np.int64)


def from_triple(t, d: int) -> VertexRef:
    up, h, depth = (int(x) for x in t)
    path = []
    for _ in range(depth):
        path.append((h - 1) % d)
        h = (h - 1) // d
    return VertexRef(tuple(reversed(path)), up)


def neighbor_slot(tree: TreeKind, v: VertexRef, w: VertexRef) -> int:
    """``0`` if ``w`` is the parent of ``v``, ``1 + i`` if it is child ``i``."""
    nb = navigate(_hom(tree), v)
    if w == nb.parent:
        return 0
    return 1 + nb.children.index(w)


def path_code(tree: TreeKind, path: Sequence[VertexRef]) -> int:
    """Encode a walk by the base-``d+1`` digits of its neighbor slots."""
    code, mult = 0, 1
    for a, b in zip(path, path[1:]):
        code += neighbor_slot(tree, a, b) * mult
        mult *= tree.d + 1
    return code


def decode_path(tree: TreeKind, start: VertexRef, code: int, steps: int) -> list:
    hom = _hom(tree)
    path = [start]
    for _ in range(steps):
        code, slot = divmod(code, tree.d + 1)
        nb = navigate(hom, path[-1])
        path.append(nb.parent if slot == 0 else nb.children[slot - 1])
    return path


def srw_path_law(tree: TreeKind, start: VertexRef, steps: int) -> dict:
    """Exact law of the first ``steps`` moves of simple random walk, keyed by path code."""
    law = {}

    def walk(v, depth, prob, code, mult):
        if depth == steps:
            law[code] = law.get(code, 0.0) + prob
            return
        nbrs = navigate(tree, v).neighbors
        for w in nbrs:
            walk(w, depth + 1, prob / len(nbrs), code + neighbor_slot(tree, v, w) * mult, mult * (tree.d + 1))

    check_vertex(tree, start)
    walk(start, 0, 1.0, 0, 1)
    return law


def tv_distance(p: dict, q: dict) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


def empirical_law(codes: np.ndarray) -> dict:
    values, counts = np.unique(codes, return_counts=True)
    return dict(zip(values.tolist(), (counts / len(codes)).tolist()))


def _check_kernel_err(err: int) -> None:
    if err == K.ERR_STEPS:
        raise ExcursionTooLong("excursion exceeded the step cap")
    if err == K.ERR_DEPTH:
        raise ExcursionTooLong("excursion left the addressable depth")


def composed_path_codes(tree: TreeKind, start: VertexRef, steps: int, samples: int, rng, max_steps: int = DEFAULT_MAX_STEPS):
    """Codes of the first ``steps`` moves of composed walks with freshly
    sampled spines, and the spine index ``J`` whose block contains time ``steps``."""
    check_vertex(tree, start)
    kind, n = _kind_code(tree)
    codes, J, err = K.composed_path_law(kind, n, tree.d, to_triple(start, tree.d), steps, samples, rng, max_steps)
    _check_kernel_err(err)
    return codes, J


def srw_path_codes(tree: TreeKind, start: VertexRef, steps: int, samples: int, rng) -> np.ndarray:
    check_vertex(tree, start)
    kind, n = _kind_code(tree)
    return K.srw_path_law(kind, n, tree.d, to_triple(start, tree.d), steps, samples, rng)


def insertion_samples(tree: TreeKind, spine: Sequence[VertexRef], samples: int, rng, max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """``samples`` independent draws of ``(ell_0, ..., ell_{m-1})`` for a fixed spine."""
    for a, b in zip(spine, spine[1:]):
        if not are_neighbors(a, b):
            raise ValueError("spine is not nearest-neighbor")
    for v in spine:
        check_vertex(tree, v)
    kind, n = _kind_code(tree)
    arr = np.stack([to_triple(v, tree.d) for v in spine])
    ell, err = K.insertion_lengths(kind, n, tree.d, arr, samples, rng, max_steps)
    _check_kernel_err(err)
    return ell


def excursion_length_samples(tree: TreeKind, u: VertexRef, v: VertexRef, samples: int, rng, max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    if not are_neighbors(u, v):
        raise ValueError("u and v are not neighbors")
    kind, n = _kind_code(tree)
    out, err = K.excursion_lengths(kind, n, tree.d, to_triple(u, tree.d), to_triple(v, tree.d), samples, rng, max_steps)
    _check_kernel_err(err)
    return out


def dilation_tail_bound(t: float) -> float:
    """Upper bound on ``P[ell_j >= t + 2]`` given the spine."""
    return ((1 + math.exp(-1 / 14)) / 2) ** (t / 2)


# ---------------------------------------------------------------------------
# joint law of the path and the spine index on the homogeneous tree


def hom_distance_from_start(tree: TreeKind, path: Sequence[VertexRef]) -> int:
    """Graph distance from ``path[0]`` (the root) to ``path[-1]``."""
    v = path[-1]
    return v.up + len(v.path)


def j_law_probability(d: int, steps: int, k: int, j: int) -> float:
    """Probability of a given ``steps``-step path ending at distance ``k``
    jointly with spine index ``j`` at time ``steps``."""
    if j == 0:
        return d ** (-k) * (d + 1) ** (-steps)
    if 1 <= j <= k:
        return (d - 1) * d ** (-k + j - 1) * (d + 1) ** (-steps)
    return 0.0


@dataclass
class JLawReport:
    d: int
    steps: int
    samples: int
    path_law_tv: float
    max_se_deviation: float
    table: list

    def to_dict(self) -> dict:
        return {
            "path_law_tv": self.path_law_tv,
            "max_se_deviation": self.max_se_deviation,
            "samples": self.samples,
            "d": self.d,
            "steps": self.steps,
        }


def spine_and_J_law_check(d: int, n: int, samples: int, rng) -> JLawReport:
    """Compare the empirical joint law of (path, spine index) of composed
    walks on the homogeneous tree with its closed form.

    Every ``n``-step nearest-neighbor path from the root is enumerated.
    ``max_se_deviation`` is the largest ``|empirical - exact| / se`` over all
    ``(path, j)`` cells with positive exact probability, where ``se`` is the
    binomial standard error at the exact probability.
    """
    if n > 5:
        raise ValueError("exhaustive enumeration is limited to n <= 5")
    if n < 1:
        raise ValueError("n must be >= 1")
    tree = TreeKind.homogeneous(d)
    codes, J = composed_path_codes(tree, ROOT, n, samples, rng)
    base = d + 1
    joint = np.bincount(codes * (n + 1) + J, minlength=base**n * (n + 1)) / samples
    table = []
    worst = 0.0
    for code in range(base**n):
        path = decode_path(tree, ROOT, code, n)
        k = hom_distance_from_start(tree, path)
        for j in range(0, k + 1):
            p = j_law_probability(d, n, k, j)
            emp = float(joint[code * (n + 1) + j])
            se = math.sqrt(p * (1 - p) / samples)
            dev = abs(emp - p) / se
            worst = max(worst, dev)
            table.append({"path": [to_string(v) for v in path], "j": j, "exact": p, "empirical": emp, "se_dev": dev})
        extra = float(joint[code * (n + 1) + k + 1 : (code + 1) * (n + 1)].sum())
        if extra > 0:
            worst = math.inf  # spine index beyond the distance is impossible
    path_law = empirical_law(codes)
    uniform = {c: base ** (-n) for c in range(base**n)}
    return JLawReport(d, n, samples, tv_distance(path_law, uniform), worst, table)


def all_paths(tree: TreeKind, start: VertexRef, steps: int):
    """Every nearest-neighbor path of ``steps`` moves from ``start``."""
    def extend(path):
        if len(path) == steps + 1:
            yield tuple(path)
            return
        for w in navigate(tree, path[-1]).neighbors:
            yield from extend(path + [w])

    yield from extend([start])


def path_rows(path: Sequence[VertexRef]) -> list:
    """CSV-ready row of slash-encoded vertices."""
    return [to_string(v) for v in path]


__all__ = [
    "StepKernel",
    "ExcursionDraw",
    "ComposedWalk",
    "ExcursionTooLong",
    "step",
    "sample_walk",
    "spine_kernel",
    "restrict_path",
    "sample_excursion",
    "compose_srw",
    "dilate_times",
    "path_code",
    "decode_path",
    "srw_path_law",
    "tv_distance",
    "empirical_law",
    "composed_path_codes",
    "srw_path_codes",
    "insertion_samples",
    "excursion_length_samples",
    "dilation_tail_bound",
    "j_law_probability",
    "spine_and_J_law_check",
    "all_paths",
    "path_rows",
]
