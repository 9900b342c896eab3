"""Discrete-time frog model on rooted d-ary trees.

One frog starts awake at the root; every other vertex holds a random
number of sleeping frogs.  At each step every awake frog moves along its
own walk.  Sleepers at a vertex wake the first time an awake frog lands
there and make their first move on the following step.

Three variants are supported:

``STANDARD``
    simple random walks.
``NONBACKTRACKING``
    root-biased nonbacktracking walks (at the root a frog goes back the
    way it came with probability ``1/d**2``).
``SELF_SIMILAR``
    uniform nonbacktracking walks where only one frog may enter each
    subtree from above: at a first visit one arrival survives, later
    arrivals from the parent are killed, and frogs reaching the root at
    time 1 or later are counted and then killed.  With ``root_reflect`` the
    frogs reaching the root are counted and continue with the root-biased
    step instead.

Two engines implement the same dynamics.  The default ``"count"`` engine
is compiled and stores frog counts per vertex.  The ``"agent"`` engine
moves individual frogs, each with its own random stream; it is slow but
couples runs with different sleeper intensities and can record
trajectories.
"""

from __future__ import annotations

import csv
import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import stats

from . import _engine_kernels as EK
from .pointproc import (
    EMPTY,
    IntensityOnEvens,
    PointPattern,
    poisson_counts,
    sample_poisson_pp,
    sample_S,
    sample_S_batch,
    shift,
    shift_counts,
    superpose,
    thin,
    thin_counts,
)
from .rng import trial_rng
from .tree import ROOT, TreeKind, VertexRef, from_heap_index, heap_index, navigate, to_string
from .walks import StepKernel, step

DEFAULT_CELL_BUDGET = 1 << 25


class Variant(enum.Enum):
    STANDARD = "standard"
    NONBACKTRACKING = "nonbacktracking"
    SELF_SIMILAR = "self_similar"


_VARIANT_CODE = {Variant.STANDARD: EK.STANDARD, Variant.NONBACKTRACKING: EK.NONBACKTRACKING, Variant.SELF_SIMILAR: EK.SELF_SIMILAR}


@dataclass(frozen=True)
class InitLaw:
    """Law of the number of sleeping frogs at each non-root vertex."""

    kind: str
    mu: float = 0.0
    k: int = 0

    def __post_init__(self):
        if self.kind == "poisson":
            if not (self.mu > 0 and math.isfinite(self.mu)):
                raise ValueError("Poisson intensity must satisfy mu > 0")
        elif self.kind == "fixed":
            if int(self.k) != self.k or self.k < 0:
                raise ValueError("fixed sleeper count must be an integer >= 0")
        elif self.kind != "one":
            raise ValueError(f"unknown initial law {self.kind!r}")

    @classmethod
    def poisson(cls, mu: float) -> "InitLaw":
        return cls("poisson", mu=float(mu))

    @classmethod
    def one_per_site(cls) -> "InitLaw":
        return cls("one")

    @classmethod
    def fixed(cls, k: int) -> "InitLaw":
        return cls("fixed", k=int(k))

    def from_uniform(self, u: float) -> int:
        """Sleeper count as a nondecreasing function of a uniform variate."""
        if self.kind == "poisson":
            return int(stats.poisson.ppf(u, self.mu))
        return 1 if self.kind == "one" else self.k

    def _codes(self) -> tuple:
        kind = {"poisson": EK.INIT_POISSON, "one": EK.INIT_ONE, "fixed": EK.INIT_FIXED}[self.kind]
        return kind, float(self.mu), int(self.k)

    def __str__(self) -> str:
        if self.kind == "poisson":
            return f"Poi({self.mu:g})"
        return "one per site" if self.kind == "one" else f"fixed({self.k})"


@dataclass(frozen=True)
class SimConfig:
    """Everything that determines a run.

    Parameters
    ----------
    tree : TreeKind
        Rooted infinite or finite tree.
    variant : Variant
    init : InitLaw
    horizon : int
        Number of time steps ``T``.
    seed : int
    depth_cap : int, optional
        Deepest level the engine may hold; default ``T + 2``.  On infinite
        trees it must exceed ``T``.
    frog_cap : int
        Maximum number of frogs created (woken) in one run.
    root_reflect : bool
        Self-similar variant only: frogs reaching the root continue with
        the root-biased step instead of being killed.
    observe_depth : int, optional
        Keep only frogs that could still reach depth ``observe_depth`` or
        shallower by the horizon.  Statistics for that region stay exact;
        see :attr:`Trace.D_exact`.
    engine : {"count", "agent"}
    cell_budget : int
        Memory budget of the count engine in ``(vertex, state)`` cells.
    """

    tree: TreeKind
    variant: Variant
    init: InitLaw
    horizon: int
    seed: int = 0
    depth_cap: Optional[int] = None
    frog_cap: int = 10**8
    root_reflect: bool = False
    observe_depth: Optional[int] = None
    engine: str = "count"
    cell_budget: int = DEFAULT_CELL_BUDGET

    def __post_init__(self):
        if self.tree.is_homogeneous:
            raise ValueError("the frog model runs on rooted trees")
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ValueError("horizon must be an integer >= 1")
        if self.frog_cap <= 0:
            raise ValueError("frog_cap must be positive")
        if self.depth_cap is not None and not self.tree.is_finite and self.depth_cap <= self.horizon:
            raise ValueError("depth_cap must exceed the horizon on infinite trees")
        if self.observe_depth is not None and self.observe_depth < 0:
            raise ValueError("observe_depth must be >= 0")
        if self.root_reflect and self.variant is not Variant.SELF_SIMILAR:
            raise ValueError("root_reflect applies to the self-similar variant only")
        if self.engine not in ("count", "agent"):
            raise ValueError(f"unknown engine {self.engine!r}")

    @property
    def d(self) -> int:
        return self.tree.d

    @property
    def effective_depth_cap(self) -> int:
        return self.horizon + 2 if self.depth_cap is None else self.depth_cap

    def needed_depth(self) -> int:
        """Deepest level any kept frog can reach by the horizon."""
        need = self.horizon
        if self.observe_depth is not None:
            need = min(need, (self.observe_depth + self.horizon) // 2)
        if self.tree.is_finite:
            need = min(need, self.tree.n)
        return need

    def to_dict(self) -> dict:
        return {
            "tree": str(self.tree),
            "d": self.d,
            "variant": self.variant.value,
            "init": {"kind": self.init.kind, "mu": self.init.mu, "k": self.init.k},
            "horizon": self.horizon,
            "seed": self.seed,
            "depth_cap": self.effective_depth_cap,
            "frog_cap": self.frog_cap,
            "root_reflect": self.root_reflect,
            "observe_depth": self.observe_depth,
            "engine": self.engine,
        }

    def replace(self, **changes) -> "SimConfig":
        fields = {k: getattr(self, k) for k in self.__dataclass_fields__}
        fields.update(changes)
        return SimConfig(**fields)


@dataclass
class Trace:
    """Record of one run.

    ``returns[t]`` is the number of frogs arriving at the root at time
    ``t``; ``D[t]`` the deepest level all of whose vertices were visited by
    time ``t``; ``D_exact[t]`` is false when pruning or the memory budget
    means ``D[t]`` is only a lower bound.  ``active[t]`` counts frogs alive
    after step ``t``.  First visits are stored as heap indices sorted
    increasingly, with the matching times.
    """

    config: SimConfig
    returns: np.ndarray
    D: np.ndarray
    D_exact: np.ndarray
    active: np.ndarray
    visit_heap: np.ndarray
    visit_time: np.ndarray
    frogs_created: int
    killed: int = 0
    pruned: int = 0
    max_entries: int = 0
    truncation_events: int = 0
    steps_completed: int = 0
    paths: Optional[dict] = None

    @property
    def horizon(self) -> int:
        return len(self.returns) - 1

    @property
    def V(self) -> np.ndarray:
        """Cumulative root visits at times ``1..t``."""
        v = np.cumsum(self.returns)
        return v - self.returns[0]

    @property
    def return_process(self) -> PointPattern:
        counts = self.returns.copy()
        counts[0] = 0
        return PointPattern.from_counts(counts)

    @property
    def visited_count(self) -> int:
        return len(self.visit_heap)

    def first_visit_heap(self, h) -> np.ndarray:
        """First-visit times for heap indices; ``-1`` when unvisited."""
        h = np.asarray(h, dtype=np.int64)
        pos = np.searchsorted(self.visit_heap, h)
        pos_c = np.minimum(pos, max(len(self.visit_heap) - 1, 0))
        hit = (pos < len(self.visit_heap)) & (self.visit_heap[pos_c] == h) if len(self.visit_heap) else np.zeros(h.shape, bool)
        return np.where(hit, self.visit_time[pos_c] if len(self.visit_heap) else -1, -1)

    def first_visit_time(self, v: VertexRef) -> Optional[int]:
        t = int(self.first_visit_heap(heap_index(v, self.config.d)))
        return None if t < 0 else t

    def first_visit_map(self) -> dict:
        d = self.config.d
        return {from_heap_index(int(h), d): int(t) for h, t in zip(self.visit_heap, self.visit_time)}

    def series_rows(self) -> list:
        V = self.V
        return [(t, int(V[t]), int(self.D[t])) for t in range(self.horizon + 1)]

    def write_series_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "V_t", "D_t"])
            w.writerows(self.series_rows())

    def write_visits_csv(self, path) -> None:
        d = self.config.d
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["vertex", "first_visit_time"])
            for h, t in zip(self.visit_heap, self.visit_time):
                w.writerow([to_string(from_heap_index(int(h), d)), int(t)])

    def summary(self) -> dict:
        return {
            "seed": self.config.seed,
            "config": self.config.to_dict(),
            "counts": {
                "frogs_created": int(self.frogs_created),
                "killed": int(self.killed),
                "pruned": int(self.pruned),
                "visited_vertices": self.visited_count,
                "root_visits": int(self.V[-1]),
                "final_D": int(self.D[-1]),
            },
            "truncation_events": int(self.truncation_events),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2)


class TruncationError(RuntimeError):
    """A cap was hit; ``trace`` holds the run up to the last complete step."""

    def __init__(self, message: str, trace: Trace):
        super().__init__(message)
        self.trace = trace


# ---------------------------------------------------------------------------
# count engine


def allocated_depth(config: SimConfig) -> int:
    """Deepest level the count engine will hold in memory."""
    C = 1 if config.variant is Variant.STANDARD else config.d + 2
    depth = min(config.needed_depth(), config.effective_depth_cap)
    while depth > 0 and EK.heap_size(config.d, depth) * C > config.cell_budget:
        depth -= 1
    return depth


def _run_count(config: SimConfig, rng: np.random.Generator) -> Trace:
    depth_alloc = allocated_depth(config)
    kind, mu, k = config.init._codes()
    T = config.horizon
    status, done, returns, D, D_exact, active, first_visit, created, killed, pruned, max_entries = EK.simulate(
        rng,
        config.tree.is_finite,
        config.tree.n if config.tree.is_finite else 0,
        config.d,
        _VARIANT_CODE[config.variant],
        config.root_reflect,
        kind,
        mu,
        k,
        T,
        -1 if config.observe_depth is None else config.observe_depth,
        depth_alloc,
        config.frog_cap,
    )
    if config.tree.is_finite and depth_alloc == config.tree.n:
        D_exact = np.ones_like(D_exact)
    visit_heap = np.flatnonzero(first_visit >= 0).astype(np.int64)
    trace = Trace(
        config=config,
        returns=returns,
        D=D,
        D_exact=D_exact,
        active=active,
        visit_heap=visit_heap,
        visit_time=first_visit[visit_heap].astype(np.int64),
        frogs_created=int(created),
        killed=int(killed),
        pruned=int(pruned),
        max_entries=int(max_entries),
        truncation_events=0 if status == EK.OK else 1,
        steps_completed=int(done),
    )
    if status == EK.ERR_DEPTH:
        raise TruncationError(f"a frog passed depth {depth_alloc} (memory budget {config.cell_budget} cells) at step {done + 1}", trace)
    if status == EK.ERR_FROGS:
        raise TruncationError(f"more than {config.frog_cap} frogs created by step {done + 1}", trace)
    return trace


# ---------------------------------------------------------------------------
# agent engine


@dataclass
class _Frog:
    pos: VertexRef
    prev: Optional[VertexRef]
    rng: np.random.Generator
    key: tuple


def _kernel(config: SimConfig) -> StepKernel:
    if config.variant is Variant.STANDARD:
        return StepKernel.SIMPLE
    if config.variant is Variant.NONBACKTRACKING or config.root_reflect:
        return StepKernel.ROOT_BIASED_NB
    return StepKernel.UNIFORM_NB


def _run_agents(config: SimConfig, trial: int, record_paths: bool) -> Trace:
    tree, d, T = config.tree, config.d, config.horizon
    kernel = _kernel(config)
    self_similar = config.variant is Variant.SELF_SIMILAR
    seed = config.seed

    def sleepers_at(h: int) -> int:
        u = trial_rng(seed, trial, 0, h).random()
        return config.init.from_uniform(u)

    frogs = [_Frog(ROOT, None, trial_rng(seed, trial, 1, 0, 0), (0, 0))]
    paths = {(0, 0): [(0, ROOT)]} if record_paths else None
    first = {0: 0}
    level_count = {0: 1}
    returns = np.zeros(T + 1, np.int64)
    D = np.zeros(T + 1, np.int64)
    D_exact = np.ones(T + 1, bool)
    active = np.zeros(T + 1, np.int64)
    active[0] = 1
    created = 1
    killed = pruned = max_entries = 0
    entries: dict = {}
    frontier = 1
    L = config.observe_depth
    cap = config.effective_depth_cap
    max_level = tree.n if tree.is_finite else None

    for t in range(1, T + 1):
        arrivals: dict = {}
        for f in frogs:
            nxt = step(kernel, tree, f.pos, f.prev, f.rng)
            f.prev, f.pos = f.pos, nxt
            if L is not None and t + max(0, nxt.depth - L) > T:
                pruned += 1
                continue
            if nxt.depth > cap:
                trace = _agent_trace(config, returns, D, D_exact, active, first, created, killed, pruned, max_entries, t - 1, paths)
                raise TruncationError(f"a frog passed depth {cap} at step {t}", trace)
            if paths is not None:
                paths[f.key].append((t, nxt))
            arrivals.setdefault(heap_index(nxt, d), []).append(f)
        survivors = []
        for h in sorted(arrivals):
            group = sorted(arrivals[h], key=lambda f: f.key)
            if h == 0:
                returns[t] += len(group)
                if self_similar and not config.root_reflect:
                    killed += len(group)
                    continue
            elif h not in first:
                first[h] = t
                depth = group[0].pos.depth
                level_count[depth] = level_count.get(depth, 0) + 1
                if self_similar:
                    killed += len(group) - 1
                    group = group[:1]
                    entries[h] = entries.get(h, 0) + 1
                    max_entries = max(max_entries, entries[h])
                n_new = sleepers_at(h)
                v = group[0].pos
                for i in range(n_new):
                    key = (h, i)
                    group.append(_Frog(v, None, trial_rng(seed, trial, 1, h, i), key))
                    if paths is not None:
                        paths[key] = [(t, v)]
                created += n_new
                if created > config.frog_cap:
                    trace = _agent_trace(config, returns, D, D_exact, active, first, created, killed, pruned, max_entries, t - 1, paths)
                    raise TruncationError(f"more than {config.frog_cap} frogs created by step {t}", trace)
            elif self_similar:
                from_parent = [f for f in group if f.prev is not None and f.prev.depth < f.pos.depth]
                killed += len(from_parent)
                group = [f for f in group if not (f.prev is not None and f.prev.depth < f.pos.depth)]
            survivors.extend(group)
        frogs = survivors
        active[t] = len(frogs)
        while (max_level is None or frontier <= max_level) and level_count.get(frontier, 0) == d**frontier:
            frontier += 1
        D[t] = frontier - 1
        if L is not None and frontier > L + T - t and not (max_level is not None and frontier > max_level):
            D_exact[t] = False
    return _agent_trace(config, returns, D, D_exact, active, first, created, killed, pruned, max_entries, T, paths)


def _agent_trace(config, returns, D, D_exact, active, first, created, killed, pruned, max_entries, done, paths) -> Trace:
    heaps = np.array(sorted(first), dtype=np.int64)
    times = np.array([first[int(h)] for h in heaps], dtype=np.int64)
    return Trace(
        config=config,
        returns=returns,
        D=D,
        D_exact=D_exact,
        active=active,
        visit_heap=heaps,
        visit_time=times,
        frogs_created=created,
        killed=killed,
        pruned=pruned,
        max_entries=max_entries,
        truncation_events=0 if done == config.horizon else 1,
        steps_completed=done,
        paths=paths,
    )


# ---------------------------------------------------------------------------
# public runners


def _dispatch(config: SimConfig, trial: int, record_paths: bool) -> Trace:
    if record_paths or config.engine == "agent":
        return _run_agents(config, trial, record_paths)
    return _run_count(config, trial_rng(config.seed, trial))


def run(config: SimConfig, trial: int = 0, record_paths: bool = False) -> Trace:
    """Run the standard or nonbacktracking frog model.

    Parameters
    ----------
    config : SimConfig
    trial : int
        Index of the random stream derived from ``config.seed``.
    record_paths : bool
        Use the agent engine and keep every frog's trajectory in
        ``Trace.paths`` as lists of ``(time, vertex)``.

    Raises
    ------
    TruncationError
        When a cap is exceeded; the partial trace is attached.
    """
    if config.variant is Variant.SELF_SIMILAR:
        raise ValueError("use run_self_similar for the self-similar variant")
    return _dispatch(config, trial, record_paths)


def run_self_similar(config: SimConfig, trial: int = 0, record_paths: bool = False) -> Trace:
    """Run the self-similar frog model; see :func:`run`."""
    if config.variant is not Variant.SELF_SIMILAR:
        raise ValueError("config.variant must be SELF_SIMILAR")
    if config.tree.is_finite:
        raise ValueError("the self-similar model runs on the infinite rooted tree")
    return _dispatch(config, trial, record_paths)


def run_any(config: SimConfig, trial: int = 0, record_paths: bool = False) -> Trace:
    if config.variant is Variant.SELF_SIMILAR:
        return run_self_similar(config, trial, record_paths)
    return run(config, trial, record_paths)


# ---------------------------------------------------------------------------
# statistics of traces


def ray_heaps(ray: Sequence[VertexRef], d: int) -> np.ndarray:
    """Heap indices of a descending path starting at the root."""
    ray = list(ray)
    if not ray or ray[0] != ROOT:
        raise ValueError("a ray starts at the root")
    for a, b in zip(ray, ray[1:]):
        if b.up or a.up or len(b.path) != len(a.path) + 1 or b.path[:-1] != a.path:
            raise ValueError(f"{to_string(b)!r} is not a child of {to_string(a)!r}")
    return np.array([heap_index(v, d) for v in ray], dtype=np.int64)


def straight_ray(length: int, child: int = 0) -> list:
    """The path root, ``child``, ``child/child``, ... of ``length + 1`` vertices."""
    return [VertexRef((child,) * k) for k in range(length + 1)]


def initial_ray(trace: Trace, length: int, child: int = 0) -> list:
    """Ray through the root child first visited, then ``child`` repeatedly.

    The returned list has ``length + 2`` vertices: the root, the child
    ``v0`` entered at time 1, and ``length`` further descendants.
    """
    d = trace.config.d
    times = trace.first_visit_heap(np.arange(1, d + 1))
    hits = np.flatnonzero(times == 1)
    if len(hits) != 1:
        raise ValueError("exactly one root child must be visited at time 1")
    first = int(hits[0])
    return [ROOT] + [VertexRef((first,) + (child,) * k) for k in range(length + 1)]


@dataclass(frozen=True)
class InitialRay:
    """Picklable form of ``lambda trace: initial_ray(trace, length, child)``."""

    length: int
    child: int = 0

    def __call__(self, trace: Trace) -> list:
        return initial_ray(trace, self.length, self.child)


def passage_times(first_visits: np.ndarray) -> np.ndarray:
    """Differences of first-visit times along a ray; ``-1`` marks a vertex never reached."""
    fv = np.asarray(first_visits)
    a, b = fv[..., :-1], fv[..., 1:]
    return np.where((a >= 0) & (b >= 0), b - a, -1)


def trace_stats(trace: Trace, ray: Sequence[VertexRef]) -> dict:
    """Passage times along ``ray`` and the ``D`` and ``V`` series.

    ``tau[i-1]`` is the time from the first visit of ``ray[i-1]`` to that
    of ``ray[i]``, or ``None`` if either is unvisited.
    """
    fv = trace.first_visit_heap(ray_heaps(ray, trace.config.d))
    tau = [None if x < 0 else int(x) for x in passage_times(fv)]
    return {"tau": tau, "D": trace.D.tolist(), "V": trace.V.tolist()}


@dataclass
class BatchResult:
    """Per-trial statistics of many independent runs."""

    config: SimConfig
    returns: np.ndarray  # (trials, T+1)
    D: np.ndarray
    D_exact: np.ndarray
    ray_first_visit: Optional[np.ndarray]
    frogs_created: np.ndarray
    max_entries: int
    truncated: np.ndarray

    @property
    def trials(self) -> int:
        return self.returns.shape[0]

    @property
    def V(self) -> np.ndarray:
        v = np.cumsum(self.returns, axis=1)
        return v - self.returns[:, :1]

    @property
    def tau(self) -> Optional[np.ndarray]:
        return None if self.ray_first_visit is None else passage_times(self.ray_first_visit)


def _run_range(config: SimConfig, start: int, stop: int, ray, allow_truncation: bool) -> BatchResult:
    T = config.horizon
    count = stop - start
    ray_fn = ray if callable(ray) else None
    heaps = None if ray is None or ray_fn else ray_heaps(ray, config.d)
    returns = np.zeros((count, T + 1), np.int64)
    D = np.zeros((count, T + 1), np.int64)
    D_exact = np.zeros((count, T + 1), bool)
    fv = None
    if heaps is not None:
        fv = np.full((count, len(heaps)), -1, np.int64)
    created = np.zeros(count, np.int64)
    truncated = np.zeros(count, bool)
    max_entries = 0
    for i in range(count):
        try:
            tr = run_any(config, trial=start + i)
        except TruncationError as exc:
            if not allow_truncation:
                raise
            tr = exc.trace
            truncated[i] = True
        returns[i] = tr.returns
        D[i] = tr.D
        D_exact[i] = tr.D_exact
        created[i] = tr.frogs_created
        max_entries = max(max_entries, tr.max_entries)
        if ray_fn is not None:
            h = ray_heaps(ray_fn(tr), config.d)
            if fv is None:
                fv = np.full((count, len(h)), -1, np.int64)
            fv[i] = tr.first_visit_heap(h)
        elif fv is not None:
            fv[i] = tr.first_visit_heap(heaps)
    return BatchResult(config, returns, D, D_exact, fv, created, max_entries, truncated)


def _concat(parts: list) -> BatchResult:
    first = parts[0]
    fv = None if first.ray_first_visit is None else np.concatenate([p.ray_first_visit for p in parts])
    return BatchResult(
        first.config,
        np.concatenate([p.returns for p in parts]),
        np.concatenate([p.D for p in parts]),
        np.concatenate([p.D_exact for p in parts]),
        fv,
        np.concatenate([p.frogs_created for p in parts]),
        max(p.max_entries for p in parts),
        np.concatenate([p.truncated for p in parts]),
    )


def run_trials(config: SimConfig, trials: int, ray=None, allow_truncation: bool = False, workers: int = 1) -> BatchResult:
    """Run ``trials`` independent copies; trial ``i`` uses stream ``(seed, i)``.

    ``ray`` is a fixed descending path from the root or a picklable
    function mapping each trace to one (see :class:`InitialRay`);
    first-visit times along it are collected in ``ray_first_visit``.
    Truncated trials raise unless ``allow_truncation``, in which case their
    partial traces are kept and flagged in ``truncated``.  With
    ``workers > 1`` contiguous blocks of trials run in separate processes;
    the result is identical to a serial run.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if workers <= 1 or trials < 2:
        return _run_range(config, 0, trials, ray, allow_truncation)
    from concurrent.futures import ProcessPoolExecutor

    bounds = np.linspace(0, trials, min(workers, trials) + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_run_range, config, int(a), int(b), ray, allow_truncation) for a, b in zip(bounds, bounds[1:])]
        parts = [f.result() for f in futures]
    return _concat(parts)


# ---------------------------------------------------------------------------
# star graph operator and the dominated decomposition


def _check_xi(pattern: PointPattern) -> None:
    for t, _ in pattern.atoms:
        if t <= 0 or t % 2:
            raise ValueError(f"input atoms must sit at even positive times, got {t}")


def run_star_A(xi_sampler: Callable, d: int, mu: float, rng: np.random.Generator) -> PointPattern:
    """Times at which particles reach the outer vertex of the star graph.

    The star has centre ``c`` joined to an outer vertex ``o`` and to
    ``u_1, ..., u_d``.  ``Poi(mu)`` particles sleep at ``c``.  A particle
    starts at ``o``, is at ``c`` at time 1 and at ``u_1`` at time 2.  The
    sleepers wake at time 1 and at time 2 each jumps to a uniform neighbor
    of ``c`` and halts.  When ``u_i`` is first visited at time ``s``, it
    draws an independent pattern from ``xi_sampler``; for every atom ``k``
    a particle is at ``c`` at time ``s + k - 1`` and at time ``s + k``
    jumps uniformly to a neighbor of ``c`` other than ``u_i``, then halts.
    Returns the pattern of arrival times at ``o``.
    """
    if mu < 0:
        raise ValueError("mu must be >= 0")
    INF = math.inf
    s_time = [INF] * d
    s_time[0] = 2
    done = [False] * d
    out = []
    for _ in range(int(rng.poisson(mu))):
        r = int(rng.integers(d + 1))
        if r == d:
            out.append(2)
        else:
            s_time[r] = min(s_time[r], 2)
    while True:
        pending = [i for i in range(d) if not done[i] and s_time[i] < INF]
        if not pending:
            break
        i = min(pending, key=lambda j: (s_time[j], j))
        done[i] = True
        xi = xi_sampler(rng)
        _check_xi(xi)
        for k in xi.times:
            when = s_time[i] + k
            r = int(rng.integers(d))
            if r == i:
                out.append(when)
            else:
                s_time[r] = min(s_time[r], when)
    return PointPattern.from_times(out)


def star_A_counts(pool: np.ndarray, d: int, mu: float, trials: int, rng: np.random.Generator, horizon: Optional[int] = None) -> np.ndarray:
    """Count-matrix version of :func:`run_star_A`.

    Each input copy is a uniformly chosen row of the count matrix ``pool``
    (the empirical law of the rows).  Arrivals after ``horizon`` are
    dropped, which does not affect earlier times.
    """
    pool = np.ascontiguousarray(np.atleast_2d(pool), dtype=np.int64)
    if pool.size and (np.any(pool[:, 1::2] != 0) or np.any(pool[:, 0] != 0)):
        raise ValueError("input atoms must sit at even positive times")
    horizon = pool.shape[1] - 1 if horizon is None else horizon
    return EK.star_A(pool, d, float(mu), int(trials), int(horizon), rng)


def sample_rhs_dominated(xi_sampler: Callable, lam_seq: Sequence[float], d: int, mu: float, rng: np.random.Generator) -> PointPattern:
    """One draw of ``Z d_2 + s_2 t x_1 + sum_{i=2..d} s_{2+2S_i} t x_i``.

    ``Z ~ Poi(mu/(d+1))`` sits at time 2, ``t`` is ``1/d``-thinning,
    ``s_u`` a shift by ``u``, the ``x_i`` are independent draws from
    ``xi_sampler`` and the delays ``S_i`` are independent with the law of
    :func:`~froglab.pointproc.sample_S`.
    """
    parts = [PointPattern.from_times([2] * int(rng.poisson(mu / (d + 1))))]
    parts.append(shift(thin(xi_sampler(rng), 1 / d, rng), 2))
    for _ in range(2, d + 1):
        s = sample_S(mu, d, lam_seq, rng)
        x = thin(xi_sampler(rng), 1 / d, rng)
        parts.append(EMPTY if s == math.inf else shift(x, 2 + 2 * s))
    return superpose(parts)


def sample_rhs_dominated_counts(lam_seq: Sequence[float], d: int, mu: float, size: int, rng: np.random.Generator, horizon: Optional[int] = None) -> np.ndarray:
    """Batch of :func:`sample_rhs_dominated` with Poisson inputs of intensity ``lam_seq``."""
    intensity = IntensityOnEvens(list(lam_seq))
    horizon = 2 * len(lam_seq) + 2 + 2 * len(lam_seq) if horizon is None else horizon
    out = np.zeros((size, horizon + 1), np.int64)
    if horizon >= 2:
        out[:, 2] = rng.poisson(mu / (d + 1), size)
    out += shift_counts(thin_counts(poisson_counts(intensity, size, rng, horizon), 1 / d, rng), 2, horizon)
    for _ in range(2, d + 1):
        s = sample_S_batch(mu, d, lam_seq, size, rng)
        x = thin_counts(poisson_counts(intensity, size, rng, horizon), 1 / d, rng)
        out += shift_counts(x, 2 + 2 * s, horizon)
    return out


def rhs_dominated_means(lam_seq: Sequence[float], d: int, mu: float, horizon: int) -> np.ndarray:
    """Expected count at each time ``0..horizon`` of the dominated pattern."""
    from .pointproc import delay_pmf

    lam = np.asarray(lam_seq, float)
    pmf = delay_pmf(mu, d, lam)[:-1]
    out = np.zeros(horizon + 1)
    if horizon >= 2:
        out[2] += mu / (d + 1)
    for j, lj in enumerate(lam, start=1):
        if 2 * j + 2 <= horizon:
            out[2 * j + 2] += lj / d
        for s, ps in enumerate(pmf):
            t = 2 * j + 2 + 2 * s
            if t <= horizon:
                out[t] += (d - 1) * ps * lj / d
    return out


__all__ = [
    "BatchResult",
    "InitLaw",
    "SimConfig",
    "Trace",
    "TruncationError",
    "Variant",
    "allocated_depth",
    "InitialRay",
    "initial_ray",
    "passage_times",
    "ray_heaps",
    "rhs_dominated_means",
    "run",
    "run_any",
    "run_self_similar",
    "run_star_A",
    "run_trials",
    "sample_rhs_dominated",
    "sample_rhs_dominated_counts",
    "star_A_counts",
    "straight_ray",
    "trace_stats",
]
