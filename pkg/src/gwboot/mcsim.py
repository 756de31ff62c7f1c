"""Monte Carlo bootstrap percolation on sampled Galton-Watson trees.

Trees are stored layer by layer: ``child_counts[d][i]`` is the number of
children of node ``i`` at depth ``d``, and the children of consecutive
nodes are contiguous in layer ``d + 1``. A vertex becomes infected once at
least ``r`` of its children are infected, so its state at time ``t`` is a
function of its depth-``t`` subtree; the sweeps below only read layers that
are deep enough for that.

Randomness comes from numpy's counter-based Philox generator, keyed by
``(seed, stream)`` through :class:`numpy.random.SeedSequence`.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from math import lcm
from typing import Sequence

import numpy as np

from .offspring import OffspringDistribution
from .ratpoly import to_fraction

__all__ = [
    "RNG_ALGORITHM",
    "make_rng",
    "SampledTree",
    "PrevalenceEstimate",
    "SimulationUnsafeError",
    "InsufficientDepthError",
    "MemoryGuardError",
    "sample_tree",
    "states_at",
    "root_state_at",
    "estimate_phi",
    "prevalence",
    "prevalence_sweep",
    "expected_nodes",
]

RNG_ALGORITHM = "Philox4x64-10"
DEFAULT_NODE_CAP = 50_000_000
_INT_LIMIT = 2**62


class SimulationUnsafeError(ValueError):
    pass


class InsufficientDepthError(ValueError):
    pass


class MemoryGuardError(MemoryError):
    def __init__(self, message, projected=None):
        super().__init__(message)
        self.projected = projected


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for substream ``stream`` of ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed) & (2**64 - 1), int(stream)])))


class _IntegerSampler:
    """Draw from a finite law by exact integer inverse CDF when the denominators allow it."""

    def __init__(self, values: Sequence[int], probs: Sequence[Fraction]):
        self.values = np.asarray(values, dtype=np.int64)
        den = reduce(lcm, (p.denominator for p in probs), 1)
        self.exact = den < _INT_LIMIT
        cum = np.cumsum([p for p in probs])  # object array of Fractions
        if self.exact:
            self.den = den
            self.bounds = np.array([int(c * den) for c in cum], dtype=np.int64)
        else:
            self.bounds = np.array([float(c) for c in cum])

    def __call__(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if len(self.values) == 1:
            return np.full(n, self.values[0], dtype=np.int64)
        if self.exact:
            u = rng.integers(0, self.den, size=n, dtype=np.int64)
        else:
            u = rng.random(n)
        idx = np.searchsorted(self.bounds, u, side="right")
        return self.values[idx]


def _bernoulli(rng: np.random.Generator, p: Fraction, n: int) -> np.ndarray:
    if p == 0:
        return np.zeros(n, dtype=bool)
    if p == 1:
        return np.ones(n, dtype=bool)
    if p.denominator < _INT_LIMIT:
        return rng.integers(0, p.denominator, size=n, dtype=np.int64) < p.numerator
    return rng.random(n) < float(p)


def _require_safe(xi: OffspringDistribution):
    if not xi.simulation_safe:
        raise SimulationUnsafeError(f"{xi} has infinite mean offspring; refusing to simulate")


def expected_nodes(xi: OffspringDistribution, depth: int, n_roots: int = 1) -> float:
    m = xi.mean
    if m == 1:
        return n_roots * (depth + 1)
    return n_roots * (m ** (depth + 1) - 1) / (m - 1)


@dataclass
class SampledTree:
    """A forest of ``n_roots`` i.i.d. trees truncated at ``depth``.

    ``child_counts`` has ``depth`` arrays (layers 0..depth-1); ``infected0``
    has ``depth + 1`` boolean arrays with the initial states.
    """

    xi: OffspringDistribution
    q: Fraction
    depth: int
    child_counts: list[np.ndarray]
    infected0: list[np.ndarray]
    seed: int
    stream: int = 0
    rng_algorithm: str = RNG_ALGORITHM

    @property
    def r(self) -> int:
        return self.xi.r

    @property
    def n_roots(self) -> int:
        return len(self.infected0[0])

    @property
    def layer_sizes(self) -> list[int]:
        return [len(s) for s in self.infected0]

    @property
    def n_nodes(self) -> int:
        return sum(self.layer_sizes)


def sample_tree(
    xi: OffspringDistribution,
    depth: int,
    seed: int,
    q=Fraction(1, 2),
    n_roots: int = 1,
    stream: int = 0,
    node_cap: int | None = None,
) -> SampledTree:
    """Sample offspring layer by layer and draw initial states (infected w.p. ``1 - q``)."""
    _require_safe(xi)
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    q = to_fraction(q)
    if not 0 <= q <= 1:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    if node_cap is not None:
        projected = expected_nodes(xi, depth, n_roots)
        if projected > node_cap:
            raise MemoryGuardError(
                f"expected {projected:.3g} nodes exceeds the cap of {node_cap:.3g}", projected=projected
            )
    rng = make_rng(seed, stream)
    sampler = _IntegerSampler(list(xi.support), list(xi.support.values()))
    p = 1 - q
    counts: list[np.ndarray] = []
    states: list[np.ndarray] = []
    size = n_roots
    for d in range(depth + 1):
        if d < depth:
            c = sampler(rng, size)
            counts.append(c)
        states.append(_bernoulli(rng, p, size))
        if d < depth:
            size = int(c.sum())
            if node_cap is not None and size > node_cap:
                raise MemoryGuardError(f"layer {d + 1} alone has {size} nodes", projected=size)
    return SampledTree(xi, q, depth, counts, states, int(seed), stream)


def _infected_children(counts: np.ndarray, child_state: np.ndarray) -> np.ndarray:
    cs = np.concatenate(([0], np.cumsum(child_state, dtype=np.int64)))
    ends = np.cumsum(counts)
    starts = ends - counts
    return cs[ends] - cs[starts]


def states_at(tree: SampledTree, t: int) -> list[np.ndarray]:
    """Infection state of every layer after ``t`` steps.

    Layer ``d`` is exact only for ``d + t <= tree.depth``; deeper layers are
    returned as computed on the truncated tree and must not be used.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    if tree.depth < t:
        raise InsufficientDepthError(f"tree depth {tree.depth} < t={t}")
    cur = [s.copy() for s in tree.infected0]
    r = tree.r
    for tau in range(1, t + 1):
        # only layers whose depth-tau subtree is inside the sample change meaningfully
        last = tree.depth - tau
        nxt = list(cur)
        for d in range(last + 1):
            hits = _infected_children(tree.child_counts[d], cur[d + 1])
            nxt[d] = cur[d] | (hits >= r)
        cur = nxt
    return cur


def root_state_at(tree: SampledTree, t: int):
    """``"infected"`` or ``"healthy"`` for a single root; a boolean array for a forest."""
    roots = states_at(tree, t)[0]
    if tree.n_roots == 1:
        return "infected" if roots[0] else "healthy"
    return roots


def _phi_batch(args):
    xi, q, t, n, seed, stream = args
    tree = sample_tree(xi, t, seed, q=q, n_roots=n, stream=stream)
    return int(np.count_nonzero(~states_at(tree, t)[0]))


def estimate_phi(
    xi: OffspringDistribution,
    q,
    t: int,
    n_trees: int,
    seed: int,
    batch_size: int = 20_000,
    workers: int | None = None,
) -> tuple[float, float]:
    """Fraction of healthy roots at time ``t`` over ``n_trees`` independent trees.

    Batches use substreams ``0, 1, ...`` of ``seed`` so the estimate does not
    depend on ``workers``.
    """
    _require_safe(xi)
    if n_trees < 1:
        raise ValueError("n_trees must be positive")
    q = to_fraction(q)
    jobs = []
    done = 0
    stream = 0
    while done < n_trees:
        n = min(batch_size, n_trees - done)
        jobs.append((xi, q, t, n, seed, stream))
        done += n
        stream += 1
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            healthy = sum(pool.map(_phi_batch, jobs))
    else:
        healthy = sum(_phi_batch(j) for j in jobs)
    v = healthy / n_trees
    return v, math.sqrt(v * (1 - v) / n_trees)


@dataclass(frozen=True)
class PrevalenceEstimate:
    R: int
    w: int | None
    t: int
    value: float
    ball_size: int
    n_trees: int
    std_error: float
    seed: int
    infected: int = 0
    rng_algorithm: str = RNG_ALGORITHM

    def to_json(self) -> dict:
        return {
            "R": self.R,
            "w": self.w,
            "t": self.t,
            "value": self.value,
            "ball_size": self.ball_size,
            "seed": self.seed,
        }


def prevalence(
    xi: OffspringDistribution,
    q,
    R: int,
    t: int,
    w: int | None = None,
    seed: int = 0,
    node_cap: int = DEFAULT_NODE_CAP,
) -> PrevalenceEstimate:
    """Infected fraction of the ball ``B(R)`` (or the annulus ``B(R) minus B(R-w)``) at time ``t``.

    One tree of depth ``R + t`` is sampled so every vertex of the ball has
    its full depth-``t`` subtree.
    """
    _require_safe(xi)
    if R < 0 or t < 0:
        raise ValueError("R and t must be nonnegative")
    if w is not None and not 1 <= w <= R + 1:
        raise ValueError("annulus width must satisfy 1 <= w <= R + 1")
    tree = sample_tree(xi, R + t, seed, q=q, node_cap=node_cap)
    states = states_at(tree, t)
    first = 0 if w is None else R - w + 1
    layers = states[first : R + 1]
    size = sum(len(s) for s in layers)
    infected = sum(int(np.count_nonzero(s)) for s in layers)
    v = infected / size
    return PrevalenceEstimate(
        R=R,
        w=w,
        t=t,
        value=v,
        ball_size=size,
        n_trees=1,
        std_error=math.sqrt(v * (1 - v) / size),
        seed=int(seed),
        infected=infected,
    )


def _prev_job(args):
    xi, q, R, t, w, seed, cap = args
    return prevalence(xi, q, R, t, w=w, seed=seed, node_cap=cap)


def prevalence_sweep(
    xi: OffspringDistribution,
    q,
    R: int,
    t: int,
    seeds: Sequence[int],
    w: int | None = None,
    workers: int | None = None,
    node_cap: int = DEFAULT_NODE_CAP,
) -> list[PrevalenceEstimate]:
    """Single-tree prevalence for each seed."""
    jobs = [(xi, to_fraction(q), R, t, w, s, node_cap) for s in seeds]
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_prev_job, jobs))
    return [_prev_job(j) for j in jobs]
