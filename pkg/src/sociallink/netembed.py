"""Second-order proximity network embedding (LINE-2nd) for author graphs.

Each vertex keeps a vertex vector and a context vector. A directed edge
(u, v) is drawn with probability proportional to its weight, and
``vert[u]`` is pushed towards ``ctx[v]`` and away from ``negative_samples``
noise contexts drawn from a degree^0.75 distribution. Vertices with similar
neighbourhoods therefore end up with similar vertex vectors.
"""

from __future__ import annotations

import logging
from collections import defaultdict
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np

from .embeddings import EmbeddingTable

logger = logging.getLogger(__name__)

MAX_DEFAULT_SAMPLES = 10_000_000
SIGMOID_BOUND = 6.0


class GraphError(ValueError):
    pass


@dataclass
class SocialGraph:
    """Undirected weighted graph; ``edges`` holds each undirected edge once."""

    nodes: list[str] = field(default_factory=list)
    edges: list[tuple[str, str, float]] = field(default_factory=list)

    def __post_init__(self):
        self.adjacency: dict[str, dict[str, float]] = {n: {} for n in self.nodes}
        for a, b, w in self.edges:
            if a == b:
                raise GraphError(f"self-loop on {a!r}")
            if w <= 0:
                raise GraphError(f"non-positive weight on ({a}, {b})")
            for n in (a, b):
                if n not in self.adjacency:
                    self.nodes.append(n)
                    self.adjacency[n] = {}
            self.adjacency[a][b] = w
            self.adjacency[b][a] = w

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], nodes: Iterable[str] = ()) -> "SocialGraph":
        """Symmetrize, sum duplicate weights and drop self-loops."""
        order = list(dict.fromkeys(nodes))
        seen = set(order)
        weights: dict[tuple[str, str], float] = {}
        for edge in edges:
            a, b = edge[0], edge[1]
            w = float(edge[2]) if len(edge) > 2 else 1.0
            for n in (a, b):
                if n not in seen:
                    seen.add(n)
                    order.append(n)
            if a == b:
                logger.warning("skipping self-loop on %s", a)
                continue
            key = (b, a) if (b, a) in weights else (a, b)
            weights[key] = weights.get(key, 0.0) + w
        return cls(order, [(a, b, w) for (a, b), w in weights.items()])

    def has_edge(self, a: str, b: str) -> bool:
        return b in self.adjacency.get(a, ())

    def neighbors(self, node: str) -> dict[str, float]:
        return self.adjacency[node]

    def degree(self, node: str) -> float:
        return sum(self.adjacency[node].values())

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def load_graph(path: str | Path) -> SocialGraph:
    edges = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if len(parts) not in (2, 3):
                raise GraphError(f"line {lineno}: expected '<user_a> <user_b> [weight]'")
            w = 1.0
            if len(parts) == 3:
                try:
                    w = float(parts[2])
                except ValueError:
                    raise GraphError(f"line {lineno}: bad weight {parts[2]!r}") from None
                if not w > 0:
                    raise GraphError(f"line {lineno}: weight must be positive")
            if parts[0] == parts[1]:
                logger.warning("line %d: skipping self-loop on %s", lineno, parts[0])
            edges.append((parts[0], parts[1], w))
    return SocialGraph.from_edges(edges)


def save_graph(graph: SocialGraph, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for a, b, w in graph.edges:
            fh.write(f"{a} {b} {w!r}\n")


# -- alias sampling --------------------------------------------------------


def build_alias(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias table for O(1) draws from ``weights`` (unnormalized)."""
    weights = np.asarray(weights, dtype=np.float64)
    n = len(weights)
    if n == 0 or weights.sum() <= 0:
        raise ValueError("alias table needs positive total weight")
    scaled = weights * n / weights.sum()
    prob = np.zeros(n)
    alias = np.zeros(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s, l = small.pop(), large.pop()
        prob[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] + scaled[s] - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for i in large + small:
        prob[i] = 1.0
        alias[i] = i
    return prob, alias


@numba.njit(cache=True)
def _splitmix(state):
    state = state + np.uint64(0x9E3779B97F4A7C15)
    z = state
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    z = z ^ (z >> np.uint64(31))
    return state, z


@numba.njit(cache=True)
def _uniform(state):
    state, z = _splitmix(state)
    return state, (z >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@numba.njit(cache=True)
def _alias_draw(state, prob, alias):
    state, r = _uniform(state)
    n = prob.shape[0]
    k = int(r * n)
    if k >= n:
        k = n - 1
    state, r2 = _uniform(state)
    if r2 < prob[k]:
        return state, k
    return state, alias[k]


@numba.njit(cache=True)
def _line2_run(src, dst, edge_prob, edge_alias, noise_prob, noise_alias,
               vert, ctx, first, count, total, negatives, init_lr, seed):
    dim = vert.shape[1]
    err = np.zeros(dim)
    state = np.uint64(seed)
    for i in range(first, first + count):
        lr = init_lr * (1.0 - 0.99 * i / total)
        state, e = _alias_draw(state, edge_prob, edge_alias)
        u = src[e]
        v = dst[e]
        err[:] = 0.0
        for d in range(negatives + 1):
            if d == 0:
                target = v
                label = 1.0
            else:
                state, target = _alias_draw(state, noise_prob, noise_alias)
                if target == v:
                    continue
                label = 0.0
            f = 0.0
            for j in range(dim):
                f += vert[u, j] * ctx[target, j]
            if f > SIGMOID_BOUND:
                f = SIGMOID_BOUND
            elif f < -SIGMOID_BOUND:
                f = -SIGMOID_BOUND
            g = (label - 1.0 / (1.0 + np.exp(-f))) * lr
            for j in range(dim):
                err[j] += g * ctx[target, j]
                ctx[target, j] += g * vert[u, j]
        for j in range(dim):
            vert[u, j] += err[j]


@numba.njit(cache=True, parallel=True)
def _line2_parallel(src, dst, edge_prob, edge_alias, noise_prob, noise_alias,
                    vert, ctx, total, negatives, init_lr, seed, threads):
    # unsynchronized updates across workers, by design
    per = (total + threads - 1) // threads
    for w in numba.prange(threads):
        first = w * per
        count = min(per, total - first)
        if count > 0:
            _line2_run(src, dst, edge_prob, edge_alias, noise_prob, noise_alias,
                       vert, ctx, first, count, total, negatives, init_lr, seed + 7919 * (w + 1))


@dataclass
class NetEmbedConfig:
    dim: int = 100
    negative_samples: int = 5
    total_samples: int | None = None  # None: 1000 x |E|, capped
    initial_lr: float = 0.025
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if self.dim <= 0 or self.negative_samples < 1 or self.initial_lr <= 0 or self.threads < 1:
            raise ValueError(f"invalid NetEmbedConfig {self}")
        if self.total_samples is not None and self.total_samples <= 0:
            raise ValueError("total_samples must be positive")

    def samples_for(self, graph: SocialGraph) -> int:
        if self.total_samples is not None:
            return self.total_samples
        return min(1000 * graph.n_edges, MAX_DEFAULT_SAMPLES)


def train_line2(graph: SocialGraph, config: NetEmbedConfig | None = None) -> EmbeddingTable:
    """Train second-order proximity vertex embeddings; returns a user table.

    ``config.threads == 1`` is deterministic under ``config.seed``. More
    threads run hogwild-style and are not reproducible.
    """
    config = config or NetEmbedConfig()
    if graph.n_edges == 0:
        raise GraphError("cannot embed a graph without edges")
    index = {n: i for i, n in enumerate(graph.nodes)}
    src, dst, w = [], [], []
    for a, b, wt in graph.edges:
        src += [index[a], index[b]]
        dst += [index[b], index[a]]
        w += [wt, wt]
    src = np.array(src, dtype=np.int64)
    dst = np.array(dst, dtype=np.int64)
    edge_prob, edge_alias = build_alias(np.array(w))
    out_degree = np.zeros(len(graph.nodes))
    np.add.at(out_degree, src, np.array(w))
    noise_prob, noise_alias = build_alias(out_degree ** 0.75)

    rng = np.random.default_rng(config.seed)
    dim = config.dim
    vert = rng.uniform(-0.5 / dim, 0.5 / dim, size=(len(graph.nodes), dim))
    ctx = np.zeros_like(vert)
    total = config.samples_for(graph)
    seed = int(rng.integers(0, 2**62))
    if config.threads == 1:
        _line2_run(src, dst, edge_prob, edge_alias, noise_prob, noise_alias,
                   vert, ctx, 0, total, total, config.negative_samples, config.initial_lr, seed)
    else:
        numba.set_num_threads(min(config.threads, numba.config.NUMBA_NUM_THREADS))
        _line2_parallel(src, dst, edge_prob, edge_alias, noise_prob, noise_alias,
                        vert, ctx, total, config.negative_samples, config.initial_lr, seed, config.threads)
    return EmbeddingTable("user", list(graph.nodes), vert)
