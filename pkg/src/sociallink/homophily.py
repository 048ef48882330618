"""Entity homophily: do connected users mention more similar entities?

Each user is a binary user-by-entity incidence vector. Similarity is the
cosine between two such vectors. We compare the mean over graph edges with
the mean over non-adjacent user pairs.
"""

from __future__ import annotations

import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Tweet
from .netembed import GraphError, SocialGraph

logger = logging.getLogger(__name__)

EXACT_NODE_LIMIT = 3000
DEFAULT_SAMPLE_PAIRS = 1_000_000


@dataclass(frozen=True)
class UserEntityProfile:
    user: str
    entities: frozenset[str]


def entity_similarity(a: UserEntityProfile | Iterable[str], b: UserEntityProfile | Iterable[str]) -> float:
    """Cosine of binary incidence vectors, |A n B| / sqrt(|A| |B|); 0 if either is empty."""
    sa = a.entities if isinstance(a, UserEntityProfile) else frozenset(a)
    sb = b.entities if isinstance(b, UserEntityProfile) else frozenset(b)
    if not sa or not sb:
        return 0.0
    return len(sa & sb) / math.sqrt(len(sa) * len(sb))


@dataclass
class HomophilyReport:
    sim_connected: float
    sim_disconnected: float
    n_connected: int
    n_disconnected: int
    std_connected: float
    std_disconnected: float
    sampled: bool
    missing_profiles: int

    @property
    def ratio(self) -> float:
        if self.sim_disconnected == 0:
            return math.inf if self.sim_connected > 0 else math.nan
        return self.sim_connected / self.sim_disconnected

    @property
    def diff_stderr(self) -> float:
        """Standard error of ``sim_connected - sim_disconnected`` (pairs treated as independent)."""
        var = self.std_connected**2 / self.n_connected
        if self.n_disconnected:
            var += self.std_disconnected**2 / self.n_disconnected
        return math.sqrt(var)


def profiles_from_tweets(tweets: Iterable[Tweet]) -> list[UserEntityProfile]:
    by_user: dict[str, set[str]] = defaultdict(set)
    for tw in tweets:
        by_user[tw.author].update(a.entity for a in tw.gold)
    return [UserEntityProfile(u, frozenset(es)) for u, es in by_user.items()]


def load_profiles(path: str | Path) -> list[UserEntityProfile]:
    by_user: dict[str, set[str]] = defaultdict(set)
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 2:
                raise ValueError(f"line {lineno}: expected '<user_id> <entity_id>'")
            by_user[parts[0]].add(parts[1])
    return [UserEntityProfile(u, frozenset(es)) for u, es in by_user.items()]


def save_profiles(profiles: Iterable[UserEntityProfile], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in profiles:
            for e in sorted(p.entities):
                fh.write(f"{p.user}\t{e}\n")


def homophily_report(
    graph: SocialGraph,
    profiles: Iterable[UserEntityProfile] | Mapping[str, Iterable[str]],
    exact_limit: int = EXACT_NODE_LIMIT,
    sample_pairs: int = DEFAULT_SAMPLE_PAIRS,
    seed: int = 0,
) -> HomophilyReport:
    if graph.n_edges == 0:
        raise GraphError("connected-pair similarity is undefined on a graph without edges")
    if isinstance(profiles, Mapping):
        by_user = {u: frozenset(es) for u, es in profiles.items()}
    else:
        by_user = {p.user: p.entities for p in profiles}
    missing = sum(1 for n in graph.nodes if n not in by_user)
    if missing:
        logger.warning("%d graph nodes have no profile; treating them as empty", missing)
    sets = [by_user.get(n, frozenset()) for n in graph.nodes]

    conn = np.array([entity_similarity(by_user.get(a, ()), by_user.get(b, ())) for a, b, _ in graph.edges])
    n = len(graph.nodes)
    if n <= exact_limit:
        dis_sum, dis_sq, n_dis = _disconnected_exact(graph, sets)
        sampled = False
    else:
        dis_sum, dis_sq, n_dis = _disconnected_sampled(graph, sets, sample_pairs, seed)
        sampled = True
    dis_mean = dis_sum / n_dis if n_dis else 0.0
    dis_var = max(dis_sq / n_dis - dis_mean**2, 0.0) if n_dis else 0.0
    return HomophilyReport(
        sim_connected=float(conn.mean()),
        sim_disconnected=float(dis_mean),
        n_connected=len(conn),
        n_disconnected=int(n_dis),
        std_connected=float(conn.std()),
        std_disconnected=math.sqrt(dis_var),
        sampled=sampled,
        missing_profiles=missing,
    )


def _disconnected_exact(graph, sets):
    vocab = {e: i for i, e in enumerate(sorted(set().union(*sets)))}
    x = np.zeros((len(sets), max(len(vocab), 1)))
    for r, s in enumerate(sets):
        for e in s:
            x[r, vocab[e]] = 1.0
    inter = x @ x.T
    sizes = x.sum(axis=1)
    denom = np.sqrt(np.outer(sizes, sizes))
    sim = np.divide(inter, denom, out=np.zeros_like(inter), where=denom > 0)
    index = {n: i for i, n in enumerate(graph.nodes)}
    keep = np.triu(np.ones(sim.shape, dtype=bool), k=1)
    for a, b, _ in graph.edges:
        keep[index[a], index[b]] = keep[index[b], index[a]] = False
    vals = sim[keep]
    return vals.sum(), (vals**2).sum(), len(vals)


def _disconnected_sampled(graph, sets, sample_pairs, seed):
    rng = np.random.default_rng(seed)
    nodes = graph.nodes
    n = len(nodes)
    vals = []
    if graph.n_edges >= n * (n - 1) // 2:
        return 0.0, 0.0, 0
    batch = max(sample_pairs // 4, 1000)
    while len(vals) < sample_pairs:
        i = rng.integers(0, n, size=batch)
        j = rng.integers(0, n, size=batch)
        for a, b in zip(i, j):
            if a == b or graph.has_edge(nodes[a], nodes[b]):
                continue
            vals.append(entity_similarity(sets[a], sets[b]))
            if len(vals) == sample_pairs:
                break
    v = np.array(vals)
    return v.sum(), (v**2).sum(), len(v)
