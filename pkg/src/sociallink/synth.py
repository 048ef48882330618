"""Synthetic tweets, lexicon, author graph and embeddings with planted homophily.

Users belong to communities, and entities are split across the same
communities. Authors mostly mention entities from their own community and
sometimes borrow a neighbour's favourite. Ambiguous aliases are shared by
entities from different communities, so only the author's community says
which one is meant.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .corpus import Annotation, Lexicon, Tweet
from .embeddings import EmbeddingTable
from .netembed import SocialGraph

_ONSETS = "b d f g k l m n p r s t v z".split()
_VOWELS = "a e i o u".split()


@dataclass
class SynthConfig:
    n_users: int = 40
    n_entities: int = 80
    n_communities: int = 2
    tweets_per_user: int = 6
    ambiguity: float = 0.5          # fraction of entities sharing an ambiguous alias
    alias_rate: float = 0.8         # P(mention uses the alias | entity has one)
    homophily: float = 0.9          # P(mention drawn from the author's community)
    neighbor_rate: float = 0.5      # P(mention copied from a neighbour's favourites)
    favorites: int = 3
    favorite_rate: float = 0.8      # P(own favourite | community draw), else uniform over the pool
    two_token_rate: float = 0.3
    nested_rate: float = 0.3        # two-token names whose first token is another entity's name
    min_mentions: int = 1
    max_mentions: int = 3
    min_filler: int = 2
    max_filler: int = 6
    filler_vocab: int = 80
    distractor_rate: float = 0.1    # filler words that are (low-prior) lexicon entries
    distractor_prior: float = 0.05
    p_in: float = 0.25
    p_out: float = 0.01
    word_dim: int = 50
    entity_dim: int = 50
    entity_noise: float = 0.5
    word_noise: float = 0.3

    def __post_init__(self):
        if self.n_users <= 0 or self.n_entities <= 0:
            raise ValueError("synthetic corpus needs at least one user and one entity")
        if self.n_communities <= 0:
            raise ValueError("n_communities must be positive")
        if not 0.0 <= self.ambiguity <= 1.0:
            raise ValueError("ambiguity must lie in [0, 1]")
        if self.min_mentions < 1 or self.max_mentions < self.min_mentions:
            raise ValueError("bad mention range")
        if self.max_filler < max(self.min_filler, self.max_mentions - 1):
            raise ValueError("max_filler must leave room to separate mentions")


@dataclass
class SyntheticData:
    tweets: list[Tweet]
    lexicon: Lexicon
    graph: SocialGraph
    tables: dict[str, EmbeddingTable]
    user_community: dict[str, int]
    entity_community: dict[str, int] = field(default_factory=dict)


def _word_factory(rng):
    seen = set()

    def new_word():
        while True:
            n = int(rng.integers(2, 4))
            w = "".join(_ONSETS[rng.integers(len(_ONSETS))] + _VOWELS[rng.integers(len(_VOWELS))] for _ in range(n))
            if w not in seen:
                seen.add(w)
                return w

    return new_word


def _unit(v):
    return v / np.linalg.norm(v)


def _planted_graph(rng, users, community, cfg):
    edges = []
    for i, j in itertools.combinations(range(len(users)), 2):
        p = cfg.p_in if community[users[i]] == community[users[j]] else cfg.p_out
        if rng.random() < p:
            edges.append((users[i], users[j], 1.0))
    touched = {a for a, _, _ in edges} | {b for _, b, _ in edges}
    for u in users:
        if u in touched:
            continue
        mates = [v for v in users if v != u and community[v] == community[u]] or [v for v in users if v != u]
        if mates:
            v = mates[int(rng.integers(len(mates)))]
            edges.append((u, v, 1.0))
            touched |= {u, v}
    return SocialGraph.from_edges(edges, nodes=users)


def _alias_groups(rng, entities, ent_comm, cfg):
    """Pairs of entities sharing one alias, drawn from two different communities when possible."""
    n_pairs = int(round(cfg.ambiguity * len(entities) / 2))
    queues: dict[int, list[str]] = {}
    for i in rng.permutation(len(entities)):
        queues.setdefault(ent_comm[entities[i]], []).append(entities[i])
    groups = []
    while len(groups) < n_pairs:
        live = sorted((c for c in queues if queues[c]), key=lambda c: (-len(queues[c]), c))
        if len(live) >= 2:
            groups.append([queues[live[0]].pop(), queues[live[1]].pop()])
        elif live and len(queues[live[0]]) >= 2:
            q = queues[live[0]]
            groups.append([q.pop(), q.pop()])
        else:
            break
    return groups


def generate_synthetic(config: SynthConfig | None = None, seed: int = 0) -> SyntheticData:
    cfg = config or SynthConfig()
    rng = np.random.default_rng(seed)
    new_word = _word_factory(rng)

    users = [f"u{i:03d}" for i in range(cfg.n_users)]
    user_comm = {u: i % cfg.n_communities for i, u in enumerate(users)}

    # entity names; nested names reuse an earlier one-token entity's name
    names: list[tuple[str, ...]] = []
    single = []
    for i in range(cfg.n_entities):
        if rng.random() < cfg.two_token_rate:
            if single and rng.random() < cfg.nested_rate:
                head = single[int(rng.integers(len(single)))]
            else:
                head = new_word()
            names.append((head, new_word()))
        else:
            w = new_word()
            names.append((w,))
            single.append(w)
    entities = ["_".join(n) for n in names]
    name_of = dict(zip(entities, names))
    ent_comm = {e: i % cfg.n_communities for i, e in enumerate(entities)}
    pools = {c: [e for e in entities if ent_comm[e] == c] for c in range(cfg.n_communities)}

    entries: dict[str, list[tuple[str, float]]] = {" ".join(name_of[e]): [(e, 1.0)] for e in entities}
    alias_of: dict[str, tuple[str, ...]] = {}
    for group in _alias_groups(rng, entities, ent_comm, cfg):
        alias = new_word()
        for e in group:
            alias_of[e] = (alias,)
        prior = 1.0 / len(group)
        entries[alias] = [(e, prior) for e in sorted(group)]

    fillers = [new_word() for _ in range(cfg.filler_vocab)]
    for w in fillers:
        if rng.random() < cfg.distractor_rate:
            entries[w] = [(entities[int(rng.integers(len(entities)))], cfg.distractor_prior)]
    lexicon = Lexicon({s: tuple(c) for s, c in entries.items()}, max_ngram=max(len(n) for n in names))

    graph = _planted_graph(rng, users, user_comm, cfg)
    favorites = {}
    for u in users:
        pool = pools[user_comm[u]] or entities
        k = min(cfg.favorites, len(pool))
        favorites[u] = [pool[i] for i in rng.choice(len(pool), size=k, replace=False)]

    def pick_entity(u):
        nbrs = sorted(graph.neighbors(u))
        if nbrs and rng.random() < cfg.neighbor_rate:
            v = nbrs[int(rng.integers(len(nbrs)))]
            return favorites[v][int(rng.integers(len(favorites[v])))]
        if rng.random() < cfg.homophily:
            if rng.random() < cfg.favorite_rate:
                return favorites[u][int(rng.integers(len(favorites[u])))]
            pool = pools[user_comm[u]] or entities
            return pool[int(rng.integers(len(pool)))]
        return entities[int(rng.integers(len(entities)))]

    tweets = []
    for u in users:
        for k in range(cfg.tweets_per_user):
            n_m = int(rng.integers(cfg.min_mentions, cfg.max_mentions + 1))
            n_f = int(rng.integers(max(cfg.min_filler, n_m - 1), cfg.max_filler + 1))
            # filler groups around mentions; inner groups non-empty so mentions never touch
            sizes = rng.multinomial(n_f - (n_m - 1), [1.0 / (n_m + 1)] * (n_m + 1))
            sizes[1:-1] += 1
            tokens: list[str] = []
            gold = []
            for j in range(n_m + 1):
                tokens += [fillers[int(rng.integers(len(fillers)))] for _ in range(int(sizes[j]))]
                if j == n_m:
                    break
                e = pick_entity(u)
                surface = alias_of[e] if e in alias_of and rng.random() < cfg.alias_rate else name_of[e]
                gold.append(Annotation(len(tokens), len(tokens) + len(surface), e))
                tokens += list(surface)
            tweets.append(Tweet(f"{u}-{k}", u, tuple(tokens), tuple(gold)))

    centroids = rng.normal(size=(cfg.n_communities, cfg.entity_dim))
    ent_vecs = {e: _unit(centroids[ent_comm[e]] + cfg.entity_noise * rng.normal(size=cfg.entity_dim)) for e in entities}
    proj = rng.normal(size=(cfg.word_dim, cfg.entity_dim)) / np.sqrt(cfg.entity_dim)
    word_vecs: dict[str, np.ndarray] = {}
    for e in entities:
        for w in name_of[e]:
            if w not in word_vecs:
                word_vecs[w] = _unit(proj @ ent_vecs[e] + cfg.word_noise * rng.normal(size=cfg.word_dim))
    for w in sorted({a[0] for a in alias_of.values()}) + fillers:
        word_vecs[w] = _unit(rng.normal(size=cfg.word_dim))
    tables = {
        "word": EmbeddingTable.from_mapping("word", word_vecs),
        "entity": EmbeddingTable.from_mapping("entity", ent_vecs),
    }
    return SyntheticData(tweets, lexicon, graph, tables, user_comm, ent_comm)


def split_corpus(tweets, dev_fraction: float = 0.15, test_fraction: float = 0.15, seed: int = 0):
    """Deterministic shuffled (train, dev, test) split."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(tweets))
    n_dev = int(round(dev_fraction * len(tweets)))
    n_test = int(round(test_fraction * len(tweets)))
    dev = [tweets[i] for i in order[:n_dev]]
    test = [tweets[i] for i in order[n_dev:n_dev + n_test]]
    train = [tweets[i] for i in order[n_dev + n_test:]]
    return train, dev, test
