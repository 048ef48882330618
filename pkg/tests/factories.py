"""Random instance builders shared by the test modules."""

import numpy as np

from sociallink.corpus import MentionCandidate, Tweet
from sociallink.embeddings import EmbeddingTable
from sociallink.scorer import CompositionParams, DefaultFeatures, MlpParams, Model


def random_candidates(rng, n_tokens=10, max_t=8, max_entities=4, entity_pool=6):
    """Random distinct spans sorted by (end, start), each with 1..max_entities candidates."""
    tokens = tuple(f"w{i}" for i in range(n_tokens))
    n = int(rng.integers(0, max_t + 1))
    spans = set()
    while len(spans) < n:
        s = int(rng.integers(0, n_tokens))
        e = min(s + int(rng.integers(1, 4)), n_tokens)
        spans.add((s, e))
    out = []
    for t, (s, e) in enumerate(sorted(spans, key=lambda x: (x[1], x[0]))):
        k = int(rng.integers(1, max_entities + 1))
        ents = tuple(f"e{i}" for i in rng.choice(entity_pool, size=k, replace=False))
        priors = tuple(sorted(rng.uniform(0, 1, size=k), reverse=True))
        out.append(MentionCandidate(t, s, e, " ".join(tokens[s:e]), ents, priors))
    return tokens, out


def random_table(rng, candidates, integer=False):
    if integer:
        return [rng.integers(-3, 4, size=1 + len(c.candidates)).astype(float) for c in candidates]
    return [rng.normal(size=1 + len(c.candidates)) for c in candidates]


def random_valid_assignment(rng, candidates):
    labels = [None] * len(candidates)
    taken = []
    for t in rng.permutation(len(candidates)):
        c = candidates[t]
        if rng.random() < 0.5 and not any(c.start < e and s < c.end for s, e in taken):
            labels[t] = c.candidates[int(rng.integers(len(c.candidates)))]
            taken.append(c.span)
    return tuple(labels)


def random_model(rng, n_tokens=10, entity_pool=6, hidden=4, dims=(3, 4, 5), scale=1.0,
                 use_user_entity=True, use_mention_entity=True, users=("u0", "u1")):
    du, dw, de = dims
    features = DefaultFeatures()
    mlp = MlpParams(
        W=scale * rng.normal(size=(hidden, features.dim)),
        b=scale * rng.normal(size=hidden),
        beta=scale * rng.normal(size=hidden),
        b_out=float(rng.normal()),
    )
    comp = CompositionParams(W_ue=scale * rng.normal(size=(du, de)), W_me=scale * rng.normal(size=(dw, de)))
    tables = (
        EmbeddingTable("user", list(users), rng.normal(size=(len(users), du))),
        # leave the last token out of vocabulary
        EmbeddingTable("word", [f"w{i}" for i in range(n_tokens - 1)], rng.normal(size=(n_tokens - 1, dw))),
        EmbeddingTable("entity", [f"e{i}" for i in range(entity_pool)], rng.normal(size=(entity_pool, de))),
    )
    return Model(mlp, comp, *tables, features, use_user_entity, use_mention_entity)


def random_instance(rng, **kwargs):
    """(model, tweet, candidates) with a random author."""
    tokens, cands = random_candidates(rng, **kwargs)
    model = random_model(rng)
    tweet = Tweet("t0", "u0" if rng.random() < 0.8 else "stranger", tokens)
    return model, tweet, cands
