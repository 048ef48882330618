"""Exact MAP decoding over non-overlapping entity assignments.

Candidates are sorted by (end, start). For candidate t, ``prev(t)`` is the
last earlier candidate that ends at or before t starts; everything strictly
between the two overlaps t and must be Nil if t takes an entity::

    a(t) = max( g_t(Nil) + a(t-1),
                g_t(best entity) + sum_{prev(t) < t' < t} g_t'(Nil) + a(prev(t)) )

with a(none) = 0. Ties go to Nil, and among equal entities to the lowest
lexicon rank.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Sequence

import numpy as np

from .corpus import MentionCandidate, Tweet, spans_overlap
from .scorer import Instance, Model, label_index, prepare, score_table, sum_assignment

BRUTE_FORCE_LIMIT = 10**6

Assignment = tuple  # tuple of entity id or None (Nil), one per candidate


class InferenceError(ValueError):
    pass


def prev_index(candidates: Sequence[MentionCandidate], t: int) -> int | None:
    """Largest t' < t with end(t') <= start(t), or None."""
    start = candidates[t].start
    for j in range(t - 1, -1, -1):
        if candidates[j].end <= start:
            return j
    return None


def is_valid(candidates: Sequence[MentionCandidate], labels: Sequence) -> bool:
    linked = [c.span for c, y in zip(candidates, labels) if y is not None]
    return not any(spans_overlap(a, b) for a, b in itertools.combinations(linked, 2))


def viterbi(spans: Sequence[tuple[int, int]], table: Sequence[np.ndarray]) -> list[int]:
    """Best label index per candidate given per-candidate score vectors.

    ``table[t][0]`` is the Nil score, ``table[t][k]`` the k-th entity's.
    ``spans`` must be sorted by (end, start).
    """
    T = len(spans)
    # 1-based chart; a[0] is the empty prefix
    a = [0.0] * (T + 1)
    take = [0] * (T + 1)
    prev1 = [0] * (T + 1)
    for t in range(1, T + 1):
        scores = table[t - 1]
        start = spans[t - 1][0]
        p = 0
        for j in range(t - 1, 0, -1):
            if spans[j - 1][1] <= start:
                p = j
                break
        prev1[t] = p
        psi_nil = float(scores[0]) + a[t - 1]
        if len(scores) > 1:
            k = int(np.argmax(scores[1:])) + 1
            between = 0.0
            for j in range(p + 1, t):
                between += float(table[j - 1][0])
            psi_ent = float(scores[k]) + between + a[p]
            if psi_ent > psi_nil:
                a[t] = psi_ent
                take[t] = k
                continue
        a[t] = psi_nil
    labels = [0] * T
    t = T
    while t > 0:
        if take[t]:
            labels[t - 1] = take[t]
            t = prev1[t]  # candidates in between stay Nil
        else:
            t -= 1
    return labels


def _augment(table, gold_idx, hamming_weight):
    out = []
    for scores, g in zip(table, gold_idx):
        aug = scores + hamming_weight
        aug[g] = scores[g]
        out.append(aug)
    return out


def hamming(labels: Sequence[int], gold_idx: Sequence[int]) -> int:
    return sum(1 for y, g in zip(labels, gold_idx) if y != g)


def _to_labels(candidates, idx):
    return tuple(None if k == 0 else c.candidates[k - 1] for c, k in zip(candidates, idx))


def _gold_idx(candidates, gold):
    if len(gold) != len(candidates):
        raise InferenceError(f"gold has {len(gold)} labels for {len(candidates)} candidates")
    return [label_index(c, y) for c, y in zip(candidates, gold)]


def decode_table(candidates: Sequence[MentionCandidate], table: Sequence[np.ndarray]) -> tuple[Assignment, float]:
    idx = viterbi([c.span for c in candidates], table)
    return _to_labels(candidates, idx), sum_assignment(table, idx)


def decode_table_augmented(candidates, table, gold: Sequence, hamming_weight: float) -> tuple[Assignment, float]:
    """Argmax of hamming_weight * #mismatches + s; returns (assignment, that value)."""
    gold_idx = _gold_idx(candidates, gold)
    idx = viterbi([c.span for c in candidates], _augment(table, gold_idx, hamming_weight))
    return _to_labels(candidates, idx), hamming_weight * hamming(idx, gold_idx) + sum_assignment(table, idx)


def decode(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate], user: str | None = None,
           instance: Instance | None = None) -> tuple[Assignment, float]:
    inst = instance or prepare(model, tweet, candidates, user)
    return decode_table(inst.candidates, score_table(model, inst))


def decode_loss_augmented(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate],
                          user: str | None, gold: Sequence, hamming_weight: float,
                          instance: Instance | None = None) -> tuple[Assignment, float]:
    inst = instance or prepare(model, tweet, candidates, user)
    return decode_table_augmented(inst.candidates, score_table(model, inst), gold, hamming_weight)


def brute_force_table(candidates: Sequence[MentionCandidate], table: Sequence[np.ndarray],
                      gold: Sequence | None = None, hamming_weight: float = 0.0) -> tuple[Assignment, float]:
    """Enumerate every label vector; same objective and tie-breaking as the DP.

    Scores are accumulated left to right exactly as ``sum_assignment`` does, so
    an assignment gets bit-identical values from both routes.
    """
    sizes = [len(s) for s in table]
    if math.prod(sizes) > BRUTE_FORCE_LIMIT:
        raise InferenceError(f"search space {math.prod(sizes)} exceeds {BRUTE_FORCE_LIMIT}")
    gold_idx = _gold_idx(candidates, gold) if gold is not None else None
    n = len(candidates)
    if n == 0:
        return (), 0.0
    grid = np.indices(sizes).reshape(n, -1).T  # every label vector, one per row
    valid = np.ones(len(grid), dtype=bool)
    for i, j in itertools.combinations(range(n), 2):
        if spans_overlap(candidates[i].span, candidates[j].span):
            valid &= ~((grid[:, i] > 0) & (grid[:, j] > 0))
    grid = grid[valid]
    total = np.zeros(len(grid))
    for t in range(n):
        total = total + np.asarray(table[t], dtype=np.float64)[grid[:, t]]
    if gold_idx is not None:
        total = hamming_weight * (grid != np.asarray(gold_idx)).sum(axis=1) + total
    best_rows = np.flatnonzero(total == total.max())
    # DP preference: later candidates decide first, Nil before entities, low rank first
    keys = grid[best_rows]
    pick = best_rows[np.lexsort(keys.T)[0]]
    return _to_labels(candidates, [int(k) for k in grid[pick]]), float(total[pick])


def brute_force_decode(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate],
                       user: str | None = None, gold: Sequence | None = None,
                       hamming_weight: float = 0.0) -> tuple[Assignment, float]:
    inst = prepare(model, tweet, candidates, user)
    return brute_force_table(inst.candidates, score_table(model, inst), gold, hamming_weight)
