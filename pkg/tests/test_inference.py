import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from factories import random_candidates, random_instance, random_table, random_valid_assignment
from sociallink.corpus import MentionCandidate
from sociallink.inference import (
    InferenceError,
    brute_force_decode,
    brute_force_table,
    decode,
    decode_loss_augmented,
    decode_table,
    decode_table_augmented,
    is_valid,
    prev_index,
)
from sociallink.scorer import label_index, score_message, sum_assignment


def cand(t, s, e, ents=("A",)):
    return MentionCandidate(t, s, e, f"m{t}", tuple(ents), tuple(1.0 / (i + 1) for i in range(len(ents))))


def naive_enumeration(cands, table):
    """Independent oracle: recursive enumeration, returns only the best value."""
    best = -np.inf

    def rec(t, labels, acc):
        nonlocal best
        if t == len(cands):
            best = max(best, acc)
            return
        for k in range(len(table[t])):
            trial = labels + [k]
            if k and any(j and (cands[i].start < cands[t].end and cands[t].start < cands[i].end)
                         for i, j in enumerate(labels)):
                continue
            rec(t + 1, trial, acc + table[t][k])

    rec(0, [], 0.0)
    return best


def test_prev_index_examples():
    cs = [cand(0, 0, 1), cand(1, 0, 2), cand(2, 1, 2), cand(3, 2, 3)]
    assert prev_index(cs, 0) is None
    assert prev_index(cs, 1) is None
    assert prev_index(cs, 2) == 0
    assert prev_index(cs, 3) == 2


def test_no_candidates():
    assert decode_table([], []) == ((), 0.0)


def test_single_candidate_picks_better_label():
    cs = [cand(0, 0, 1, ("A", "B"))]
    assert decode_table(cs, [np.array([0.0, -1.0, 2.0])]) == (("B",), 2.0)
    assert decode_table(cs, [np.array([3.0, -1.0, 2.0])]) == ((None,), 3.0)


def test_red_sox_prefers_long_mention():
    cs = [cand(0, 0, 1, ("E2",)), cand(1, 0, 2, ("E1",)), cand(2, 1, 2, ("E3",))]
    table = [np.array([0.0, 1.0]), np.array([0.0, 3.0]), np.array([0.0, 1.0])]
    assert decode_table(cs, table) == ((None, "E1", None), 3.0)
    table[1] = np.array([0.0, 1.5])
    assert decode_table(cs, table) == (("E2", None, "E3"), 2.0)


def test_ties_resolve_toward_nil_then_lowest_rank():
    cs = [cand(0, 0, 1, ("A", "B"))]
    assert decode_table(cs, [np.array([1.0, 1.0, 1.0])])[0] == (None,)
    assert decode_table(cs, [np.array([0.0, 1.0, 1.0])])[0] == ("A",)


def test_agreement_with_brute_force(rng):
    for _ in range(300):
        _, cands = random_candidates(rng)
        table = random_table(rng, cands)
        labels, value = decode_table(cands, table)
        bf_labels, bf_value = brute_force_table(cands, table)
        assert is_valid(cands, labels)
        assert abs(value - bf_value) <= 1e-9
        assert value == pytest.approx(naive_enumeration(cands, table), abs=1e-9)


def test_integer_ties_give_identical_assignment(rng):
    for _ in range(300):
        _, cands = random_candidates(rng)
        table = random_table(rng, cands, integer=True)
        assert decode_table(cands, table) == brute_force_table(cands, table)


def test_augmented_agreement_and_dominance(rng):
    for _ in range(300):
        _, cands = random_candidates(rng)
        table = random_table(rng, cands)
        gold = random_valid_assignment(rng, cands)
        labels, value = decode_table_augmented(cands, table, gold, 0.7)
        _, bf_value = brute_force_table(cands, table, gold, 0.7)
        assert is_valid(cands, labels)
        assert abs(value - bf_value) <= 1e-9
        gold_score = sum_assignment(table, [label_index(c, y) for c, y in zip(cands, gold)])
        assert value >= gold_score


def test_raising_a_nil_score_never_lowers_optimum(rng):
    for _ in range(200):
        _, cands = random_candidates(rng)
        if not cands:
            continue
        table = random_table(rng, cands)
        _, before = decode_table(cands, table)
        t = int(rng.integers(len(cands)))
        table[t] = table[t].copy()
        table[t][0] += float(rng.uniform(0, 2))
        _, after = decode_table(cands, table)
        assert after >= before


@given(st.integers(0, 2**32 - 1))
def test_decode_output_is_valid(seed):
    rng = np.random.default_rng(seed)
    _, cands = random_candidates(rng)
    labels, _ = decode_table(cands, random_table(rng, cands))
    assert is_valid(cands, labels)
    assert all(y is None or y in c.candidates for c, y in zip(cands, labels))


def test_model_decode_matches_brute_force(rng):
    for _ in range(50):
        model, tweet, cands = random_instance(rng, max_t=6)
        labels, value = decode(model, tweet, cands)
        bf_labels, bf_value = brute_force_decode(model, tweet, cands)
        assert abs(value - bf_value) <= 1e-9
        assert value == pytest.approx(score_message(model, tweet, cands, labels), abs=1e-12)
        gold = random_valid_assignment(rng, cands)
        _, aug = decode_loss_augmented(model, tweet, cands, None, gold, 0.3)
        _, bf_aug = brute_force_decode(model, tweet, cands, gold=gold, hamming_weight=0.3)
        assert abs(aug - bf_aug) <= 1e-9


def test_brute_force_limit():
    cands = [cand(t, t, t + 1, ("A", "B", "C", "D", "E", "F", "G", "H", "I")) for t in range(7)]
    with pytest.raises(InferenceError):
        brute_force_table(cands, [np.zeros(10)] * 7)


def test_gold_length_mismatch():
    cs = [cand(0, 0, 1)]
    with pytest.raises(InferenceError):
        decode_table_augmented(cs, [np.zeros(2)], [], 0.2)
