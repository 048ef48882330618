"""End-to-end linking metrics and bootstrap significance testing.

A predicted (span, entity) is correct when it names the same entity as a
not-yet-matched gold item and the spans share at least one token.
"""

from __future__ import annotations

import json
import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .corpus import Tweet, spans_overlap

logger = logging.getLogger(__name__)

Link = tuple[int, int, str]  # (start, end, entity)


class EvaluationError(ValueError):
    pass


def _check_disjoint(items: Sequence[Link], what: str) -> None:
    ordered = sorted(items)
    for a, b in zip(ordered, ordered[1:]):
        if spans_overlap(a[:2], b[:2]):
            raise EvaluationError(f"overlapping {what} spans {a[:2]} and {b[:2]}")


def match_and_count(predicted: Sequence[Link], gold: Sequence[Link]) -> tuple[int, int, int]:
    """Greedy one-to-one matching: predictions by start take the first overlapping same-entity gold."""
    _check_disjoint(predicted, "predicted")
    _check_disjoint(gold, "gold")
    gold_sorted = sorted(gold)
    used = [False] * len(gold_sorted)
    correct = 0
    for start, end, ent in sorted(predicted):
        for j, (gs, ge, gent) in enumerate(gold_sorted):
            if not used[j] and gent == ent and spans_overlap((start, end), (gs, ge)):
                used[j] = True
                correct += 1
                break
    return len(predicted), len(gold), correct


def max_matching_count(predicted: Sequence[Link], gold: Sequence[Link]) -> int:
    """Size of a maximum bipartite matching under the same correctness rule."""
    from scipy.optimize import linear_sum_assignment

    if not predicted or not gold:
        return 0
    ok = np.array([[float(p[2] == g[2] and spans_overlap(p[:2], g[:2])) for g in gold] for p in predicted])
    rows, cols = linear_sum_assignment(ok, maximize=True)
    return int(ok[rows, cols].sum())


def prf1(n_pred: int, n_gold: int, n_correct: int) -> tuple[float, float, float]:
    p = n_correct / n_pred if n_pred else 0.0
    r = n_correct / n_gold if n_gold else 0.0
    # 2c / (pred + gold) equals 2pr / (p + r) but rounds once
    f1 = 2 * n_correct / (n_pred + n_gold) if n_correct else 0.0
    return p, r, f1


@dataclass
class LinkingResult:
    """Per-tweet predictions and gold, plus per-tweet (pred, gold, correct) counts."""

    tweet_ids: list[str]
    predicted: list[list[Link]]
    gold: list[list[Link]]
    counts: np.ndarray = field(init=False)

    def __post_init__(self):
        self.counts = np.array(
            [match_and_count(p, g) for p, g in zip(self.predicted, self.gold)], dtype=np.int64
        ).reshape(-1, 3)
        for p, g in zip(self.predicted, self.gold):
            if max_matching_count(p, g) != match_and_count(p, g)[2]:
                logger.info("greedy matching below optimal on a multi-overlap case: %s vs %s", p, g)

    @property
    def totals(self) -> tuple[int, int, int]:
        n_pred, n_gold, n_correct = (int(x) for x in self.counts.sum(axis=0))
        return n_pred, n_gold, n_correct

    def prf1(self) -> tuple[float, float, float]:
        return prf1(*self.totals)


def linking_result(gold_tweets: Sequence[Tweet], predictions: Mapping[str, Sequence[Link]]) -> LinkingResult:
    """Pair gold tweets with predictions; tweets without a prediction record predict nothing."""
    ids, pred, gold = [], [], []
    for tw in gold_tweets:
        ids.append(tw.id)
        pred.append([tuple(x) for x in predictions.get(tw.id, [])])
        gold.append([(a.start, a.end, a.entity) for a in tw.gold])
    unknown = set(predictions) - set(ids)
    if unknown:
        raise EvaluationError(f"{len(unknown)} predicted tweets are not in the gold corpus")
    return LinkingResult(ids, pred, gold)


def _f1_from_counts(c: np.ndarray) -> np.ndarray:
    """Micro F1 per bootstrap sample; ``c`` is samples x 3 (pred, gold, correct)."""
    total = (c[:, 0] + c[:, 1]).astype(float)
    corr = c[:, 2].astype(float)
    return np.divide(2 * corr, total, out=np.zeros_like(corr), where=corr > 0)


@dataclass
class BootstrapComparison:
    t_statistic: float
    p_value: float
    f1_a: np.ndarray
    f1_b: np.ndarray

    @property
    def mean_diff(self) -> float:
        return float(np.mean(self.f1_a - self.f1_b))


def bootstrap_compare(results_a: LinkingResult, results_b: LinkingResult, n_samples: int = 100,
                      seed: int = 0) -> BootstrapComparison:
    """Two-tailed paired t-test on per-sample F1 over shared bootstrap resamples of tweets."""
    if results_a.tweet_ids != results_b.tweet_ids:
        raise EvaluationError("systems were evaluated on different tweet sets")
    if n_samples < 2:
        raise EvaluationError("need at least 2 bootstrap samples")
    n = len(results_a.tweet_ids)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(n_samples, n))
    f1_a = _f1_from_counts(results_a.counts[idx].sum(axis=1))
    f1_b = _f1_from_counts(results_b.counts[idx].sum(axis=1))
    d = f1_a - f1_b
    mean, sd = d.mean(), d.std(ddof=1)
    if sd == 0:
        if mean == 0:
            return BootstrapComparison(0.0, 1.0, f1_a, f1_b)
        return BootstrapComparison(math.copysign(math.inf, mean), 0.0, f1_a, f1_b)
    t = mean / (sd / math.sqrt(n_samples))
    p = 2.0 * stats.t.sf(abs(t), df=n_samples - 1)
    return BootstrapComparison(float(t), float(p), f1_a, f1_b)


# -- linking output files --------------------------------------------------------


def save_links(records: Sequence[tuple[str, Sequence[Link]]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tweet_id, links in records:
            fh.write(json.dumps({"id": tweet_id, "links": [list(x) for x in links]}) + "\n")


def load_links(path: str | Path) -> dict[str, list[Link]]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                out[str(rec["id"])] = [(int(s), int(e), str(ent)) for s, e, ent in rec["links"]]
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise EvaluationError(f"{path}:{lineno}: bad linking record ({exc})") from None
    return out
