"""Max-margin training with loss-augmented decoding and per-tweet SGD.

Per tweet the structured hinge loss is::

    L = max_y [ hamming_weight * #{t: y_t != y*_t} + s(y) ] - s(y*)

Its subgradient is grad s(y_hat) - grad s(y*), with y_hat the loss-augmented
argmax. L2 on the composition matrices is applied as a decay after each step.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .corpus import Lexicon, MentionCandidate, Tweet, generate_candidates, gold_assignment
from .evaluation import match_and_count, prf1
from .inference import decode, decode_table_augmented
from .scorer import Instance, Model, instance_backward, label_index, prepare, score_table, sum_assignment

logger = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 0.01
    hamming_weight: float = 0.2
    l2_comp: float = 0.005
    regularize_mlp: bool = False
    max_epochs: int = 1000
    patience: int = 50
    eval_every: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.hamming_weight < 0 or self.l2_comp < 0:
            raise ValueError("hamming_weight and l2_comp must be non-negative")
        if self.max_epochs < 0 or self.patience < 1 or self.eval_every < 1:
            raise ValueError("max_epochs >= 0, patience >= 1, eval_every >= 1 required")

    @classmethod
    def from_dict(cls, values: dict) -> "TrainConfig":
        kwargs = {}
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            if key not in types:
                raise ValueError(f"unknown TrainConfig key {key!r}")
            kwargs[key] = _coerce(raw, types[key])
        return cls(**kwargs)


def _coerce(raw, type_name):
    if not isinstance(raw, str):
        return raw
    if type_name == "bool":
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"bad boolean {raw!r}")
    return {"int": int, "float": float}.get(type_name, str)(raw)


def read_kv_config(path: str | Path) -> dict[str, str]:
    """Flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


@dataclass
class TrainExample:
    tweet: Tweet
    instance: Instance
    gold: tuple


def build_examples(model: Model, tweets: Sequence[Tweet], lexicon: Lexicon) -> list[TrainExample]:
    """Prepare trainable tweets; tweets whose gold is not reachable through the lexicon are skipped."""
    out, skipped = [], 0
    for tw in tweets:
        cands = generate_candidates(tw, lexicon)
        gold = gold_assignment(tw, cands)
        if gold is None:
            skipped += 1
            continue
        out.append(TrainExample(tw, prepare(model, tw, cands), gold))
    if skipped:
        logger.info("skipped %d tweets with gold outside the lexicon", skipped)
    return out


def _loss_from_instance(model, inst, gold, config):
    table = score_table(model, inst)
    y_hat, _ = decode_table_augmented(inst.candidates, table, gold, config.hamming_weight)
    if y_hat == tuple(gold):
        return 0.0, y_hat
    gold_idx = [label_index(c, y) for c, y in zip(inst.candidates, gold)]
    hat_idx = [label_index(c, y) for c, y in zip(inst.candidates, y_hat)]
    mismatches = sum(1 for a, b in zip(hat_idx, gold_idx) if a != b)
    loss = (config.hamming_weight * mismatches + sum_assignment(table, hat_idx)) - sum_assignment(table, gold_idx)
    return max(loss, 0.0), y_hat


def tweet_loss(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate], user: str | None,
               gold: Sequence, config: TrainConfig, instance: Instance | None = None) -> tuple[float, tuple]:
    """Structured hinge loss and the loss-augmented argmax."""
    inst = instance or prepare(model, tweet, candidates, user)
    return _loss_from_instance(model, inst, gold, config)


def _decay(model: Model, config: TrainConfig) -> None:
    if config.l2_comp == 0:
        return
    factor = 1.0 - config.learning_rate * config.l2_comp
    model.comp.W_ue *= factor
    model.comp.W_me *= factor
    if config.regularize_mlp:
        model.mlp.W *= factor
        model.mlp.beta *= factor


def sgd_step(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate], user: str | None,
             gold: Sequence, config: TrainConfig, instance: Instance | None = None) -> float:
    """One subgradient step in place; returns the pre-update loss."""
    inst = instance or prepare(model, tweet, candidates, user)
    loss, y_hat = _loss_from_instance(model, inst, gold, config)
    if loss > 0:
        grads = (instance_backward(model, inst, inst.label_rows(y_hat))
                 - instance_backward(model, inst, inst.label_rows(gold)))
        model.apply_update(grads, config.learning_rate)
    _decay(model, config)
    return loss


@dataclass
class TrainState:
    model: Model
    epoch: int = 0
    best_f1: float = -1.0
    best_epoch: int = 0
    best_model: Model | None = None
    losses: list[float] = field(default_factory=list)
    dev_history: list[tuple[int, float, float, float]] = field(default_factory=list)


def evaluate_model(model: Model, tweets: Sequence[Tweet], lexicon: Lexicon,
                   instances: Sequence[Instance] | None = None) -> tuple[float, float, float]:
    n_pred = n_gold = n_correct = 0
    for i, tw in enumerate(tweets):
        inst = instances[i] if instances is not None else None
        cands = inst.candidates if inst is not None else generate_candidates(tw, lexicon)
        labels, _ = decode(model, tw, cands, instance=inst)
        pred = [(c.start, c.end, y) for c, y in zip(cands, labels) if y is not None]
        gold = [(a.start, a.end, a.entity) for a in tw.gold]
        p, g, c = match_and_count(pred, gold)
        n_pred, n_gold, n_correct = n_pred + p, n_gold + g, n_correct + c
    return prf1(n_pred, n_gold, n_correct)


def train(model: Model, train_tweets: Sequence[Tweet], dev_tweets: Sequence[Tweet], lexicon: Lexicon,
          config: TrainConfig | None = None, log=None) -> TrainState:
    """Per-tweet SGD with early stopping on dev F1; returns the state holding the best snapshot.

    ``log`` is an optional callable receiving (epoch, mean_loss, P, R, F1).
    """
    config = config or TrainConfig()
    if not train_tweets:
        raise ValueError("empty training corpus")
    model = model.copy()
    examples = build_examples(model, train_tweets, lexicon)
    dev_instances = [prepare(model, tw, generate_candidates(tw, lexicon)) for tw in dev_tweets]
    rng = np.random.default_rng(config.seed)
    state = TrainState(model=model, best_model=model.copy())
    bad_evals = 0
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(len(examples))
        total = 0.0
        for i in order:
            ex = examples[i]
            total += sgd_step(model, ex.tweet, ex.instance.candidates, None, ex.gold, config, ex.instance)
        mean_loss = total / max(len(examples), 1)
        state.losses.append(mean_loss)
        state.epoch = epoch
        if epoch % config.eval_every:
            continue
        p, r, f1 = evaluate_model(model, dev_tweets, lexicon, dev_instances)
        state.dev_history.append((epoch, p, r, f1))
        if log is not None:
            log(epoch, mean_loss, p, r, f1)
        if f1 > state.best_f1:
            state.best_f1, state.best_epoch = f1, epoch
            state.best_model = model.copy()
            bad_evals = 0
        else:
            bad_evals += 1
            if bad_evals >= config.patience:
                logger.info("early stop at epoch %d (best dev F1 %.4f at %d)", epoch, state.best_f1, state.best_epoch)
                break
    state.model = state.best_model
    return state
