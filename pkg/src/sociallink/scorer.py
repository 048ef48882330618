"""Per-candidate scoring: an MLP over surface features plus bilinear terms.

For mention candidate t taking label y (an entity id, or ``None`` for Nil)::

    g1 = beta . tanh(W phi(x, y, t) + b) + b_out
    g2 = u' W_ue e_y + m_t' W_me e_y          (0 for Nil)
    g  = g1 + g2

and a message scores ``s = sum_t g``. Embedding tables are frozen; only the
MLP and the two composition matrices are trainable.
"""

from __future__ import annotations

import copy
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Protocol

import numpy as np

from .corpus import MentionCandidate, Tweet
from .embeddings import EmbeddingTable, lookup, mention_vector, read_embedding_block, write_embedding_block

NIL = None
DEFAULT_HIDDEN = 40
MODEL_MAGIC = "sociallink-model 1"


class ScorerError(ValueError):
    pass


class FeatureExtractor(Protocol):
    name: str
    dim: int

    def extract(self, tweet: Tweet, candidate: MentionCandidate, label: str | None) -> np.ndarray: ...


def canonical_name(entity: str) -> str:
    return entity.lower().replace("_", " ")


class DefaultFeatures:
    """Surface features that need nothing beyond the lexicon match itself.

    prior(surface, entity), log #candidates, #mention tokens,
    surface == canonical entity name, Nil indicator, bias.
    """

    name = "default"
    dim = 6

    def extract(self, tweet, candidate, label):
        is_nil = label is None
        return np.array([
            candidate.prior(label),
            math.log(len(candidate.candidates)),
            float(len(candidate.words)),
            0.0 if is_nil else float(canonical_name(label) == candidate.surface),
            1.0 if is_nil else 0.0,
            1.0,
        ])


FEATURE_EXTRACTORS = {"default": DefaultFeatures}


@dataclass
class MlpParams:
    W: np.ndarray      # M x D
    b: np.ndarray      # M
    beta: np.ndarray   # M
    b_out: float = 0.0


@dataclass
class CompositionParams:
    W_ue: np.ndarray   # D_user x D_entity
    W_me: np.ndarray   # D_word x D_entity


@dataclass
class Gradients:
    W: np.ndarray
    b: np.ndarray
    beta: np.ndarray
    b_out: float
    W_ue: np.ndarray
    W_me: np.ndarray

    def __sub__(self, other: "Gradients") -> "Gradients":
        return Gradients(*(getattr(self, f.name) - getattr(other, f.name) for f in fields(self)))

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _glorot(rng, rows, cols):
    limit = math.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


@dataclass
class Model:
    mlp: MlpParams
    comp: CompositionParams
    users: EmbeddingTable
    words: EmbeddingTable
    entities: EmbeddingTable
    features: FeatureExtractor = field(default_factory=DefaultFeatures)
    use_user_entity: bool = True
    use_mention_entity: bool = True

    @classmethod
    def init(cls, users, words, entities, features=None, hidden=DEFAULT_HIDDEN, seed=0,
             use_user_entity=True, use_mention_entity=True) -> "Model":
        features = features or DefaultFeatures()
        rng = np.random.default_rng(seed)
        mlp = MlpParams(
            W=_glorot(rng, hidden, features.dim),
            b=np.zeros(hidden),
            beta=_glorot(rng, hidden, 1)[:, 0].copy(),
            b_out=0.0,
        )
        comp = CompositionParams(
            W_ue=_glorot(rng, users.dim, entities.dim),
            W_me=_glorot(rng, words.dim, entities.dim),
        )
        return cls(mlp, comp, users, words, entities, features, use_user_entity, use_mention_entity)

    @property
    def hidden(self) -> int:
        return self.mlp.W.shape[0]

    def copy(self) -> "Model":
        """Copy of the trainable parameters; embedding tables are shared."""
        return Model(copy.deepcopy(self.mlp), copy.deepcopy(self.comp), self.users, self.words,
                     self.entities, self.features, self.use_user_entity, self.use_mention_entity)

    def apply_update(self, grads: Gradients, lr: float) -> None:
        self.mlp.W -= lr * grads.W
        self.mlp.b -= lr * grads.b
        self.mlp.beta -= lr * grads.beta
        self.mlp.b_out -= lr * grads.b_out
        if self.use_user_entity:
            self.comp.W_ue -= lr * grads.W_ue
        if self.use_mention_entity:
            self.comp.W_me -= lr * grads.W_me


# -- single-item scores ------------------------------------------------------


def _features(model, tweet, candidate, label):
    phi = np.asarray(model.features.extract(tweet, candidate, label), dtype=np.float64)
    if phi.shape != (model.mlp.W.shape[1],):
        raise ScorerError(f"feature vector has shape {phi.shape}, expected ({model.mlp.W.shape[1]},)")
    return phi


def _check_label(candidate, label):
    if label is not None and label not in candidate.candidates:
        raise ScorerError(f"label {label!r} is not a candidate of {candidate.surface!r}")


def score_g1(model: Model, tweet: Tweet, candidate: MentionCandidate, label: str | None) -> float:
    _check_label(candidate, label)
    phi = _features(model, tweet, candidate, label)
    h = np.tanh(model.mlp.W @ phi + model.mlp.b)
    return float(model.mlp.beta @ h + model.mlp.b_out)


def score_g2(model: Model, tweet: Tweet, candidate: MentionCandidate, label: str | None,
             user: str | None = None) -> float:
    _check_label(candidate, label)
    if label is None:
        return 0.0
    e = lookup(model.entities, label)
    total = 0.0
    if model.use_user_entity:
        u = lookup(model.users, tweet.author if user is None else user)
        total += float(u @ model.comp.W_ue @ e)
    if model.use_mention_entity:
        m = mention_vector(candidate, model.words)
        total += float(m @ model.comp.W_me @ e)
    return total


def score_g(model, tweet, candidate, label, user=None) -> float:
    return score_g1(model, tweet, candidate, label) + score_g2(model, tweet, candidate, label, user)


# -- vectorized per-tweet scoring ---------------------------------------------


@dataclass
class Instance:
    """Everything about one tweet that stays fixed while parameters change.

    Rows are laid out candidate by candidate: the Nil row, then one row per
    entity in lexicon order. ``offsets[t]`` is candidate t's Nil row.
    """

    candidates: list[MentionCandidate]
    offsets: np.ndarray
    phi: np.ndarray         # R x D
    is_entity: np.ndarray   # R bools
    ent_vecs: np.ndarray    # R x D_entity, zero on Nil rows
    men_vecs: np.ndarray    # R x D_word
    user_vec: np.ndarray

    def label_rows(self, labels: Sequence[str | None]) -> np.ndarray:
        if len(labels) != len(self.candidates):
            raise ScorerError(f"assignment has {len(labels)} labels for {len(self.candidates)} candidates")
        rows = np.empty(len(labels), dtype=np.int64)
        for t, (cand, y) in enumerate(zip(self.candidates, labels)):
            rows[t] = self.offsets[t] + label_index(cand, y)
        return rows


def label_index(candidate: MentionCandidate, label: str | None) -> int:
    """0 for Nil, k + 1 for the k-th entity candidate."""
    if label is None:
        return 0
    try:
        return candidate.candidates.index(label) + 1
    except ValueError:
        raise ScorerError(f"label {label!r} is not a candidate of {candidate.surface!r}") from None


def prepare(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate],
            user: str | None = None) -> Instance:
    candidates = list(candidates)
    sizes = [1 + len(c.candidates) for c in candidates]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    n_rows = int(offsets[-1])
    phi = np.zeros((n_rows, model.mlp.W.shape[1]))
    is_entity = np.zeros(n_rows, dtype=bool)
    ent_vecs = np.zeros((n_rows, model.entities.dim))
    men_vecs = np.zeros((n_rows, model.words.dim))
    for t, cand in enumerate(candidates):
        m = mention_vector(cand, model.words)
        for k, label in enumerate((None, *cand.candidates)):
            r = offsets[t] + k
            phi[r] = _features(model, tweet, cand, label)
            men_vecs[r] = m
            if label is not None:
                is_entity[r] = True
                ent_vecs[r] = lookup(model.entities, label)
    user_vec = np.array(lookup(model.users, tweet.author if user is None else user))
    return Instance(candidates, offsets, phi, is_entity, ent_vecs, men_vecs, user_vec)


def row_scores(model: Model, inst: Instance) -> np.ndarray:
    h = np.tanh(inst.phi @ model.mlp.W.T + model.mlp.b)
    g = h @ model.mlp.beta + model.mlp.b_out
    g2 = np.zeros_like(g)
    if model.use_user_entity:
        g2 += inst.ent_vecs @ (inst.user_vec @ model.comp.W_ue)
    if model.use_mention_entity:
        g2 += np.einsum("rj,rj->r", inst.men_vecs @ model.comp.W_me, inst.ent_vecs)
    g2[~inst.is_entity] = 0.0
    return g + g2


def score_table(model: Model, inst: Instance) -> list[np.ndarray]:
    """Per-candidate score vectors: index 0 is Nil, k + 1 the k-th entity."""
    g = row_scores(model, inst)
    return [g[inst.offsets[t]:inst.offsets[t + 1]] for t in range(len(inst.candidates))]


def sum_assignment(table: Sequence[np.ndarray], label_idx: Sequence[int]) -> float:
    """Ordered left-to-right sum; every caller uses this so equal assignments score identically."""
    total = 0.0
    for scores, k in zip(table, label_idx):
        total += float(scores[k])
    return total


def score_message(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate],
                  assignment: Sequence[str | None], user: str | None = None) -> float:
    inst = prepare(model, tweet, candidates, user)
    if len(assignment) != len(inst.candidates):
        raise ScorerError(f"assignment has {len(assignment)} labels for {len(inst.candidates)} candidates")
    idx = [label_index(c, y) for c, y in zip(inst.candidates, assignment)]
    return sum_assignment(score_table(model, inst), idx)


def instance_backward(model: Model, inst: Instance, rows: np.ndarray, weight: float = 1.0) -> Gradients:
    """Gradient of ``weight * sum_{r in rows} g_r`` w.r.t. the trainable parameters."""
    phi = inst.phi[rows]
    h = np.tanh(phi @ model.mlp.W.T + model.mlp.b)
    dz = (1.0 - h * h) * model.mlp.beta
    ent = inst.ent_vecs[rows] * inst.is_entity[rows, None]
    if model.use_user_entity:
        g_ue = np.outer(inst.user_vec, ent.sum(axis=0))
    else:
        g_ue = np.zeros_like(model.comp.W_ue)
    if model.use_mention_entity:
        g_me = inst.men_vecs[rows].T @ ent
    else:
        g_me = np.zeros_like(model.comp.W_me)
    return Gradients(
        W=weight * (dz.T @ phi),
        b=weight * dz.sum(axis=0),
        beta=weight * h.sum(axis=0),
        b_out=weight * float(len(rows)),
        W_ue=weight * g_ue,
        W_me=weight * g_me,
    )


def backward(model: Model, tweet: Tweet, candidates: Sequence[MentionCandidate],
             assignment: Sequence[str | None], upstream_weight: float = 1.0,
             user: str | None = None) -> Gradients:
    inst = prepare(model, tweet, candidates, user)
    return instance_backward(model, inst, inst.label_rows(assignment), upstream_weight)


# -- serialization -----------------------------------------------------------

_PARAMS = ("W", "b", "beta", "b_out", "W_ue", "W_me")


def _param_arrays(model: Model) -> dict[str, np.ndarray]:
    return {
        "W": model.mlp.W,
        "b": model.mlp.b[None, :],
        "beta": model.mlp.beta[None, :],
        "b_out": np.array([[model.mlp.b_out]]),
        "W_ue": model.comp.W_ue,
        "W_me": model.comp.W_me,
    }


def save_model(model: Model, path: str | Path) -> None:
    """Header lines, then ``param``/``table`` blocks in the embedding text format.

    Values are written with 17 significant digits so a load/save cycle is exact.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(MODEL_MAGIC + "\n")
        fh.write(f"hidden {model.hidden}\n")
        fh.write(f"features {model.features.name} {model.features.dim}\n")
        fh.write(f"user_entity {int(model.use_user_entity)}\n")
        fh.write(f"mention_entity {int(model.use_mention_entity)}\n")
        for name, arr in _param_arrays(model).items():
            fh.write(f"param {name}\n")
            write_embedding_block(fh, [str(i) for i in range(arr.shape[0])], arr, fmt="%.17g")
        for kind, table in (("user", model.users), ("word", model.words), ("entity", model.entities)):
            fh.write(f"table {kind}\n")
            write_embedding_block(fh, table.ids, table.matrix, fmt="%.17g")
        fh.write("end\n")


def load_model(path: str | Path) -> Model:
    with open(path, encoding="utf-8") as fh:
        lines = iter(fh.readlines())
    lineno = 0

    def take():
        nonlocal lineno
        lineno += 1
        line = next(lines, None)
        if line is None:
            raise ScorerError(f"{path}: unexpected end of file at line {lineno}")
        return line.rstrip("\n")

    if take() != MODEL_MAGIC:
        raise ScorerError(f"{path}: not a model file")
    header = {}
    for _ in range(4):
        key, *vals = take().split(" ")
        header[key] = vals
    feat_name, feat_dim = header["features"][0], int(header["features"][1])
    if feat_name not in FEATURE_EXTRACTORS:
        raise ScorerError(f"{path}: unknown feature extractor {feat_name!r}")
    features = FEATURE_EXTRACTORS[feat_name]()
    if features.dim != feat_dim:
        raise ScorerError(f"{path}: feature dim {feat_dim} != {features.dim}")

    params, tables = {}, {}
    while True:
        line = take()
        if line == "end":
            break
        kind, name = line.split(" ")
        ids, matrix = read_embedding_block(lines, first_lineno=lineno + 1)
        lineno += 1 + len(ids)
        if kind == "param":
            params[name] = matrix
        elif kind == "table":
            tables[name] = EmbeddingTable(name, ids, matrix)
        else:
            raise ScorerError(f"{path}: unknown block {kind!r}")
    missing = [p for p in _PARAMS if p not in params] + [k for k in ("user", "word", "entity") if k not in tables]
    if missing:
        raise ScorerError(f"{path}: missing blocks {missing}")
    mlp = MlpParams(params["W"], params["b"][0].copy(), params["beta"][0].copy(), float(params["b_out"][0, 0]))
    comp = CompositionParams(params["W_ue"], params["W_me"])
    model = Model(mlp, comp, tables["user"], tables["word"], tables["entity"], features,
                  header["user_entity"][0] == "1", header["mention_entity"][0] == "1")
    if model.hidden != int(header["hidden"][0]):
        raise ScorerError(f"{path}: hidden size mismatch")
    _check_shapes(model)
    return model


def _check_shapes(model: Model) -> None:
    m, d = model.mlp.W.shape
    if model.mlp.b.shape != (m,) or model.mlp.beta.shape != (m,) or d != model.features.dim:
        raise ScorerError("MLP parameter shapes are inconsistent")
    if model.comp.W_ue.shape != (model.users.dim, model.entities.dim):
        raise ScorerError("W_ue shape does not match user/entity dims")
    if model.comp.W_me.shape != (model.words.dim, model.entities.dim):
        raise ScorerError("W_me shape does not match word/entity dims")
