#!/usr/bin/env python3
"""Test F1 with and without the user-entity bilinear term on ambiguous synthetic corpora.

Prints one TSV row per seed, then the mean gain and a bootstrap test on the
pooled test predictions.
"""

import argparse

import numpy as np

from sociallink.corpus import generate_candidates
from sociallink.evaluation import bootstrap_compare, linking_result
from sociallink.inference import decode
from sociallink.netembed import NetEmbedConfig, train_line2
from sociallink.scorer import Model
from sociallink.synth import SynthConfig, generate_synthetic, split_corpus
from sociallink.training import TrainConfig, evaluate_model, train


def predictions(model, tweets, lexicon):
    out = {}
    for tw in tweets:
        cands = generate_candidates(tw, lexicon)
        labels, _ = decode(model, tw, cands)
        out[tw.id] = [(c.start, c.end, y) for c, y in zip(cands, labels) if y is not None]
    return out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--ambiguity", type=float, default=0.5)
    ap.add_argument("--homophily", type=float, default=0.9)
    ap.add_argument("--max-epochs", type=int, default=50)
    ap.add_argument("--user-dim", type=int, default=100)
    args = ap.parse_args()

    print("seed\tf1_with_user\tf1_without_user\tgain")
    gains, pooled = [], {True: {}, False: {}}
    gold_tweets = []
    for seed in range(args.seeds):
        data = generate_synthetic(SynthConfig(ambiguity=args.ambiguity, homophily=args.homophily), seed=seed)
        tr, dev, te = split_corpus(data.tweets, seed=seed)
        users = train_line2(data.graph, NetEmbedConfig(dim=args.user_dim, seed=seed))
        f1 = {}
        for flag in (True, False):
            model = Model.init(users, data.tables["word"], data.tables["entity"], seed=seed, use_user_entity=flag)
            state = train(model, tr, dev, data.lexicon, TrainConfig(max_epochs=args.max_epochs, patience=10, seed=seed))
            f1[flag] = evaluate_model(state.model, te, data.lexicon)[2]
            preds = predictions(state.model, te, data.lexicon)
            pooled[flag].update({f"{seed}:{k}": v for k, v in preds.items()})
        gold_tweets += [type(t)(f"{seed}:{t.id}", t.author, t.tokens, t.gold) for t in te]
        gains.append(f1[True] - f1[False])
        print(f"{seed}\t{f1[True]:.4f}\t{f1[False]:.4f}\t{gains[-1]:+.4f}")

    cmp = bootstrap_compare(linking_result(gold_tweets, pooled[True]), linking_result(gold_tweets, pooled[False]))
    print(f"# mean gain {100 * np.mean(gains):.1f} F1 points; bootstrap t={cmp.t_statistic:.2f} p={cmp.p_value:.2e}")


if __name__ == "__main__":
    main()
