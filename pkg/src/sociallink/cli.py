"""Command-line entry point: ``sociallink <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .corpus import CorpusError, generate_candidates, load_corpus, load_lexicon, save_corpus, save_lexicon
from .embeddings import EmbeddingError, load_embeddings, save_embeddings
from .evaluation import EvaluationError, bootstrap_compare, linking_result, load_links, save_links
from .homophily import homophily_report, load_profiles, profiles_from_tweets, save_profiles
from .inference import InferenceError, decode
from .netembed import GraphError, NetEmbedConfig, load_graph, save_graph, train_line2
from .scorer import Model, ScorerError, load_model, save_model
from .synth import SynthConfig, generate_synthetic, split_corpus
from .training import TrainConfig, read_kv_config, train

logger = logging.getLogger("sociallink")

DATA_ERRORS = (CorpusError, EmbeddingError, EvaluationError, GraphError, InferenceError, ScorerError,
               ValueError, OSError)
MODEL_KEYS = {"hidden": int, "init_seed": int, "user_entity": bool, "mention_entity": bool}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _print_config(command: str, values: dict) -> None:
    items = " ".join(f"{k}={v}" for k, v in values.items())
    print(f"# {command}: {items}", file=sys.stderr)


# -- subcommands ---------------------------------------------------------------


def cmd_synth(args) -> None:
    cfg = SynthConfig(n_users=args.users, n_entities=args.entities, n_communities=args.communities,
                      tweets_per_user=args.tweets_per_user, ambiguity=args.ambiguity)
    _print_config("synth", {"seed": args.seed, **vars(cfg)})
    data = generate_synthetic(cfg, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train_set, dev_set, test_set = split_corpus(data.tweets, args.dev_fraction, args.test_fraction, seed=args.seed)
    save_corpus(train_set, out / "train.jsonl")
    save_corpus(dev_set, out / "dev.jsonl")
    save_corpus(test_set, out / "test.jsonl")
    save_lexicon(data.lexicon, out / "lexicon.tsv")
    save_graph(data.graph, out / "graph.txt")
    save_embeddings(data.tables["word"], out / "words.emb")
    save_embeddings(data.tables["entity"], out / "entities.emb")
    save_profiles(profiles_from_tweets(data.tweets), out / "profiles.tsv")
    print(f"wrote {len(data.tweets)} tweets ({len(train_set)}/{len(dev_set)}/{len(test_set)}) to {out}")


def cmd_embed_network(args) -> None:
    cfg = NetEmbedConfig(dim=args.dim, negative_samples=args.negatives, total_samples=args.samples,
                         initial_lr=args.lr, seed=args.seed, threads=args.threads)
    _print_config("embed-network", {"graph": args.graph, **vars(cfg)})
    graph = load_graph(args.graph)
    table = train_line2(graph, cfg)
    save_embeddings(table, args.out)
    print(f"embedded {len(table)} users in {cfg.dim} dims -> {args.out}")


def _train_settings(args) -> tuple[TrainConfig, dict]:
    raw = read_kv_config(args.config) if args.config else {}
    model_opts = {"hidden": 40, "init_seed": 0, "user_entity": True, "mention_entity": True}
    train_raw = {}
    for key, value in raw.items():
        if key in MODEL_KEYS:
            model_opts[key] = _parse_value(value, MODEL_KEYS[key])
        else:
            train_raw[key] = value
    # flags override the config file
    for key in ("seed", "max_epochs", "learning_rate", "patience"):
        if getattr(args, key) is not None:
            train_raw[key] = getattr(args, key)
    if args.hidden is not None:
        model_opts["hidden"] = args.hidden
    if args.seed is not None:
        model_opts["init_seed"] = args.seed
    if args.no_user_entity:
        model_opts["user_entity"] = False
    if args.no_mention_entity:
        model_opts["mention_entity"] = False
    return TrainConfig.from_dict(train_raw), model_opts


def _parse_value(value: str, kind):
    if kind is bool:
        if value.lower() in ("1", "true", "yes", "on"):
            return True
        if value.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"bad boolean {value!r}")
    return kind(value)


def cmd_train(args) -> None:
    config, model_opts = _train_settings(args)
    _print_config("train", {**vars(config), **model_opts})
    lexicon = load_lexicon(args.lexicon)
    train_set = load_corpus(args.corpus)
    dev_set = load_corpus(args.dev)
    if {t.id for t in train_set} & {t.id for t in dev_set}:
        raise CorpusError("train and dev corpora share tweet ids")
    model = Model.init(
        load_embeddings(args.user_emb, "user"),
        load_embeddings(args.word_emb, "word"),
        load_embeddings(args.entity_emb, "entity"),
        hidden=model_opts["hidden"], seed=model_opts["init_seed"],
        use_user_entity=model_opts["user_entity"], use_mention_entity=model_opts["mention_entity"],
    )
    log_fh = open(args.log, "w", encoding="utf-8") if args.log else sys.stdout
    try:
        print("epoch\tmean_loss\tprecision\trecall\tf1", file=log_fh)

        def log(epoch, loss, p, r, f1):
            print(f"{epoch}\t{loss:.6f}\t{p:.4f}\t{r:.4f}\t{f1:.4f}", file=log_fh, flush=True)

        state = train(model, train_set, dev_set, lexicon, config, log=log)
    finally:
        if args.log:
            log_fh.close()
    save_model(state.model, args.out)
    print(f"# best dev F1 {state.best_f1:.4f} at epoch {state.best_epoch}; model -> {args.out}", file=sys.stderr)


def cmd_link(args) -> None:
    _print_config("link", {"model": args.model, "corpus": args.corpus, "threads": args.threads})
    model = load_model(args.model)
    lexicon = load_lexicon(args.lexicon)
    tweets = load_corpus(args.corpus)

    def link_one(tw):
        cands = generate_candidates(tw, lexicon)
        labels, _ = decode(model, tw, cands)
        return tw.id, [(c.start, c.end, y) for c, y in zip(cands, labels) if y is not None]

    if args.threads > 1:
        with ThreadPoolExecutor(args.threads) as pool:
            records = list(pool.map(link_one, tweets))
    else:
        records = [link_one(tw) for tw in tweets]
    save_links(records, args.out)
    print(f"linked {len(records)} tweets -> {args.out}", file=sys.stderr)


def cmd_eval(args) -> None:
    _print_config("eval", {"gold": args.gold, "pred": args.pred})
    result = linking_result(load_corpus(args.gold), load_links(args.pred))
    p, r, f1 = result.prf1()
    n_pred, n_gold, n_correct = result.totals
    text = ("precision\trecall\tf1\tn_pred\tn_gold\tn_correct\n"
            f"{p:.6f}\t{r:.6f}\t{f1:.6f}\t{n_pred}\t{n_gold}\t{n_correct}\n")
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_compare(args) -> None:
    _print_config("compare", {"samples": args.samples, "seed": args.seed})
    gold = load_corpus(args.gold)
    a = linking_result(gold, load_links(args.pred_a))
    b = linking_result(gold, load_links(args.pred_b))
    cmp = bootstrap_compare(a, b, n_samples=args.samples, seed=args.seed)
    sys.stdout.write("t_statistic\tp_value\tmean_f1_a\tmean_f1_b\n"
                     f"{cmp.t_statistic:.6f}\t{cmp.p_value:.6g}\t{cmp.f1_a.mean():.6f}\t{cmp.f1_b.mean():.6f}\n")


def cmd_homophily(args) -> None:
    _print_config("homophily", {"graph": args.graph, "profiles": args.profiles,
                                "sample_pairs": args.sample_pairs, "seed": args.seed})
    graph = load_graph(args.graph)
    rep = homophily_report(graph, load_profiles(args.profiles), sample_pairs=args.sample_pairs, seed=args.seed)
    sys.stdout.write("sim_connected\tsim_disconnected\tratio\tn_connected\tn_disconnected\tsampled\n"
                     f"{rep.sim_connected:.6f}\t{rep.sim_disconnected:.6f}\t{rep.ratio:.4f}\t"
                     f"{rep.n_connected}\t{rep.n_disconnected}\t{int(rep.sampled)}\n")


# -- parser ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("-v", "--verbose", action="count", default=0)

    parser = _Parser(prog="sociallink", description="Structured entity linking with social user embeddings.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--users", type=int, default=40)
    p.add_argument("--entities", type=int, default=80)
    p.add_argument("--communities", type=int, default=2)
    p.add_argument("--tweets-per-user", type=int, default=6)
    p.add_argument("--ambiguity", type=float, default=0.5)
    p.add_argument("--dev-fraction", type=float, default=0.15)
    p.add_argument("--test-fraction", type=float, default=0.15)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("embed-network", parents=[common], help="train user embeddings on a social graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--lr", type=float, default=0.025)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_embed_network)

    p = sub.add_parser("train", parents=[common], help="train a linking model")
    for flag in ("--corpus", "--dev", "--lexicon", "--user-emb", "--word-emb", "--entity-emb", "--out"):
        p.add_argument(flag, required=True)
    p.add_argument("--config", help="flat key=value file (TrainConfig fields, hidden, init_seed, "
                                    "user_entity, mention_entity)")
    p.add_argument("--log", help="write the epoch TSV here instead of stdout")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--max-epochs", dest="max_epochs", type=int, default=None)
    p.add_argument("--learning-rate", dest="learning_rate", type=float, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--no-user-entity", action="store_true")
    p.add_argument("--no-mention-entity", action="store_true")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("link", parents=[common], help="decode entity links with a trained model")
    for flag in ("--model", "--corpus", "--lexicon", "--out"):
        p.add_argument(flag, required=True)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_link)

    p = sub.add_parser("eval", parents=[common], help="precision/recall/F1 of a linking output")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", parents=[common], help="bootstrap paired t-test between two systems")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("homophily", parents=[common], help="entity-driven similarity of connected vs other pairs")
    p.add_argument("--graph", required=True)
    p.add_argument("--profiles", required=True)
    p.add_argument("--sample-pairs", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_homophily)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
