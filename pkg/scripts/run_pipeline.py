#!/usr/bin/env python3
"""Run synth -> embed-network -> train -> link -> eval through the CLI.

    python3 scripts/run_pipeline.py --out runs/demo --seed 0
"""

import argparse
import sys
from pathlib import Path

from sociallink.cli import main as cli


def run(*argv) -> None:
    argv = [str(a) for a in argv]
    print("$ sociallink " + " ".join(argv), file=sys.stderr)
    code = cli(argv)
    if code:
        sys.exit(code)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default="runs/pipeline")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--ambiguity", type=float, default=0.5)
    ap.add_argument("--user-dim", type=int, default=100)
    ap.add_argument("--max-epochs", type=int, default=50)
    args = ap.parse_args()

    root = Path(args.out)
    data = root / "data"
    run("synth", "--out-dir", data, "--seed", args.seed, "--ambiguity", args.ambiguity)
    run("embed-network", "--graph", data / "graph.txt", "--dim", args.user_dim, "--seed", args.seed,
        "--out", root / "users.emb")
    run("train", "--corpus", data / "train.jsonl", "--dev", data / "dev.jsonl", "--lexicon", data / "lexicon.tsv",
        "--user-emb", root / "users.emb", "--word-emb", data / "words.emb", "--entity-emb", data / "entities.emb",
        "--out", root / "model.txt", "--log", root / "train.log", "--seed", args.seed,
        "--max-epochs", args.max_epochs, "--patience", 10)
    run("link", "--model", root / "model.txt", "--lexicon", data / "lexicon.tsv", "--corpus", data / "test.jsonl",
        "--out", root / "links.jsonl")
    run("eval", "--gold", data / "test.jsonl", "--pred", root / "links.jsonl", "--out", root / "eval.tsv")


if __name__ == "__main__":
    main()
