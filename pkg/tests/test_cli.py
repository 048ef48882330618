import subprocess
import sys

import pytest

from sociallink.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def test_help_exits_zero(capsys):
    assert run("--help") == 0
    assert "synth" in capsys.readouterr().out


def test_unknown_subcommand_exits_one():
    assert run("bogus") == 1


def test_missing_required_flag_exits_one():
    assert run("eval", "--gold", "x.jsonl") == 1


def test_missing_file_exits_two(tmp_path):
    assert run("homophily", "--graph", tmp_path / "nope.txt", "--profiles", tmp_path / "nope.tsv") == 2


def pipeline(root, no_user=False):
    data = root / "data"
    assert run("synth", "--out-dir", data, "--seed", 2, "--users", 16, "--entities", 30,
               "--tweets-per-user", 4) == 0
    assert run("embed-network", "--graph", data / "graph.txt", "--dim", 8, "--samples", 20000,
               "--out", root / "users.emb") == 0
    train = ["train", "--corpus", data / "train.jsonl", "--dev", data / "dev.jsonl",
             "--lexicon", data / "lexicon.tsv", "--user-emb", root / "users.emb",
             "--word-emb", data / "words.emb", "--entity-emb", data / "entities.emb",
             "--out", root / "model.txt", "--log", root / "train.log", "--max-epochs", 5, "--hidden", 8]
    if no_user:
        train.append("--no-user-entity")
    assert run(*train) == 0
    assert run("link", "--model", root / "model.txt", "--lexicon", data / "lexicon.tsv",
               "--corpus", data / "test.jsonl", "--out", root / "links.jsonl") == 0
    assert run("eval", "--gold", data / "test.jsonl", "--pred", root / "links.jsonl",
               "--out", root / "eval.tsv") == 0


def test_full_pipeline_is_deterministic(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    pipeline(a)
    pipeline(b)
    assert (a / "model.txt").read_bytes() == (b / "model.txt").read_bytes()
    assert (a / "eval.tsv").read_bytes() == (b / "eval.tsv").read_bytes()
    header, row = (a / "eval.tsv").read_text().splitlines()
    assert header.split("\t")[:3] == ["precision", "recall", "f1"]
    assert 0.0 <= float(row.split("\t")[2]) <= 1.0
    assert len((a / "train.log").read_text().splitlines()) == 6


def test_compare_and_homophily(tmp_path, capsys):
    pipeline(tmp_path)
    data = tmp_path / "data"
    assert run("compare", "--gold", data / "test.jsonl", "--pred-a", tmp_path / "links.jsonl",
               "--pred-b", tmp_path / "links.jsonl") == 0
    out = capsys.readouterr().out.splitlines()
    assert out[-1].split("\t")[:2] == ["0.000000", "1"]
    assert run("homophily", "--graph", data / "graph.txt", "--profiles", data / "profiles.tsv") == 0
    assert float(capsys.readouterr().out.splitlines()[-1].split("\t")[2]) > 1.0


def test_train_config_file_and_flag_override(tmp_path, capsys):
    pipeline(tmp_path)
    data = tmp_path / "data"
    cfg = tmp_path / "train.cfg"
    cfg.write_text("max_epochs = 1\nlearning_rate = 0.02\nhidden = 4\n")
    assert run("train", "--corpus", data / "train.jsonl", "--dev", data / "dev.jsonl",
               "--lexicon", data / "lexicon.tsv", "--user-emb", tmp_path / "users.emb",
               "--word-emb", data / "words.emb", "--entity-emb", data / "entities.emb",
               "--out", tmp_path / "m2.txt", "--config", cfg, "--max-epochs", 2) == 0
    err = capsys.readouterr().err
    assert "max_epochs=2" in err and "learning_rate=0.02" in err and "hidden=4" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sociallink", "--help"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "embed-network" in proc.stdout
