"""End-to-end command-line pipeline in temporary directories."""

import csv
import json

import pytest

from risknet.cli import main, read_tokens, write_tokens


def run(*argv):
    return main([str(a) for a in argv])


def read_json(path):
    return json.loads(path.read_text(encoding="utf-8"))


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """synth -> preprocess -> train once; individual tests inspect the pieces."""
    root = tmp_path_factory.mktemp("pipe")
    synth_dir = root / "synth"
    prep_dir = root / "prep"
    train_dir = root / "train"
    assert run("synth", "--posts", 220, "--seed", 7, "--out", synth_dir) == 0
    assert run("preprocess", "--dataset", synth_dir / "posts.csv", "--out", prep_dir) == 0
    assert run(
        "train", "--dataset", prep_dir / "tokens.jsonl", "--out", train_dir,
        "--epochs", 2, "--embed-dim", 12, "--lstm-units", 6, "--max-len", 24,
        "--seed", 7, "--dropout", 0.0,
    ) == 0
    return root


# ------------------------------------------------------------------- synth


def test_synth_writes_corpus_and_run_json(tmp_path):
    out = tmp_path / "s"
    assert run("synth", "--posts", 25, "--seed", 3, "--out", out) == 0
    assert (out / "posts.csv").exists()
    doc = read_json(out / "run.json")
    assert doc["command"] == "synth"
    assert doc["params"]["posts"] == 25 and doc["params"]["seed"] == 3


def test_synth_deterministic_across_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("synth", "--posts", 40, "--seed", 9, "--out", a) == 0
    assert run("synth", "--posts", 40, "--seed", 9, "--out", b) == 0
    assert (a / "posts.csv").read_bytes() == (b / "posts.csv").read_bytes()


def test_synth_replay_from_config(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert run("synth", "--posts", 15, "--seed", 4, "--out", a) == 0
    assert run("synth", "--config", a / "run.json", "--out", b) == 0
    assert (a / "posts.csv").read_bytes() == (b / "posts.csv").read_bytes()


def test_config_from_other_command_rejected(tmp_path):
    a = tmp_path / "a"
    assert run("synth", "--posts", 5, "--seed", 1, "--out", a) == 0
    code = run("preprocess", "--dataset", a / "posts.csv", "--out", tmp_path / "p",
               "--config", a / "run.json")
    assert code == 1


# -------------------------------------------------------------- preprocess


def test_preprocess_outputs(pipeline):
    prep = pipeline / "prep"
    rows = read_tokens(prep / "tokens.jsonl")
    assert all(set(r) == {"post_id", "user_id", "label", "tokens"} for r in rows)
    assert all(r["label"] in (0, 1, 2, 3) for r in rows)
    assert all(r["tokens"] for r in rows)
    doc = read_json(prep / "run.json")
    assert doc["command"] == "preprocess"
    stats = doc["stats"]
    assert stats["posts_read"] == 220
    assert stats["dropped_empty"] >= 0 and stats["dropped_duplicate"] >= 0
    assert len(rows) == 220 - stats["dropped_empty"] - stats["dropped_duplicate"]


def test_preprocess_does_not_mutate_input(tmp_path):
    out1 = tmp_path / "s"
    assert run("synth", "--posts", 10, "--seed", 2, "--out", out1) == 0
    before = (out1 / "posts.csv").read_bytes()
    assert run("preprocess", "--dataset", out1 / "posts.csv", "--out", tmp_path / "p") == 0
    assert (out1 / "posts.csv").read_bytes() == before


def test_preprocess_missing_dataset_is_validation_error(tmp_path):
    assert run("preprocess", "--dataset", tmp_path / "nope.csv", "--out", tmp_path / "o") == 1


# ----------------------------------------------------- annotate and ngrams


def test_annotate_outputs(pipeline, tmp_path):
    out = tmp_path / "ann"
    code = run("annotate", "--dataset", pipeline / "prep" / "tokens.jsonl",
               "--out", out, "--top-k", 80, "--fractions", "0.25,0.25,0.25,0.25")
    assert code == 0
    labeled = read_tokens(out / "labeled.jsonl")
    assert all(r["label"] in (0, 1, 2, 3) for r in labeled)
    with (out / "weights.csv").open() as fh:
        header = fh.readline().strip()
    assert header == "ngram,weight"
    doc = read_json(out / "run.json")
    t1, t2, t3 = doc["params"]["thresholds"]
    assert t1 < t2 < t3


def test_report_ngrams_csv(pipeline, tmp_path):
    out = tmp_path / "ng"
    assert run("report-ngrams", "--dataset", pipeline / "prep" / "tokens.jsonl",
               "--out", out, "--top", 10) == 0
    with (out / "ngrams.csv").open() as fh:
        rows = list(csv.DictReader(fh))
    assert {r["class"] for r in rows} == {"0", "1", "2", "3"}
    assert {r["n"] for r in rows} == {"1", "2", "3"}
    for key, group in _group_by(rows, lambda r: (r["class"], r["n"])).items():
        ranks = [int(r["rank"]) for r in group]
        assert ranks == list(range(1, len(ranks) + 1)), key
        counts = [int(r["count"]) for r in group]
        assert counts == sorted(counts, reverse=True), key


def _group_by(rows, key):
    out = {}
    for r in rows:
        out.setdefault(key(r), []).append(r)
    return out


# ------------------------------------------------------------------- train


def test_train_outputs(pipeline):
    tdir = pipeline / "train"
    for name in ("model.rkn", "history.csv", "vocab.csv", "test.jsonl", "run.json"):
        assert (tdir / name).exists(), name
    lines = (tdir / "history.csv").read_text().splitlines()
    assert lines[0] == "epoch,loss,accuracy"
    assert len(lines) == 3  # 2 epochs
    doc = read_json(tdir / "run.json")
    assert doc["command"] == "train"
    assert doc["params"]["max_len"] == 24


def test_train_then_evaluate(pipeline, tmp_path):
    out = tmp_path / "eval"
    code = run("evaluate", "--model", pipeline / "train" / "model.rkn",
               "--dataset", pipeline / "train" / "test.jsonl", "--out", out)
    assert code == 0
    m = read_json(out / "metrics.json")
    assert len(m["confusion"]) == 4 and all(len(r) == 4 for r in m["confusion"])
    assert 0.0 <= m["accuracy"] <= 1.0
    n_test = len(read_tokens(pipeline / "train" / "test.jsonl"))
    assert sum(map(sum, m["confusion"])) == n_test


def test_predict_per_post_and_user_summary(pipeline, tmp_path):
    # fixture: one user with 3 posts whose labels the summary must max over
    tokens_path = tmp_path / "tokens.jsonl"
    rows = read_tokens(pipeline / "prep" / "tokens.jsonl")[:6]
    for i, r in enumerate(rows):
        r["user_id"] = "u_triple" if i < 3 else f"u_single{i}"
        r["label"] = None
    write_tokens(rows, tokens_path)
    out = tmp_path / "pred"
    assert run("predict", "--model", pipeline / "train" / "model.rkn",
               "--dataset", tokens_path, "--out", out) == 0
    with (out / "predictions.csv").open() as fh:
        preds = list(csv.DictReader(fh))
    assert len(preds) == 6
    triple = [int(r["label"]) for r in preds if r["user_id"] == "u_triple"]
    assert len(triple) == 3
    with (out / "users.csv").open() as fh:
        users = {r["user_id"]: int(r["label"]) for r in csv.DictReader(fh)}
    assert len(users) == 4
    assert users["u_triple"] == max(triple)  # max-risk aggregation
    assert list(users) == sorted(users)


def test_evaluate_requires_labels(pipeline, tmp_path):
    rows = read_tokens(pipeline / "prep" / "tokens.jsonl")[:4]
    for r in rows:
        r["label"] = None
    unlabeled = tmp_path / "u.jsonl"
    write_tokens(rows, unlabeled)
    assert run("evaluate", "--model", pipeline / "train" / "model.rkn",
               "--dataset", unlabeled, "--out", tmp_path / "o") == 1


# ------------------------------------------------------------------ ablate


def test_ablate_writes_five_rows(pipeline, tmp_path):
    out = tmp_path / "abl"
    code = run("ablate", "--dataset", pipeline / "prep" / "tokens.jsonl", "--out", out,
               "--epochs", 1, "--embed-dim", 8, "--lstm-units", 4,
               "--max-len", 16, "--seed", 7, "--dropout", 0.0)
    assert code == 0
    lines = (out / "ablation.csv").read_text().splitlines()
    assert lines[0] == "model,accuracy,precision,recall,f1"
    assert [l.split(",")[0] for l in lines[1:6]] == [
        "svm", "cnn", "lstm", "lstm_cnn", "lstm_attention_cnn"]
    assert lines[6].startswith("# reference lstm_attention_cnn")


# -------------------------------------------------------------- exit codes


def test_unknown_subcommand_exits_1():
    assert run("explode") == 1


def test_unknown_flag_exits_1(tmp_path):
    assert run("synth", "--posts", 5, "--out", tmp_path, "--warp", 9) == 1


def test_missing_required_flag_exits_1():
    assert run("synth", "--posts", 5) == 1


def test_validation_error_exits_1(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"post_id": "p", "user_id": "u"}\n', encoding="utf-8")
    assert run("annotate", "--dataset", bad, "--out", tmp_path / "o") == 1


def test_empty_token_file_exits_1(tmp_path):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("", encoding="utf-8")
    assert run("annotate", "--dataset", empty, "--out", tmp_path / "o") == 1


def test_help_exits_0():
    assert run("--help") == 0


def test_train_flags_override_config(pipeline, tmp_path):
    # replay the training run but override the seed; models must differ
    out = tmp_path / "t2"
    code = run("train", "--dataset", pipeline / "prep" / "tokens.jsonl", "--out", out,
               "--config", pipeline / "train" / "run.json", "--seed", 8)
    assert code == 0
    doc = read_json(out / "run.json")
    assert doc["params"]["seed"] == 8
    assert doc["params"]["epochs"] == 2  # inherited from the config file
    a = (pipeline / "train" / "model.rkn").read_bytes()
    b = (out / "model.rkn").read_bytes()
    assert a != b


def test_train_replay_is_byte_identical(pipeline, tmp_path):
    out = tmp_path / "replay"
    code = run("train", "--dataset", pipeline / "prep" / "tokens.jsonl", "--out", out,
               "--config", pipeline / "train" / "run.json")
    assert code == 0
    for name in ("model.rkn", "history.csv", "vocab.csv", "test.jsonl"):
        assert (out / name).read_bytes() == (pipeline / "train" / name).read_bytes(), name
