import os
import subprocess

import pytest

from conftest import SCHEMA, make_corpus

CLI = os.environ.get("JASEN_CLI")

pytestmark = pytest.mark.skipif(not CLI, reason="JASEN_CLI not set")

TRAIN_FLAGS = [
    "--min-count", "2", "--dim", "12", "--embed-epochs", "3",
    "--pretrain-epochs", "2", "--selftrain-epochs", "2", "--seed", "5",
]


def run(*args, expect=0):
    env = dict(os.environ)
    env.pop("JASEN_SEED", None)
    proc = subprocess.run(
        [CLI, *args], capture_output=True, text=True, timeout=300, env=env
    )
    assert proc.returncode == expect, f"{args}: rc={proc.returncode}\n{proc.stderr}"
    return proc


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    ws = tmp_path_factory.mktemp("cli")
    (ws / "corpus.txt").write_text("\n".join(make_corpus()) + "\n")
    (ws / "topics.schema").write_text(SCHEMA)
    (ws / "test.tsv").write_text("\n".join(make_corpus(n=40, seed=1, labeled=True)) + "\n")
    run(
        "train", "--corpus", str(ws / "corpus.txt"), "--schema", str(ws / "topics.schema"),
        "--model-dir", str(ws / "model"), *TRAIN_FLAGS,
    )
    return ws


def test_build_vocab(workspace):
    proc = run(
        "build-vocab", "--corpus", str(workspace / "corpus.txt"), "--min-count", "2"
    )
    rows = [line.split("\t") for line in proc.stdout.splitlines()]
    assert all(len(r) == 2 for r in rows)
    counts = [int(c) for _, c in rows]
    assert counts == sorted(counts, reverse=True)
    assert "vocab_size=" in proc.stderr


def test_train_outputs(workspace):
    model = workspace / "model"
    for name in ("embedding.txt", "cnn_aspect.jcnn", "cnn_sentiment.jcnn",
                 "train.log", "config.txt"):
        assert (model / name).stat().st_size > 0
    log = (model / "train.log").read_text()
    assert "stage=embedding" in log and "aspect_fallback=" in log


def test_predict(workspace):
    inp = workspace / "reviews.txt"
    inp.write_text("the pizza was great\n\nawful rude staff\n")
    proc = run("predict", "--model-dir", str(workspace / "model"), "--input", str(inp))
    rows = [line.split("\t") for line in proc.stdout.splitlines()]
    assert len(rows) == 3
    for row in rows:
        assert len(row) == 5
        assert row[1] in ("good", "bad") and row[2] in ("food", "service")
        assert 0.0 <= float(row[3]) <= 1.0 and 0.0 <= float(row[4]) <= 1.0
    assert rows[1][0] == ""  # the empty line falls back with p=1.0
    assert float(rows[1][3]) == 1.0 and float(rows[1][4]) == 1.0


def test_inspect(workspace):
    proc = run(
        "inspect", "--model-dir", str(workspace / "model"), "--topic", "good|food", "-n", "7"
    )
    rows = [line.split("\t") for line in proc.stdout.splitlines()]
    assert len(rows) == 7
    scores = [float(s) for _, s in rows]
    assert scores == sorted(scores, reverse=True)

    bad = run(
        "inspect", "--model-dir", str(workspace / "model"), "--topic", "goood|food",
        expect=2,
    )
    assert "valid topics" in bad.stderr


def test_export_proj(workspace):
    proc = run("export-proj", "--model-dir", str(workspace / "model"))
    rows = [line.split("\t") for line in proc.stdout.splitlines()]
    assert len(rows) == 2 + 2 + 4
    assert rows[0][0] == "food"
    assert all(len(r) == 3 for r in rows)
    for _, x, y in rows:
        float(x), float(y)


def test_evaluate(workspace):
    proc = run(
        "evaluate", "--model-dir", str(workspace / "model"),
        "--test", str(workspace / "test.tsv"),
    )
    assert proc.stdout.startswith("head")
    assert "aspect_accuracy=" in proc.stdout
    assert "sentiment_macro_f1=" in proc.stdout


def test_train_determinism(workspace, tmp_path):
    other = tmp_path / "model2"
    run(
        "train", "--corpus", str(workspace / "corpus.txt"),
        "--schema", str(workspace / "topics.schema"), "--model-dir", str(other),
        *TRAIN_FLAGS,
    )
    for name in ("embedding.txt", "cnn_aspect.jcnn", "cnn_sentiment.jcnn"):
        assert (other / name).read_bytes() == (workspace / "model" / name).read_bytes()


def test_exit_codes(workspace, tmp_path):
    run("train", "--corpus", str(workspace / "corpus.txt"),
        "--schema", str(tmp_path / "missing.schema"), expect=2)
    run("frobnicate", expect=2)

    broken = tmp_path / "broken"
    broken.mkdir()
    (broken / "embedding.txt").write_text("nonsense v9\n")
    inp = tmp_path / "in.txt"
    inp.write_text("hello\n")
    run("predict", "--model-dir", str(broken), "--input", str(inp), expect=3)


def test_seed_env_override(workspace, tmp_path):
    env = dict(os.environ)
    env["JASEN_SEED"] = "99"
    proc = subprocess.run(
        [CLI, "train", "--corpus", str(workspace / "corpus.txt"),
         "--schema", str(workspace / "topics.schema"),
         "--model-dir", str(tmp_path / "seeded"), *TRAIN_FLAGS],
        capture_output=True, text=True, timeout=300, env=env,
    )
    assert proc.returncode == 0, proc.stderr
    assert "seed=99" in (tmp_path / "seeded" / "config.txt").read_text()
    assert (tmp_path / "seeded" / "embedding.txt").read_bytes() != (
        workspace / "model" / "embedding.txt"
    ).read_bytes()
