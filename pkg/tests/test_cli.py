import json

import pytest

from crossnode.cli import run
from crossnode.proximity import load_ppmi


SMALL_TRAIN = [
    "--K", "2",
    "--emb-dim", "6",
    "--hidden", "8,6",
    "--disc-hidden", "8,6",
    "--batch-size", "20",
    "--epochs", "2",
    "--mu0", "0.05",
    "--seed", "3",
]


@pytest.fixture()
def pair_dirs(tmp_path):
    out = tmp_path / "pair"
    code = run(
        [
            "synth", "--out", str(out),
            "--nodes", "40", "--classes", "3", "--attrs", "18",
            "--p-intra", "0.25", "--p-inter", "0.03",
            "--shift", "0.3", "--seed", "1",
        ]
    )
    assert code == 0
    return out / "source", out / "target"


def test_synth_writes_config_echo(pair_dirs, tmp_path):
    cfg = json.loads((tmp_path / "pair" / "config.json").read_text())
    assert cfg["command"] == "synth"
    assert cfg["seed"] == 1
    assert (tmp_path / "pair" / "source" / "meta.json").is_file()


def test_train_eval_roundtrip(pair_dirs, tmp_path, capsys):
    src, tgt = pair_dirs
    run_dir = tmp_path / "run"
    code = run(
        ["train", "--source", str(src), "--target", str(tgt), "--out", str(run_dir)]
        + SMALL_TRAIN
    )
    assert code == 0
    assert (run_dir / "checkpoint.json").is_file()
    assert (run_dir / "train_log.jsonl").is_file()
    assert (run_dir / "config.json").is_file()
    log_rows = [
        json.loads(line) for line in (run_dir / "train_log.jsonl").read_text().splitlines()
    ]
    assert {"iter", "lr", "lambda", "loss_y", "loss_f", "loss_d"} <= set(log_rows[0])

    eval_dir = tmp_path / "eval"
    code = run(
        [
            "eval", "--checkpoint", str(run_dir / "checkpoint.json"),
            "--target", str(tgt), "--out", str(eval_dir),
            "--dump-predictions",
        ]
    )
    assert code == 0
    metrics = json.loads((eval_dir / "metrics.json").read_text())
    assert 0.0 <= metrics["micro_f1"] <= 1.0
    assert metrics["config"]["seed"] == 3
    preds = (eval_dir / "predictions.tsv").read_text().splitlines()
    assert preds[0].startswith("# config:")
    assert len(preds) == 1 + 40


def test_identical_invocations_are_byte_identical(pair_dirs, tmp_path):
    src, tgt = pair_dirs
    blobs = []
    for tag in ("a", "b"):
        run_dir = tmp_path / f"run_{tag}"
        eval_dir = tmp_path / f"eval_{tag}"
        assert run(
            ["train", "--source", str(src), "--target", str(tgt), "--out", str(run_dir)]
            + SMALL_TRAIN
        ) == 0
        assert run(
            [
                "eval", "--checkpoint", str(run_dir / "checkpoint.json"),
                "--target", str(tgt), "--out", str(eval_dir),
            ]
        ) == 0
        blobs.append((eval_dir / "metrics.json").read_bytes())
    assert blobs[0] == blobs[1]


def test_eval_missing_checkpoint_exits_one(pair_dirs, tmp_path, capsys):
    _, tgt = pair_dirs
    code = run(
        [
            "eval", "--checkpoint", str(tmp_path / "nope.json"),
            "--target", str(tgt), "--out", str(tmp_path / "eval"),
        ]
    )
    assert code == 1
    err = capsys.readouterr().err
    assert err.startswith("error:")
    assert "\n" not in err.strip()


def test_train_bad_dataset_exits_one(tmp_path, capsys):
    code = run(
        [
            "train", "--source", str(tmp_path / "missing"),
            "--target", str(tmp_path / "missing"),
            "--out", str(tmp_path / "run"),
        ]
    )
    assert code == 1


def test_ppmi_cache_roundtrip(pair_dirs, tmp_path):
    src, _ = pair_dirs
    out = tmp_path / "cache"
    assert run(["ppmi", "--net", str(src), "--K", "2", "--out", str(out)]) == 0
    prox = load_ppmi(out / "ppmi.tsv")
    assert prox.steps == 2
    assert prox.size == 40
    assert prox.matrix.nnz > 0


def test_stats_reports_homophily_and_k_sweep(pair_dirs, tmp_path, capsys):
    src, _ = pair_dirs
    out = tmp_path / "stats.json"
    assert run(["stats", "--net", str(src), "--K", "1,2", "--out", str(out)]) == 0
    payload = json.loads(out.read_text())
    assert 0.0 <= payload["homophily_ratio"] <= 1.0
    assert set(payload["per_k"]) == {"1", "2"}
    for stats in payload["per_k"].values():
        assert stats["connected_pairs"] >= stats["same_class_pairs"]
    # higher K never loses connected pairs
    assert (
        payload["per_k"]["2"]["connected_pairs"]
        >= payload["per_k"]["1"]["connected_pairs"]
    )


def test_export_embeddings_writes_both_networks(pair_dirs, tmp_path):
    src, tgt = pair_dirs
    run_dir = tmp_path / "run"
    assert run(
        ["train", "--source", str(src), "--target", str(tgt), "--out", str(run_dir)]
        + SMALL_TRAIN
    ) == 0
    out = tmp_path / "emb"
    assert run(
        [
            "export-embeddings", "--checkpoint", str(run_dir / "checkpoint.json"),
            "--source", str(src), "--target", str(tgt), "--out", str(out),
        ]
    ) == 0
    for role in ("source", "target"):
        lines = (out / f"{role}_embeddings.tsv").read_text().splitlines()
        assert lines[0].startswith("# config:")
        assert len(lines) == 1 + 40
        first = lines[1].split("\t")
        assert first[0] == "0"
        assert len(first) == 1 + 6  # node id + emb_dim columns


def test_export_embeddings_requires_a_network(pair_dirs, tmp_path):
    src, tgt = pair_dirs
    run_dir = tmp_path / "run"
    assert run(
        ["train", "--source", str(src), "--target", str(tgt), "--out", str(run_dir)]
        + SMALL_TRAIN
    ) == 0
    code = run(
        [
            "export-embeddings",
            "--checkpoint", str(run_dir / "checkpoint.json"),
            "--out", str(tmp_path / "emb"),
        ]
    )
    assert code == 1
