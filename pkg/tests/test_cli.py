import csv
import json
from pathlib import Path

import numpy as np
import pytest

from gcot.cli import main
from gcot.graphdata import write_dataset

from toygraphs import make_graph_collection, make_node_collection


@pytest.fixture(scope="module")
def dataset_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    write_dataset(make_node_collection(n=18, d=5, classes=3, seed=4), root / "toy")
    return root / "toy"


@pytest.fixture(scope="module")
def pretrained(dataset_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("pre")
    code = main([
        "pretrain", "--dataset", str(dataset_dir), "--out", str(out),
        "--epochs", "5", "--seed", "7", "--hidden-dim", "8", "--layers", "3",
    ])
    assert code == 0
    return out / "encoder.ckpt"


def _bench(dataset_dir, pretrained, out, *extra):
    return main([
        "bench", "--dataset", str(dataset_dir), "--checkpoint", str(pretrained),
        "--out", str(out), "--num-tasks", "2", "--num-seeds", "1",
        "--tune-epochs", "3", "--cond-hidden", "4", "--num-bias", "2",
        *extra,
    ])


def test_pretrain_is_byte_deterministic(dataset_dir, tmp_path):
    for sub in ("a", "b"):
        code = main([
            "pretrain", "--dataset", str(dataset_dir), "--out", str(tmp_path / sub),
            "--epochs", "5", "--seed", "7", "--hidden-dim", "8",
        ])
        assert code == 0
    assert (tmp_path / "a" / "encoder.ckpt").read_bytes() == (
        tmp_path / "b" / "encoder.ckpt"
    ).read_bytes()


def test_pretrain_seed_flag_changes_weights(dataset_dir, tmp_path):
    for sub, seed in (("a", "7"), ("b", "8")):
        code = main([
            "pretrain", "--dataset", str(dataset_dir), "--out", str(tmp_path / sub),
            "--epochs", "2", "--seed", seed, "--hidden-dim", "8",
        ])
        assert code == 0
    assert (tmp_path / "a" / "encoder.ckpt").read_bytes() != (
        tmp_path / "b" / "encoder.ckpt"
    ).read_bytes()


def test_pretrain_log_has_one_row_per_epoch(dataset_dir, tmp_path):
    code = main([
        "pretrain", "--dataset", str(dataset_dir), "--out", str(tmp_path),
        "--epochs", "4", "--hidden-dim", "8",
    ])
    assert code == 0
    rows = (tmp_path / "pretrain_log.csv").read_text().splitlines()
    assert rows[0] == "epoch,loss"
    assert len(rows) == 1 + 4


def test_missing_meta_is_data_error(tmp_path, capsys):
    (tmp_path / "broken").mkdir()
    code = main(["pretrain", "--dataset", str(tmp_path / "broken"), "--out", str(tmp_path)])
    assert code == 3
    assert "meta.json" in capsys.readouterr().err


def test_bench_counts_and_summary(dataset_dir, pretrained, tmp_path):
    assert _bench(dataset_dir, pretrained, tmp_path, "--shots", "1") == 0
    with open(tmp_path / "results.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 2  # 2 tasks x 1 seed
    assert {r["variant"] for r in rows} == {"full"}
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary[0]["num_tasks"] == 2
    assert 0.0 <= summary[0]["mean"] <= 1.0


def test_bench_variant_no_cot_reported(dataset_dir, pretrained, tmp_path):
    assert _bench(dataset_dir, pretrained, tmp_path, "--variant", "no_cot") == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary[0]["variant"] == "no_cot"
    assert summary[0]["K"] == 1


def test_bench_is_deterministic_across_jobs(dataset_dir, pretrained, tmp_path):
    assert _bench(dataset_dir, pretrained, tmp_path / "j1", "--jobs", "1") == 0
    assert _bench(dataset_dir, pretrained, tmp_path / "j2", "--jobs", "2") == 0
    assert (tmp_path / "j1" / "results.csv").read_bytes() == (
        tmp_path / "j2" / "results.csv"
    ).read_bytes()


def test_bench_shots_range_one_summary_row_per_value(dataset_dir, pretrained, tmp_path):
    code = main([
        "bench", "--dataset", str(dataset_dir), "--checkpoint", str(pretrained),
        "--out", str(tmp_path), "--shots", "1..3", "--num-tasks", "1",
        "--num-seeds", "1", "--tune-epochs", "2",
    ])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert [s["shots"] for s in summary] == [1, 2, 3]


def test_checkpoint_dataset_mismatch_is_dimension_error(pretrained, tmp_path, capsys):
    other = tmp_path / "other"
    write_dataset(make_node_collection(n=12, d=9, classes=3, seed=1), other)
    code = main([
        "bench", "--dataset", str(other), "--checkpoint", str(pretrained),
        "--out", str(tmp_path), "--shots", "1",
    ])
    assert code == 4
    assert "dim" in capsys.readouterr().err


def test_ablate_reports_all_variants(dataset_dir, pretrained, tmp_path):
    code = main([
        "ablate", "--dataset", str(dataset_dir), "--checkpoint", str(pretrained),
        "--out", str(tmp_path), "--shots", "1", "--num-tasks", "1",
        "--num-seeds", "1", "--tune-epochs", "2", "--cond-hidden", "4",
    ])
    assert code == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert [s["variant"] for s in summary] == [
        "full", "no_cot", "layer_only_1", "layer_only_2", "layer_only_3"
    ]


def test_sweep_steps_has_row_per_value_with_wall_time(dataset_dir, pretrained, tmp_path):
    code = main([
        "sweep", "--dataset", str(dataset_dir), "--checkpoint", str(pretrained),
        "--out", str(tmp_path), "--axis", "steps", "--values", "1..4",
        "--num-tasks", "1", "--num-seeds", "1", "--tune-epochs", "2",
    ])
    assert code == 0
    with open(tmp_path / "sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert [int(r["value"]) for r in rows] == [1, 2, 3, 4]
    assert all(float(r["wall_time_s"]) > 0 for r in rows)
    assert len({r["base_seed"] for r in rows}) == 1  # paired comparison


def test_sweep_cond_hidden_values(dataset_dir, pretrained, tmp_path):
    code = main([
        "sweep", "--dataset", str(dataset_dir), "--checkpoint", str(pretrained),
        "--out", str(tmp_path), "--axis", "cond_hidden", "--values", "2,4",
        "--num-tasks", "1", "--num-seeds", "1", "--tune-epochs", "2",
    ])
    assert code == 0
    with open(tmp_path / "sweep.csv") as f:
        rows = list(csv.DictReader(f))
    assert [int(r["value"]) for r in rows] == [2, 4]
    assert [int(r["s"]) for r in rows] == [2, 4]


def test_sweep_invalid_axis_is_config_error(dataset_dir, pretrained, tmp_path, capsys):
    code = main([
        "sweep", "--dataset", str(dataset_dir), "--checkpoint", str(pretrained),
        "--out", str(tmp_path), "--axis", "bogus", "--values", "1,2",
    ])
    assert code == 2
    assert "axis" in capsys.readouterr().err


def test_export_embeddings_files(dataset_dir, pretrained, tmp_path):
    state_path = tmp_path / "prompt.ckpt"
    assert _bench(dataset_dir, pretrained, tmp_path, "--shots", "1",
                  "--steps", "2", "--save-state", str(state_path)) == 0
    for sub in ("e1", "e2"):
        code = main([
            "export-embeddings", "--dataset", str(dataset_dir),
            "--checkpoint", str(pretrained), "--state", str(state_path),
            "--out", str(tmp_path / sub),
        ])
        assert code == 0
    out = tmp_path / "e1"
    assert (out / "thoughts_step_1.csv").is_file()
    assert not (out / "thoughts_step_2.csv").exists()  # K=2 -> steps 1..K-1
    with open(out / "answer_embeddings.csv") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 18  # one row per node
    assert (out / "answer_embeddings.csv").read_bytes() == (
        tmp_path / "e2" / "answer_embeddings.csv"
    ).read_bytes()


def test_export_without_state_is_config_error(dataset_dir, pretrained, tmp_path):
    code = main([
        "export-embeddings", "--dataset", str(dataset_dir),
        "--checkpoint", str(pretrained), "--out", str(tmp_path),
    ])
    assert code == 2


def test_print_config_and_precedence(dataset_dir, tmp_path, capsys, monkeypatch):
    cfg = {"tune_epochs": 42, "num_tasks": 9}
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps(cfg))
    monkeypatch.setenv("GCOT_OUT_DIR", str(tmp_path / "envout"))
    code = main([
        "bench", "--dataset", str(dataset_dir), "--config", str(cfg_path),
        "--num-tasks", "3", "--print-config",
    ])
    assert code == 0
    resolved = json.loads(capsys.readouterr().out)
    assert resolved["tune_epochs"] == 42      # file overrides default (100)
    assert resolved["num_tasks"] == 3         # flag overrides file (9)
    assert resolved["num_seeds"] == 5         # default
    assert resolved["out_dir"] == str(tmp_path / "envout")
    assert resolved["steps"] == 2             # node-task default


def test_unknown_config_key_is_config_error(dataset_dir, tmp_path, capsys):
    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(json.dumps({"nope": 1}))
    code = main(["bench", "--dataset", str(dataset_dir), "--config", str(cfg_path)])
    assert code == 2
    assert "nope" in capsys.readouterr().err


def test_resolved_config_written_next_to_outputs(dataset_dir, pretrained, tmp_path):
    assert _bench(dataset_dir, pretrained, tmp_path, "--shots", "1") == 0
    resolved = json.loads((tmp_path / "bench_config.json").read_text())
    assert resolved["dataset_path"] == str(dataset_dir)
    assert resolved["num_tasks"] == 2


def test_graph_task_defaults(dataset_dir, tmp_path, capsys):
    code = main([
        "bench", "--dataset", str(dataset_dir), "--task", "graph", "--print-config",
    ])
    assert code == 0
    resolved = json.loads(capsys.readouterr().out)
    assert resolved["steps"] == 3
    assert resolved["cond_hidden"] == 8
