"""Command-line surface: pretrain, bench, ablate, sweep, export-embeddings.

Configuration resolution is strictly flag > config file > built-in
default.  Every run writes its fully resolved configuration next to its
outputs so any result can be reproduced bit-identically.  Exit codes:
0 success, 2 config error, 3 data error, 4 numeric/dimension error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from dataclasses import replace
from pathlib import Path

from .errors import (
    ConfigError,
    DataError,
    DimensionError,
    GcotError,
    NumericError,
)
from .cot import cot_forward, load_prompt_state, save_prompt_state
from .encoder import EncoderConfig, load_checkpoint
from .fewshot import (
    AblationVariant,
    BenchConfig,
    CotConfig,
    EmbedContext,
    TuneConfig,
    repeat_seed,
    run_ablation,
    run_benchmark,
    sample_task,
    task_rng,
    tune,
    write_results_csv,
    write_summary_json,
)
from .graphdata import load_dataset
from .pretrain import PretrainConfig, pretrain_run

# task-dependent defaults: steps and cond_hidden follow the task kind when
# not set explicitly (node: K=2, s=32; graph: K=3, s=8)
DEFAULTS: dict = {
    "dataset_path": None,
    "task": "node",
    "shots": 1,
    "steps": None,
    "cond_hidden": None,
    "std_kind": "gpf_plus",
    "num_bias": 5,
    "chain_features": False,
    "tau_pretrain": 0.5,
    "tau_downstream": 0.5,
    "pretrain_epochs": 200,
    "pretrain_lr": 1e-3,
    "pretrain_negatives": 5,
    "pretrain_anchors": "all",
    "tune_epochs": 100,
    "tune_lr": 1e-2,
    "num_tasks": 100,
    "num_seeds": 5,
    "base_seed": None,  # inherits seed unless set explicitly
    "num_layers": 3,
    "hidden_dim": 256,
    "query_cap": 1000,
    "variant": "full",
    "checkpoint": None,
    "state": None,
    "save_state": None,
    "out_dir": None,
    "seed": 0,
    "jobs": 1,
}

_TASK_DEFAULTS = {"node": {"steps": 2, "cond_hidden": 32},
                  "graph": {"steps": 3, "cond_hidden": 8}}


def resolve_config(flags: dict) -> dict:
    """Merge defaults, config file and flags; fill task-dependent defaults."""
    config = dict(DEFAULTS)
    path = flags.get("config")
    if path:
        try:
            loaded = json.loads(Path(path).read_text())
        except FileNotFoundError as err:
            raise ConfigError(f"config file not found: {path}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file is not valid JSON: {err}") from err
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a single JSON object")
        for key, value in loaded.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            config[key] = value
    for key, value in flags.items():
        if key in ("config", "print_config", "command", "axis", "values"):
            continue
        if value is not None:
            config[key] = value
    if config["out_dir"] is None:
        config["out_dir"] = os.environ.get("GCOT_OUT_DIR", "runs")
    if config["base_seed"] is None:
        config["base_seed"] = config["seed"]
    config["base_seed"] = int(config["base_seed"])
    if config["task"] not in ("node", "graph"):
        raise ConfigError(f"task must be 'node' or 'graph', got {config['task']!r}")
    for key in ("steps", "cond_hidden"):
        if config[key] is None:
            config[key] = _TASK_DEFAULTS[config["task"]][key]
    for key in ("tau_pretrain", "tau_downstream"):
        if config[key] <= 0:
            raise ConfigError(f"{key} must be > 0")
    for key in ("steps", "cond_hidden", "num_bias", "num_tasks",
                "num_seeds", "num_layers", "hidden_dim", "jobs",
                "pretrain_epochs"):
        if int(config[key]) < 1:
            raise ConfigError(f"{key} must be >= 1")
        config[key] = int(config[key])
    if int(config["tune_epochs"]) < 0:
        raise ConfigError("tune_epochs must be >= 0")
    try:
        if min(_parse_shots(config["shots"])) < 1:
            raise ConfigError("shots must be >= 1")
    except ValueError as err:
        raise ConfigError(f"cannot parse shots {config['shots']!r}") from err
    if config["dataset_path"] is None:
        raise ConfigError("dataset_path is required (flag --dataset or config file)")
    return config


def _write_resolved(config: dict, out: Path, command: str) -> None:
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{command}_config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n"
    )


def _load_inputs(config: dict):
    collection = load_dataset(config["dataset_path"])
    ckpt = config["checkpoint"] or str(Path(config["out_dir"]) / "encoder.ckpt")
    weights = load_checkpoint(ckpt)
    if weights.input_dim != collection.meta.feature_dim:
        raise DimensionError(
            f"checkpoint input dim {weights.input_dim} does not match dataset "
            f"feature dim {collection.meta.feature_dim}"
        )
    return collection, weights


def _bench_pieces(config: dict):
    tune_config = TuneConfig(
        epochs=config["tune_epochs"],
        learning_rate=config["tune_lr"],
        tau=config["tau_downstream"],
    )
    cot_config = CotConfig(
        steps=config["steps"],
        cond_hidden=config["cond_hidden"],
        std_kind=config["std_kind"],
        num_bias=config["num_bias"],
        chain_features=config["chain_features"],
    )
    bench = BenchConfig(
        num_tasks=config["num_tasks"],
        num_seeds=config["num_seeds"],
        base_seed=config["base_seed"],
        query_cap=config["query_cap"],
        jobs=config["jobs"],
    )
    return tune_config, cot_config, bench


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_pretrain(config: dict) -> int:
    out = Path(config["out_dir"])
    _write_resolved(config, out, "pretrain")
    collection = load_dataset(config["dataset_path"])
    encoder_config = EncoderConfig(
        num_layers=config["num_layers"],
        input_dim=collection.meta.feature_dim,
        hidden_dim=config["hidden_dim"],
    )
    pre = PretrainConfig(
        epochs=config["pretrain_epochs"],
        learning_rate=config["pretrain_lr"],
        tau=config["tau_pretrain"],
        negatives_per_anchor=config["pretrain_negatives"],
        anchors_per_epoch=config["pretrain_anchors"],
        seed=config["seed"],
    )
    _, losses = pretrain_run(
        collection,
        encoder_config,
        pre,
        checkpoint_path=out / "encoder.ckpt",
        log_path=out / "pretrain_log.csv",
    )
    print(f"pretrain: {len(losses)} epochs, "
          f"loss {losses[0]:.6g} -> {losses[-1]:.6g}, wrote {out / 'encoder.ckpt'}")
    return 0


def _parse_shots(value) -> list[int]:
    text = str(value)
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(v) for v in text.split(",")]


def cmd_bench(config: dict) -> int:
    out = Path(config["out_dir"])
    _write_resolved(config, out, "bench")
    collection, weights = _load_inputs(config)
    tune_config, cot_config, bench = _bench_pieces(config)
    shots = _parse_shots(config["shots"])
    records = []
    for m in shots:
        records.append(
            run_benchmark(
                collection, config["task"], m, weights,
                tune_config, cot_config, bench, config["variant"],
            )
        )
    write_results_csv(records, out / "results.csv")
    write_summary_json(records, out / "summary.json")
    if config["save_state"]:
        variant = AblationVariant.parse(config["variant"])
        task = sample_task(
            collection, config["task"], shots[0], task_rng(config["base_seed"], 0)
        )
        seed = repeat_seed(config["base_seed"], 0, 0)
        state, _ = tune(
            task, weights, collection,
            replace(tune_config, seed=seed), variant.apply(cot_config),
        )
        save_prompt_state(state, config["save_state"])
    for rec in records:
        print(f"bench: {rec.dataset} {rec.task_kind} {rec.shots}-shot "
              f"variant={rec.variant} mean={100 * rec.mean:.2f} std={100 * rec.std:.2f}")
    return 0


def cmd_ablate(config: dict) -> int:
    out = Path(config["out_dir"])
    config["shots"] = int(config["shots"])
    _write_resolved(config, out, "ablate")
    collection, weights = _load_inputs(config)
    tune_config, cot_config, bench = _bench_pieces(config)
    records = run_ablation(
        collection, config["task"], config["shots"], weights,
        tune_config, cot_config, bench,
    )
    write_results_csv(records, out / "results.csv")
    write_summary_json(records, out / "summary.json")
    for rec in records:
        print(f"ablate: {rec.variant} mean={100 * rec.mean:.2f} std={100 * rec.std:.2f}")
    return 0


def cmd_sweep(config: dict, axis: str, values: str) -> int:
    if axis not in ("steps", "cond_hidden", "shots"):
        raise ConfigError(f"invalid sweep axis {axis!r}")
    try:
        parsed = _parse_shots(values)
    except ValueError as err:
        raise ConfigError(f"cannot parse sweep values {values!r}") from err
    if not parsed:
        raise ConfigError("sweep needs at least one value")
    out = Path(config["out_dir"])
    _write_resolved(config | {"sweep_axis": axis, "sweep_values": parsed}, out, "sweep")
    collection, weights = _load_inputs(config)
    rows = []
    for value in parsed:
        cfg = dict(config)
        cfg[axis] = value
        cfg["shots"] = int(cfg["shots"])
        tune_config, cot_config, bench = _bench_pieces(cfg)
        started = time.perf_counter()
        rec = run_benchmark(
            collection, cfg["task"], cfg["shots"], weights,
            tune_config, cot_config, bench, cfg["variant"],
        )
        wall = time.perf_counter() - started
        rows.append((axis, value, rec, wall))
    path = out / "sweep.csv"
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["axis", "value", "dataset", "task", "shots", "K", "s", "variant",
             "base_seed", "mean", "std", "wall_time_s"]
        )
        for axis_name, value, rec, wall in rows:
            writer.writerow(
                [axis_name, value, rec.dataset, rec.task_kind, rec.shots, rec.steps,
                 rec.cond_hidden, rec.variant, rec.base_seed,
                 f"{rec.mean:.17g}", f"{rec.std:.17g}", f"{wall:.6f}"]
            )
    for axis_name, value, rec, wall in rows:
        print(f"sweep: {axis_name}={value} mean={100 * rec.mean:.2f} wall={wall:.2f}s")
    return 0


def cmd_export_embeddings(config: dict) -> int:
    out = Path(config["out_dir"])
    _write_resolved(config, out, "export")
    collection, weights = _load_inputs(config)
    if not config["state"]:
        raise ConfigError("export-embeddings requires --state (prompt checkpoint)")
    state = load_prompt_state(config["state"])
    ctx = EmbedContext(collection, config["task"])
    h_tilde, thoughts = cot_forward(ctx.x, ctx.adj, weights, state)
    labels = []
    for g in collection.graphs:
        if g.node_labels is not None:
            labels.extend(int(l) for l in g.node_labels)
        else:
            labels.extend([-1] * g.num_nodes)

    def write_matrix(path: Path, header: list[str], prefix, matrix):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(header)
            for i, row in enumerate(matrix.data):
                writer.writerow(list(prefix(i)) + [f"{v:.17g}" for v in row])

    dim = h_tilde.cols
    write_matrix(
        out / "answer_embeddings.csv",
        ["node_id", "label"] + [f"h{j}" for j in range(dim)],
        lambda i: (i, labels[i]),
        h_tilde,
    )
    for k, t in enumerate(thoughts, start=1):
        write_matrix(
            out / f"thoughts_step_{k}.csv",
            ["step", "node_id"] + [f"h{j}" for j in range(t.cols)],
            lambda i, k=k: (k, i),
            t,
        )
    print(f"export: wrote answer embeddings and {len(thoughts)} thought file(s) to {out}")
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gcot",
        description="Chain-of-thought prompt tuning on frozen graph encoders",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--dataset", dest="dataset_path", help="canonical dataset directory")
        p.add_argument("--out", dest="out_dir", help="output directory (env GCOT_OUT_DIR)")
        p.add_argument("--seed", type=int,
                       help="master seed (benchmark base_seed inherits it)")
        p.add_argument("--jobs", type=int, help="parallel (task, seed) workers")
        p.add_argument("--task", choices=["node", "graph"])
        p.add_argument("--print-config", action="store_true",
                       help="print resolved config and exit")

    p = sub.add_parser("pretrain", help="contrastive pre-training of the encoder")
    common(p)
    p.add_argument("--epochs", type=int, dest="pretrain_epochs")
    p.add_argument("--lr", type=float, dest="pretrain_lr")
    p.add_argument("--tau", type=float, dest="tau_pretrain")
    p.add_argument("--negatives", type=int, dest="pretrain_negatives")
    p.add_argument("--anchors", dest="pretrain_anchors",
                   help="anchors per epoch, integer or 'all'")
    p.add_argument("--layers", type=int, dest="num_layers")
    p.add_argument("--hidden-dim", type=int, dest="hidden_dim")

    for name, help_text in (
        ("bench", "few-shot benchmark over sampled tasks"),
        ("ablate", "full / no_cot / per-layer thought ablation"),
    ):
        p = sub.add_parser(name, help=help_text)
        common(p)
        p.add_argument("--checkpoint", help="encoder checkpoint path")
        p.add_argument("--shots", help="m (bench also accepts a..b or comma list)")
        p.add_argument("--steps", type=int, help="inference steps K")
        p.add_argument("--cond-hidden", type=int, dest="cond_hidden")
        p.add_argument("--std-kind", dest="std_kind",
                       choices=["gpf_plus", "gpf", "graphprompt"])
        p.add_argument("--num-bias", type=int, dest="num_bias")
        p.add_argument("--tau", type=float, dest="tau_downstream")
        p.add_argument("--tune-epochs", type=int, dest="tune_epochs")
        p.add_argument("--tune-lr", type=float, dest="tune_lr")
        p.add_argument("--num-tasks", type=int, dest="num_tasks")
        p.add_argument("--num-seeds", type=int, dest="num_seeds")
        p.add_argument("--query-cap", type=int, dest="query_cap")
        if name == "bench":
            p.add_argument("--variant", help="full, no_cot or layer_only_<l>")
            p.add_argument("--save-state", dest="save_state",
                           help="write the tuned prompt state of task 0, repeat 0")

    p = sub.add_parser("sweep", help="sweep one axis, one summary row per value")
    common(p)
    p.add_argument("--checkpoint", help="encoder checkpoint path")
    p.add_argument("--axis", required=True)
    p.add_argument("--values", required=True, help="comma list or a..b range")
    p.add_argument("--shots", type=int)
    p.add_argument("--steps", type=int)
    p.add_argument("--cond-hidden", type=int, dest="cond_hidden")
    p.add_argument("--num-tasks", type=int, dest="num_tasks")
    p.add_argument("--num-seeds", type=int, dest="num_seeds")
    p.add_argument("--tune-epochs", type=int, dest="tune_epochs")
    p.add_argument("--variant")

    p = sub.add_parser("export-embeddings",
                       help="write answer-embedding and thought CSVs")
    common(p)
    p.add_argument("--checkpoint", help="encoder checkpoint path")
    p.add_argument("--state", help="prompt-state checkpoint path")
    p.add_argument("--steps", type=int)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    print_config = args.pop("print_config", False)
    try:
        config = resolve_config(args)
        if print_config:
            print(json.dumps(config, indent=2, sort_keys=True))
            return 0
        if command == "pretrain":
            return cmd_pretrain(config)
        if command == "bench":
            return cmd_bench(config)
        if command == "ablate":
            return cmd_ablate(config)
        if command == "sweep":
            return cmd_sweep(config, args["axis"], args["values"])
        if command == "export-embeddings":
            return cmd_export_embeddings(config)
        raise ConfigError(f"unknown command {command!r}")
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except (NumericError, DimensionError) as err:
        print(f"numeric error: {err}", file=sys.stderr)
        return 4
    except GcotError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
