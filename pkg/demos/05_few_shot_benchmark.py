#!/usr/bin/env python3
"""A miniature few-shot benchmark with the ablation variants.

Pre-trains a small encoder on the bundled citation fixture, then runs a
reduced task grid (the full protocol is 100 tasks x 5 seeds) comparing the
chained pipeline against its single-step and single-layer variants.
"""

import time
from pathlib import Path

from gcot import EncoderConfig, load_dataset
from gcot.fewshot import BenchConfig, CotConfig, TuneConfig, run_ablation
from gcot.pretrain import PretrainConfig, pretrain_run

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

cora = load_dataset(FIXTURES / "cora")
print("pre-training the encoder (short demo schedule)...")
weights, _ = pretrain_run(
    cora,
    EncoderConfig(num_layers=3, input_dim=cora.meta.feature_dim, hidden_dim=64),
    PretrainConfig(epochs=80, anchors_per_epoch=256, seed=11),
)

tune_cfg = TuneConfig(epochs=40, learning_rate=2e-2, tau=0.5)
cot_cfg = CotConfig(steps=2, cond_hidden=16)
bench = BenchConfig(num_tasks=5, num_seeds=2, base_seed=0, jobs=2)

started = time.perf_counter()
records = run_ablation(cora, "node", 1, weights, tune_cfg, cot_cfg, bench)
elapsed = time.perf_counter() - started

print(f"\n1-shot node classification, {bench.num_tasks} tasks x "
      f"{bench.num_seeds} seeds ({elapsed:.0f}s)")
print(f"{'variant':<14} {'mean':>7} {'std':>7}")
for rec in records:
    print(f"{rec.variant:<14} {100 * rec.mean:7.2f} {100 * rec.std:7.2f}")
print("\n(the full protocol lives in the CLI: gcot bench --num-tasks 100 --num-seeds 5)")
