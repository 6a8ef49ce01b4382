"""m-shot task sampling, prompt tuning, evaluation and benchmark runs.

A task fixes m labeled instances per class (support) and treats the rest
as queries.  Tuning minimizes a prototype-contrastive loss over the
support set only; prototypes are recomputed from the tuned embeddings at
every epoch.  Benchmarks grid over (task_index, repeat_index) with seeds
derived purely from (base_seed, task_index, repeat_index), so results are
identical no matter how runs are scheduled.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DataError, DegenerateInputError, DimensionError
from .cot import (
    PromptState,
    cot_forward,
    init_prompt_state,
    replace_parameters,
    parameter_list,
    track_state,
    trainable_indices,
)
from .encoder import EncoderWeights
from .graphdata import GraphCollection, adjacency_operator, build_union
from .numcore import (
    AdamHyper,
    AdamState,
    SparseConst,
    Tape,
    Tensor,
    adam_step,
    backward,
    cmul,
    const_mm,
    cosine_pairs,
    log,
    mul,
    row_softmax,
    sum_all,
)


@dataclass(frozen=True)
class TuneConfig:
    epochs: int = 100
    learning_rate: float = 1e-2
    tau: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise DegenerateInputError("tau must be > 0")


@dataclass(frozen=True)
class CotConfig:
    steps: int = 2
    cond_hidden: int = 32
    std_kind: str = "gpf_plus"
    num_bias: int = 5
    chain_features: bool = False
    pinned_layer: int | None = None


@dataclass(frozen=True)
class AblationVariant:
    kind: str  # full | no_cot | layer_only
    layer: int | None = None

    def __post_init__(self):
        if self.kind not in ("full", "no_cot", "layer_only"):
            raise DataError(f"unknown variant {self.kind!r}")
        if self.kind == "layer_only" and (self.layer is None or self.layer < 1):
            raise DataError("layer_only requires a layer index >= 1")

    @property
    def label(self) -> str:
        return f"layer_only_{self.layer}" if self.kind == "layer_only" else self.kind

    @staticmethod
    def parse(label: str) -> "AblationVariant":
        if label.startswith("layer_only_"):
            return AblationVariant("layer_only", int(label.rsplit("_", 1)[1]))
        return AblationVariant(label)

    def apply(self, cot: CotConfig) -> CotConfig:
        if self.kind == "no_cot":
            return replace(cot, steps=1)
        if self.kind == "layer_only":
            return replace(cot, pinned_layer=self.layer)
        return cot


@dataclass
class FewShotTask:
    kind: str  # node | graph
    shots: int
    classes: list[int]
    support: dict[int, list[int]]  # class -> m instance ids
    query: list[int]
    query_labels: np.ndarray

    def support_ids(self) -> list[int]:
        return [i for c in self.classes for i in self.support[c]]

    def support_labels(self) -> list[int]:
        return [c for c in self.classes for _ in self.support[c]]


@dataclass
class ResultsRecord:
    dataset: str
    task_kind: str
    shots: int
    steps: int
    cond_hidden: int
    variant: str
    base_seed: int
    accuracies: list[list[float]]  # [task_index][repeat_index]
    config: dict = field(default_factory=dict)

    @property
    def flat(self) -> np.ndarray:
        return np.array(self.accuracies).reshape(-1)

    @property
    def mean(self) -> float:
        return float(self.flat.mean())

    @property
    def std(self) -> float:
        return float(self.flat.std())  # population std over all runs


# ---------------------------------------------------------------------------
# task sampling
# ---------------------------------------------------------------------------


def _instance_labels(collection: GraphCollection, kind: str) -> np.ndarray:
    if kind == "node":
        g = collection.single()
        if g.node_labels is None:
            raise DataError("node task on a dataset without node labels")
        return np.asarray(g.node_labels)
    if kind == "graph":
        labels = [g.graph_label for g in collection.graphs]
        if any(l is None for l in labels):
            raise DataError("graph task on a dataset without graph labels")
        return np.array(labels)
    raise DataError(f"unknown task kind {kind!r}")


def task_rng(base_seed: int, task_index: int) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence([int(base_seed), 0x7A5C, int(task_index)])
    )


def repeat_seed(base_seed: int, task_index: int, repeat_index: int) -> int:
    seq = np.random.SeedSequence([int(base_seed), 0x5EED, int(task_index), int(repeat_index)])
    return int(seq.generate_state(1)[0])


def sample_task(
    collection: GraphCollection, kind: str, m: int, rng: np.random.Generator
) -> FewShotTask:
    """Pick m support instances per class; everything else becomes query."""
    if m < 1:
        raise DataError("shots must be >= 1")
    labels = _instance_labels(collection, kind)
    classes = sorted(int(c) for c in np.unique(labels) if c >= 0)
    if not classes:
        raise DataError("dataset has no labeled instances")
    support: dict[int, list[int]] = {}
    support_all = set()
    for c in classes:
        members = np.flatnonzero(labels == c)
        if len(members) < m + 1:
            raise DataError(
                f"class {c} has {len(members)} instances, needs at least {m + 1} "
                f"for {m}-shot tasks"
            )
        chosen = rng.choice(members, size=m, replace=False)
        support[c] = sorted(int(i) for i in chosen)
        support_all.update(support[c])
    query = [
        int(i) for i in np.flatnonzero(labels >= 0) if int(i) not in support_all
    ]
    return FewShotTask(
        kind=kind,
        shots=m,
        classes=classes,
        support=support,
        query=query,
        query_labels=labels[query],
    )


# ---------------------------------------------------------------------------
# prototypes and downstream loss
# ---------------------------------------------------------------------------


@dataclass
class Prototypes:
    classes: list[int]
    matrix: Tensor  # C x h, row order matches classes


def compute_prototypes(
    embeddings: Tensor, support: dict[int, list[int]], classes: list[int]
) -> Prototypes:
    """Class prototypes as arithmetic means of support embeddings."""
    rows, cols, vals = [], [], []
    for ci, c in enumerate(classes):
        ids = support.get(c, [])
        if not ids:
            raise DataError(f"class {c} has no support instances")
        for i in ids:
            rows.append(ci)
            cols.append(i)
            vals.append(1.0 / len(ids))
    mean_matrix = sp.csr_matrix(
        (vals, (rows, cols)), shape=(len(classes), embeddings.rows)
    )
    return Prototypes(list(classes), const_mm(mean_matrix, embeddings))


def downstream_loss(
    embeddings: Tensor,
    labels: list[int],
    prototypes: Prototypes,
    tau: float,
) -> Tensor:
    """Prototype-contrastive cross entropy at temperature tau."""
    if tau <= 0:
        raise DegenerateInputError("tau must be > 0")
    index = {c: i for i, c in enumerate(prototypes.classes)}
    if any(l not in index for l in labels):
        raise DataError("a label has no prototype")
    if embeddings.rows != len(labels):
        raise DimensionError("one label per embedding row required")
    sims = cosine_pairs(embeddings, prototypes.matrix)
    logp = log(row_softmax(cmul(sims, 1.0 / tau)))
    mask = np.zeros(sims.shape)
    for r, l in enumerate(labels):
        mask[r, index[l]] = 1.0
    picked = mul(logp, Tensor(mask))
    return cmul(sum_all(picked), -1.0)


# ---------------------------------------------------------------------------
# embedding context shared by tune/evaluate
# ---------------------------------------------------------------------------


def _select(idx: list[int], n: int) -> sp.csr_matrix:
    return sp.csr_matrix(
        (np.ones(len(idx)), (np.arange(len(idx)), np.array(idx, dtype=np.int64))),
        shape=(len(idx), n),
    )


class EmbedContext:
    """Per-collection precomputation: features, adjacency, membership."""

    def __init__(self, collection: GraphCollection, kind: str):
        self.kind = kind
        self.collection = collection
        if kind == "node":
            g = collection.single()
            self.x = g.features
            self.adj = adjacency_operator(g)
            self.membership = None
            self.num_instances = g.num_nodes
        else:
            union = build_union(collection)
            self.x = union.record.features
            self.adj = adjacency_operator(union.record)
            self.membership = union.membership
            self.num_instances = union.num_graphs
        # sparse feature base enables the fused prompt/projection kernel
        density = np.count_nonzero(self.x.data) / self.x.data.size
        self.feature_base = SparseConst(self.x.data) if density < 0.25 else None
        self._cache_key = None
        self._step1 = None

    def step1_cache(self, weights: EncoderWeights):
        from .cot import compute_step1_cache

        if self._cache_key is not weights:
            self._step1 = compute_step1_cache(self.x, self.adj, weights)
            self._cache_key = weights
        return self._step1

    def instance_embeddings(self, h_tilde: Tensor) -> Tensor:
        """Node tasks: answer rows; graph tasks: per-graph sum readout."""
        if self.kind == "node":
            return h_tilde
        return const_mm(self.membership, h_tilde)


def _forward_embeddings(
    ctx: EmbedContext, weights: EncoderWeights, state: PromptState
) -> Tensor:
    h_tilde, _ = cot_forward(
        ctx.x, ctx.adj, weights, state,
        step1_cache=ctx.step1_cache(weights),
        feature_base=ctx.feature_base,
    )
    return ctx.instance_embeddings(h_tilde)


# ---------------------------------------------------------------------------
# tune / evaluate
# ---------------------------------------------------------------------------


def tune(
    task: FewShotTask,
    weights: EncoderWeights,
    collection: GraphCollection,
    tune_config: TuneConfig,
    cot_config: CotConfig,
    ctx: EmbedContext | None = None,
) -> tuple[PromptState, list[float]]:
    """Prompt tuning on the support set; encoder weights stay untouched."""
    if not weights.frozen:
        raise DimensionError("tune requires frozen encoder weights")
    ctx = ctx or EmbedContext(collection, task.kind)
    state = init_prompt_state(
        num_layers=weights.num_layers,
        hidden_dim=weights.hidden_dim,
        feature_dim=ctx.x.cols,
        cond_hidden=cot_config.cond_hidden,
        steps=cot_config.steps,
        std_kind=cot_config.std_kind,
        num_bias=cot_config.num_bias,
        seed=tune_config.seed,
        chain_features=cot_config.chain_features,
        pinned_layer=cot_config.pinned_layer,
    )
    sup_ids = task.support_ids()
    sup_labels = task.support_labels()
    sel = _select(sup_ids, ctx.num_instances)

    params = parameter_list(state)
    tidx = trainable_indices(state)
    adam = AdamState.init(
        [params[i] for i in tidx], AdamHyper(learning_rate=tune_config.learning_rate)
    )
    losses: list[float] = []
    for _ in range(tune_config.epochs):
        tape = Tape()
        tracked_state, leaves = track_state(replace_parameters(state, params), tape)
        emb = _forward_embeddings(ctx, weights, tracked_state)
        sup_emb = const_mm(sel, emb)
        protos = compute_prototypes(emb, task.support, task.classes)
        loss = downstream_loss(sup_emb, sup_labels, protos, tune_config.tau)
        backward(loss, tape)
        grads = [tape.grad(leaf) for leaf in leaves]
        updated, adam = adam_step([params[i] for i in tidx], grads, adam)
        for i, t in zip(tidx, updated):
            params[i] = t
        losses.append(loss.item())
    return replace_parameters(state, params), losses


def predict_classes(query_emb: Tensor, protos: Prototypes) -> np.ndarray:
    """Nearest-prototype rule: argmax cosine, ties to the smallest class."""
    sims = cosine_pairs(query_emb, protos.matrix).data
    return np.array(protos.classes)[np.argmax(sims, axis=1)]


def evaluate(
    task: FewShotTask,
    state: PromptState,
    weights: EncoderWeights,
    collection: GraphCollection,
    query_cap: int | None = 1000,
    cap_seed: int = 0,
    ctx: EmbedContext | None = None,
) -> float:
    """Accuracy of nearest-prototype classification over the query set."""
    if not task.query:
        raise DataError("task has an empty query set")
    ctx = ctx or EmbedContext(collection, task.kind)
    query = list(task.query)
    labels = np.asarray(task.query_labels)
    if query_cap is not None and len(query) > query_cap:
        rng = np.random.default_rng(np.random.SeedSequence([int(cap_seed), 0xCA9]))
        pick = np.sort(rng.choice(len(query), size=query_cap, replace=False))
        query = [query[i] for i in pick]
        labels = labels[pick]
    emb = _forward_embeddings(ctx, weights, state)
    protos = compute_prototypes(emb, task.support, task.classes)
    q_emb = const_mm(_select(query, ctx.num_instances), emb)
    pred = predict_classes(q_emb, protos)
    return float((pred == labels).mean())


# ---------------------------------------------------------------------------
# benchmark grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchConfig:
    num_tasks: int = 100
    num_seeds: int = 5
    base_seed: int = 0
    query_cap: int | None = 1000
    jobs: int = 1


_WORKER: dict = {}


def _init_worker(collection, weights, kind, m, tune_config, cot_config, query_cap,
                 limit_threads=False):
    if limit_threads:
        # one BLAS thread per worker; the pool provides the parallelism
        try:
            from threadpoolctl import threadpool_limits

            threadpool_limits(limits=1)
        except ImportError:
            pass
    _WORKER["ctx"] = EmbedContext(collection, kind)
    _WORKER["args"] = (collection, weights, kind, m, tune_config, cot_config, query_cap)


def _run_cell(cell: tuple[int, int, int]) -> tuple[int, int, float]:
    task_index, repeat_index, base_seed = cell
    collection, weights, kind, m, tune_config, cot_config, query_cap = _WORKER["args"]
    ctx = _WORKER["ctx"]
    task = sample_task(collection, kind, m, task_rng(base_seed, task_index))
    seed = repeat_seed(base_seed, task_index, repeat_index)
    state, _ = tune(task, weights, collection, replace(tune_config, seed=seed), cot_config, ctx)
    acc = evaluate(task, state, weights, collection, query_cap, cap_seed=seed, ctx=ctx)
    return task_index, repeat_index, acc


def run_benchmark(
    collection: GraphCollection,
    kind: str,
    m: int,
    weights: EncoderWeights,
    tune_config: TuneConfig,
    cot_config: CotConfig,
    bench: BenchConfig,
    variant: AblationVariant | str = "full",
) -> ResultsRecord:
    """num_tasks x num_seeds tune+evaluate runs for one variant."""
    if isinstance(variant, str):
        variant = AblationVariant.parse(variant)
    cot_config = variant.apply(cot_config)
    cells = [
        (ti, ri, bench.base_seed)
        for ti in range(bench.num_tasks)
        for ri in range(bench.num_seeds)
    ]
    init_args = (collection, weights, kind, m, tune_config, cot_config, bench.query_cap)
    if bench.jobs > 1:
        with ProcessPoolExecutor(
            max_workers=bench.jobs,
            initializer=_init_worker,
            initargs=init_args + (True,),
        ) as pool:
            results = list(pool.map(_run_cell, cells, chunksize=4))
    else:
        _init_worker(*init_args)
        try:
            results = [_run_cell(c) for c in cells]
        finally:
            _WORKER.clear()

    acc = np.zeros((bench.num_tasks, bench.num_seeds))
    for ti, ri, a in results:
        acc[ti, ri] = a
    return ResultsRecord(
        dataset=collection.meta.name,
        task_kind=kind,
        shots=m,
        steps=cot_config.steps,
        cond_hidden=cot_config.cond_hidden,
        variant=variant.label,
        base_seed=bench.base_seed,
        accuracies=acc.tolist(),
        config={
            "tune": vars(tune_config) | {},
            "cot": vars(cot_config) | {},
            "bench": vars(bench) | {},
        },
    )


def run_ablation(
    collection: GraphCollection,
    kind: str,
    m: int,
    weights: EncoderWeights,
    tune_config: TuneConfig,
    cot_config: CotConfig,
    bench: BenchConfig,
) -> list[ResultsRecord]:
    """full, no_cot, then one layer_only record per encoder layer."""
    variants = [AblationVariant("full"), AblationVariant("no_cot")] + [
        AblationVariant("layer_only", l + 1) for l in range(weights.num_layers)
    ]
    return [
        run_benchmark(collection, kind, m, weights, tune_config, cot_config, bench, v)
        for v in variants
    ]


# ---------------------------------------------------------------------------
# results output
# ---------------------------------------------------------------------------


def write_results_csv(records: list[ResultsRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["dataset", "task", "shots", "K", "s", "variant", "base_seed",
             "task_index", "repeat_index", "accuracy"]
        )
        for rec in records:
            for ti, row in enumerate(rec.accuracies):
                for ri, acc in enumerate(row):
                    writer.writerow(
                        [rec.dataset, rec.task_kind, rec.shots, rec.steps,
                         rec.cond_hidden, rec.variant, rec.base_seed, ti, ri,
                         f"{acc:.17g}"]
                    )
    return path


def write_summary_json(records: list[ResultsRecord], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = [
        {
            "dataset": rec.dataset,
            "task": rec.task_kind,
            "shots": rec.shots,
            "K": rec.steps,
            "s": rec.cond_hidden,
            "variant": rec.variant,
            "base_seed": rec.base_seed,
            "num_tasks": len(rec.accuracies),
            "num_seeds": len(rec.accuracies[0]) if rec.accuracies else 0,
            "mean": rec.mean,
            "std": rec.std,
            "config": rec.config,
        }
        for rec in records
    ]
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path
