"""Link-prediction contrastive pre-training of the graph encoder.

Each anchor node contrasts one sampled neighbor against k sampled
non-neighbors.  The loss is, per anchor o with positive a and negatives b:

    -ln( exp(sim(h_a, h_o)/tau) / sum_b exp(sim(h_b, h_o)/tau) )

computed on the final-layer embeddings with cosine similarity.  The
denominator sums over negatives only; ``include_positive_in_denominator``
switches to the more common variant where the positive term joins it.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateInputError
from .encoder import EncoderConfig, EncoderWeights, encode, init_weights, save_checkpoint
from .graphdata import GraphCollection, GraphRecord, adjacency_operator, build_union
from .numcore import (
    AdamHyper,
    AdamState,
    Tape,
    Tensor,
    adam_step,
    add,
    backward,
    cmul,
    const_mm,
    exp,
    log,
    rowwise_cosine,
    sum_all,
)


@dataclass(frozen=True)
class PretrainConfig:
    epochs: int = 200
    learning_rate: float = 1e-3
    tau: float = 0.5
    negatives_per_anchor: int = 5
    anchors_per_epoch: int | str = "all"
    seed: int = 0

    def __post_init__(self):
        if self.tau <= 0:
            raise DegenerateInputError("tau must be > 0")
        if self.negatives_per_anchor < 1:
            raise DegenerateInputError("negatives_per_anchor must be >= 1")


@dataclass
class LinkSample:
    anchor: int
    positive: int
    negatives: list[int]


def _epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), 0x11E4, int(epoch)]))


def sample_link_pairs(
    graph: GraphRecord,
    config: PretrainConfig,
    rng: np.random.Generator,
    node_blocks: list[tuple[int, int]] | None = None,
) -> list[LinkSample]:
    """Draw one positive and k distinct negatives per anchor.

    Anchors without neighbors, or whose non-neighbor pool is smaller than
    k, are skipped.  ``node_blocks`` confines positives and negatives to
    the anchor's own block (graph) when the record is a stacked union of
    several graphs; by default the whole graph is one block.
    """
    if graph.num_edges == 0:
        raise DegenerateInputError("graph has no edges; unusable for pre-training")
    if node_blocks is None:
        node_blocks = [(0, graph.num_nodes)]
    neigh = graph.neighbor_sets()
    block_of = np.empty(graph.num_nodes, dtype=np.int64)
    for b, (lo, hi) in enumerate(node_blocks):
        block_of[lo:hi] = b

    anchors = [i for i in range(graph.num_nodes) if neigh[i]]
    if config.anchors_per_epoch != "all" and len(anchors) > int(config.anchors_per_epoch):
        pick = rng.choice(len(anchors), size=int(config.anchors_per_epoch), replace=False)
        anchors = [anchors[i] for i in sorted(pick)]

    k = config.negatives_per_anchor
    samples = []
    for o in anchors:
        ns = neigh[o]
        pos = sorted(ns)[rng.integers(0, len(ns))]
        lo, hi = node_blocks[block_of[o]]
        if (hi - lo) - len(ns) - 1 < k:
            continue  # not enough non-neighbors for k distinct negatives
        negs: list[int] = []
        taken: set[int] = set()
        while len(negs) < k:
            b = int(rng.integers(lo, hi))
            if b == o or b in ns or b in taken:
                continue
            taken.add(b)
            negs.append(b)
        samples.append(LinkSample(o, pos, negs))
    return samples


def _selection(idx: list[int], n: int) -> sp.csr_matrix:
    m = len(idx)
    return sp.csr_matrix((np.ones(m), (np.arange(m), np.array(idx))), shape=(m, n))


def pretrain_loss(
    h: Tensor,
    samples: list[LinkSample],
    tau: float,
    include_positive_in_denominator: bool = False,
) -> Tensor:
    """Contrastive loss over final-layer embeddings; tape-registered."""
    if tau <= 0:
        raise DegenerateInputError("tau must be > 0")
    if not samples:
        raise DegenerateInputError("no link samples")
    k = len(samples[0].negatives)
    if any(len(s.negatives) != k for s in samples):
        raise DegenerateInputError("all samples must carry the same negative count")
    n = h.rows
    anchors = [s.anchor for s in samples]
    positives = [s.positive for s in samples]
    neg_flat = [b for s in samples for b in s.negatives]
    anchors_rep = [s.anchor for s in samples for _ in s.negatives]

    ha = const_mm(_selection(anchors, n), h)
    hp = const_mm(_selection(positives, n), h)
    ha_rep = const_mm(_selection(anchors_rep, n), h)
    hn = const_mm(_selection(neg_flat, n), h)

    pos_sim = rowwise_cosine(ha, hp)                      # B x 1
    neg_sim = rowwise_cosine(ha_rep, hn)                  # B*k x 1
    neg_exp = exp(cmul(neg_sim, 1.0 / tau))
    agg = sp.csr_matrix(
        (np.ones(len(neg_flat)),
         (np.repeat(np.arange(len(samples)), k), np.arange(len(neg_flat)))),
        shape=(len(samples), len(neg_flat)),
    )
    denom = const_mm(agg, neg_exp)                        # B x 1
    if include_positive_in_denominator:
        denom = add(denom, exp(cmul(pos_sim, 1.0 / tau)))
    per_anchor = add(cmul(pos_sim, -1.0 / tau), log(denom))
    return sum_all(per_anchor)


def pretrain_run(
    collection: GraphCollection,
    encoder_config: EncoderConfig,
    config: PretrainConfig,
    checkpoint_path: str | Path | None = None,
    log_path: str | Path | None = None,
) -> tuple[EncoderWeights, list[float]]:
    """Train the encoder, returning frozen weights and per-epoch losses."""
    union = build_union(collection)
    graph = union.record
    if graph.num_edges == 0:
        raise DegenerateInputError("collection has no edges; unusable for pre-training")
    adj = adjacency_operator(graph)
    x = graph.features
    if x.cols != encoder_config.input_dim:
        raise DegenerateInputError(
            f"dataset feature dim {x.cols} != encoder input dim {encoder_config.input_dim}"
        )
    blocks = [
        (int(off), int(off) + g.num_nodes)
        for off, g in zip(union.offsets, collection.graphs)
    ]

    weights = init_weights(encoder_config, seed=config.seed)
    params = list(weights.layers)
    state = AdamState.init(params, AdamHyper(learning_rate=config.learning_rate))
    losses: list[float] = []
    for epoch in range(config.epochs):
        rng = _epoch_rng(config.seed, epoch)
        samples = sample_link_pairs(graph, config, rng, node_blocks=blocks)
        if not samples:
            raise DegenerateInputError("no usable anchors in any graph")
        tape = Tape()
        tracked = [tape.leaf(p) for p in params]
        hidden = encode(x, adj, tracked)[-1]
        loss = pretrain_loss(hidden, samples, config.tau)
        backward(loss, tape)
        grads = [tape.grad(p) for p in tracked]
        params, state = adam_step(params, grads, state)
        losses.append(loss.item())

    weights = EncoderWeights(params, frozen=True)
    if checkpoint_path is not None:
        save_checkpoint(weights, checkpoint_path)
    if log_path is not None:
        log_path = Path(log_path)
        log_path.parent.mkdir(parents=True, exist_ok=True)
        with open(log_path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["epoch", "loss"])
            for i, value in enumerate(losses):
                writer.writerow([i, f"{value:.17g}"])
    return weights, losses
