"""L-layer GCN forward pass and checkpoint persistence.

Layer update: H^l = relu(A_hat @ H^(l-1) @ theta^l) with H^0 = X and no
bias terms; the final layer is linear.  A relu on the output layer lets
the contrastive objective push whole embedding rows into the dead zone
(zero norm, undefined cosine, no recovery gradient), which kills long
pre-training runs.  All layer outputs are returned because the
chain-of-thought fusion consumes every one of them, not just the last.
Weights become read-only constants once frozen: they are never registered
as tape leaves, so no gradient can reach them.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DimensionError, FormatError
from .numcore import Tensor, const_mm, matmul, relu

CHECKPOINT_MAGIC = "GCOT-CKPT v1"


@dataclass(frozen=True)
class EncoderConfig:
    num_layers: int = 3
    input_dim: int = 1
    hidden_dim: int = 256

    def __post_init__(self):
        if self.num_layers < 1:
            raise DimensionError("num_layers must be >= 1")
        if self.input_dim < 1 or self.hidden_dim < 1:
            raise DimensionError("encoder dims must be >= 1")


@dataclass
class EncoderWeights:
    """Per-layer weight matrices; theta^1 is d x h, the rest h x h."""

    layers: list[Tensor]
    frozen: bool = False

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].rows

    @property
    def hidden_dim(self) -> int:
        return self.layers[0].cols

    def config(self) -> EncoderConfig:
        return EncoderConfig(self.num_layers, self.input_dim, self.hidden_dim)

    def freeze(self) -> "EncoderWeights":
        return EncoderWeights(self.layers, frozen=True)

    def digest(self) -> str:
        """SHA-256 over the exact weight bytes; used by freeze-contract checks."""
        h = hashlib.sha256()
        for layer in self.layers:
            h.update(np.ascontiguousarray(layer.data).tobytes())
        return h.hexdigest()


def init_weights(config: EncoderConfig, seed: int = 0) -> EncoderWeights:
    """Glorot-uniform initialization, seeded for reproducibility."""
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x6C07]))
    layers = []
    fan_in = config.input_dim
    for _ in range(config.num_layers):
        bound = np.sqrt(6.0 / (fan_in + config.hidden_dim))
        layers.append(Tensor(rng.uniform(-bound, bound, (fan_in, config.hidden_dim))))
        fan_in = config.hidden_dim
    return EncoderWeights(layers, frozen=False)


def encode(x: Tensor, adj, weights: EncoderWeights | list[Tensor]) -> list[Tensor]:
    """Run every GCN layer, returning [H^1 .. H^L].

    ``adj`` is the normalized adjacency: a Tensor, ndarray or scipy sparse
    matrix.  It is always a constant; gradients flow only through X and,
    when the weights are tracked leaves, through the weights.
    """
    layers = weights.layers if isinstance(weights, EncoderWeights) else weights
    if isinstance(adj, Tensor):
        adj = adj.data
    n = adj.shape[0] if sp.issparse(adj) else np.asarray(adj).shape[0]
    if adj.shape != (n, n) or n != x.rows:
        raise DimensionError(f"adjacency {adj.shape} does not match {x.rows} nodes")
    if x.cols != layers[0].rows:
        raise DimensionError(
            f"input dim {x.cols} does not match theta^1 rows {layers[0].rows}"
        )
    outputs = []
    h = x
    for li, theta in enumerate(layers):
        h = _gcn_layer(h, adj, theta, apply_relu=li < len(layers) - 1)
        outputs.append(h)
    return outputs


def _gcn_layer(h: Tensor, adj, theta: Tensor, apply_relu: bool) -> Tensor:
    # A_hat (H theta) == (A_hat H) theta; projecting first keeps the
    # sparse product narrow when the input dim exceeds the hidden dim
    if theta.cols < theta.rows:
        out = const_mm(adj, matmul(h, theta))
    else:
        out = matmul(const_mm(adj, h), theta)
    return relu(out) if apply_relu else out


def encode_from_projection(z: Tensor, adj, weights: EncoderWeights) -> list[Tensor]:
    """Finish the forward pass given Z = H^0 @ theta^1, not yet propagated.

    Produces the same layer list as ``encode`` on the corresponding input;
    callers that compute the first projection through a fused sparse kernel
    re-enter here.
    """
    layers = weights.layers if isinstance(weights, EncoderWeights) else weights
    h = const_mm(adj, z)
    if len(layers) > 1:
        h = relu(h)
    outputs = [h]
    for li in range(1, len(layers)):
        h = _gcn_layer(h, adj, layers[li], apply_relu=li < len(layers) - 1)
        outputs.append(h)
    return outputs


def save_checkpoint(weights: EncoderWeights, path: str | Path) -> Path:
    """Text checkpoint: magic line, dims line, then one row of decimals per
    weight-matrix row in layer order.  17 significant digits round-trip
    float64 exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    cfg = weights.config()
    lines = [CHECKPOINT_MAGIC, f"{cfg.num_layers} {cfg.input_dim} {cfg.hidden_dim}"]
    for layer in weights.layers:
        for row in layer.data:
            lines.append(" ".join(f"{x:.17g}" for x in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_checkpoint(path: str | Path) -> EncoderWeights:
    """Load a checkpoint written by save_checkpoint; result is frozen."""
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"checkpoint not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != CHECKPOINT_MAGIC:
        got = lines[0] if lines else "<empty>"
        raise FormatError(f"bad checkpoint header {got!r}, expected {CHECKPOINT_MAGIC!r}")
    try:
        num_layers, input_dim, hidden_dim = (int(p) for p in lines[1].split())
    except (IndexError, ValueError) as err:
        raise FormatError("checkpoint dims line is malformed") from err
    expected_rows = input_dim + (num_layers - 1) * hidden_dim
    body = lines[2:]
    if len(body) != expected_rows:
        raise FormatError(
            f"checkpoint payload has {len(body)} rows, header implies {expected_rows}"
        )
    layers = []
    pos = 0
    fan_in = input_dim
    for _ in range(num_layers):
        rows = []
        for i in range(fan_in):
            parts = body[pos + i].split()
            if len(parts) != hidden_dim:
                raise FormatError(
                    f"checkpoint row {pos + i + 3} has {len(parts)} values, "
                    f"expected {hidden_dim}"
                )
            try:
                rows.append([float(p) for p in parts])
            except ValueError as err:
                raise FormatError(f"checkpoint row {pos + i + 3} is not numeric") from err
        layers.append(Tensor(np.array(rows)))
        pos += fan_in
        fan_in = hidden_dim
    return EncoderWeights(layers, frozen=True)
