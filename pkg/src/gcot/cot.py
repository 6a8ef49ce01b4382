"""Chained inference steps with thought-conditioned prompts.

One inference step feeds the (prompt-modified) features through the frozen
encoder, fuses all layer embeddings into a per-node "thought" via learned
scalar weights, maps each thought row through a bottleneck MLP
(condition-net) to a node-specific prompt vector, and multiplies that
prompt into the features for the next step.  After K steps a standard
prompt modifies the final embeddings into the answer matrix used for
classification.

All parameters (fusion weights, condition-net, standard prompt) are shared
across steps; a full forward registers exactly one tape leaf per parameter.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError
from .encoder import EncoderWeights, encode, encode_from_projection
from .numcore import (
    SparseConst,
    Tape,
    Tensor,
    add,
    const_mm,
    leaky_relu,
    masked_project,
    matmul,
    mul,
    row_softmax,
    smul,
)

PROMPT_MAGIC = "GCOT-PROMPT v1"
STD_KINDS = ("gpf_plus", "gpf", "graphprompt")


@dataclass
class ThoughtFusionWeights:
    """L scalar weights, one per encoder layer, shared across steps."""

    w: list[Tensor]  # each 1x1
    pinned: int | None = None  # 1-based layer index; pinned weights are not tuned

    @property
    def num_layers(self) -> int:
        return len(self.w)


@dataclass
class ConditionNet:
    """Two-layer bottleneck MLP mapping thoughts (n x h) to prompts (n x d)."""

    w1: Tensor  # h x s
    b1: Tensor  # 1 x s
    w2: Tensor  # s x d
    b2: Tensor  # 1 x d

    @property
    def bottleneck(self) -> int:
        return self.w1.cols


@dataclass
class StandardPrompt:
    """Pre-training/downstream alignment prompt.

    gpf_plus: N bias prompts (N x h) attended per node via projections
    (h x N), applied multiplicatively to the final embeddings.
    graphprompt: a single multiplicative vector (1 x h) on the embeddings.
    gpf: a single additive vector (1 x d) on the input features of step 1;
    the embedding-side application is then the identity.
    """

    kind: str
    bias: Tensor | None = None
    proj: Tensor | None = None
    vector: Tensor | None = None

    @property
    def num_bias(self) -> int:
        return self.bias.rows if self.bias is not None else 1


@dataclass
class PromptState:
    fusion: ThoughtFusionWeights
    condnet: ConditionNet
    std: StandardPrompt
    steps: int
    chain_features: bool = False

    @property
    def feature_dim(self) -> int:
        return self.condnet.w2.cols

    @property
    def hidden_dim(self) -> int:
        return self.condnet.w1.rows


def init_prompt_state(
    num_layers: int,
    hidden_dim: int,
    feature_dim: int,
    cond_hidden: int,
    steps: int = 2,
    std_kind: str = "gpf_plus",
    num_bias: int = 5,
    seed: int = 0,
    chain_features: bool = False,
    pinned_layer: int | None = None,
) -> PromptState:
    """Identity-start initialization.

    The condition-net opens with W2 = 0 and b2 = 1, so every generated
    prompt is exactly all-ones and extra inference steps are no-ops until
    tuning moves the parameters; this makes the single-step and multi-step
    pipelines coincide at initialization.
    """
    if steps < 1:
        raise DimensionError("steps must be >= 1")
    if cond_hidden < 1:
        raise DimensionError("cond_hidden must be >= 1")
    if std_kind not in STD_KINDS:
        raise DimensionError(f"unknown standard prompt kind {std_kind!r}")
    if pinned_layer is not None and not 1 <= pinned_layer <= num_layers:
        raise DimensionError(f"pinned layer {pinned_layer} outside 1..{num_layers}")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xC07]))

    if pinned_layer is None:
        w = [Tensor([[1.0 / num_layers]]) for _ in range(num_layers)]
    else:
        w = [Tensor([[1.0 if l + 1 == pinned_layer else 0.0]]) for l in range(num_layers)]
    fusion = ThoughtFusionWeights(w, pinned=pinned_layer)

    bound = np.sqrt(6.0 / (hidden_dim + cond_hidden))
    condnet = ConditionNet(
        w1=Tensor(rng.uniform(-bound, bound, (hidden_dim, cond_hidden))),
        b1=Tensor.zeros(1, cond_hidden),
        w2=Tensor.zeros(cond_hidden, feature_dim),
        b2=Tensor.ones(1, feature_dim),
    )

    if std_kind == "gpf_plus":
        if num_bias < 1:
            raise DimensionError("gpf_plus needs at least one bias prompt")
        std = StandardPrompt(
            kind=std_kind,
            bias=Tensor(1.0 + 0.01 * rng.standard_normal((num_bias, hidden_dim))),
            proj=Tensor(0.01 * rng.standard_normal((hidden_dim, num_bias))),
        )
    elif std_kind == "gpf":
        std = StandardPrompt(kind=std_kind, vector=Tensor.zeros(1, feature_dim))
    else:  # graphprompt
        std = StandardPrompt(kind=std_kind, vector=Tensor.ones(1, hidden_dim))
    return PromptState(fusion, condnet, std, steps, chain_features)


# ---------------------------------------------------------------------------
# parameter plumbing
# ---------------------------------------------------------------------------


def parameter_list(state: PromptState) -> list[Tensor]:
    """All parameters in checkpoint order: w, W1, b1, W2, b2, std params."""
    params = list(state.fusion.w)
    params += [state.condnet.w1, state.condnet.b1, state.condnet.w2, state.condnet.b2]
    if state.std.kind == "gpf_plus":
        params += [state.std.bias, state.std.proj]
    else:
        params += [state.std.vector]
    return params


def trainable_indices(state: PromptState) -> list[int]:
    """Indices into parameter_list that tuning may update.

    Pinned fusion weights stay fixed.  With a single step the fusion and
    condition-net never touch the output, so they are left off the tape
    entirely.
    """
    num_l = state.fusion.num_layers
    idx = []
    if state.steps > 1:
        if state.fusion.pinned is None:
            idx.extend(range(num_l))
        idx.extend(range(num_l, num_l + 4))
    idx.extend(range(num_l + 4, len(parameter_list(state))))
    return idx


def replace_parameters(state: PromptState, params: list[Tensor]) -> PromptState:
    num_l = state.fusion.num_layers
    fusion = ThoughtFusionWeights(params[:num_l], pinned=state.fusion.pinned)
    condnet = ConditionNet(*params[num_l:num_l + 4])
    rest = params[num_l + 4:]
    if state.std.kind == "gpf_plus":
        std = StandardPrompt(kind=state.std.kind, bias=rest[0], proj=rest[1])
    else:
        std = StandardPrompt(kind=state.std.kind, vector=rest[0])
    return PromptState(fusion, condnet, std, state.steps, state.chain_features)


def track_state(state: PromptState, tape: Tape) -> tuple[PromptState, list[Tensor]]:
    """Register trainable parameters as tape leaves; returns the tracked
    state and the leaf tensors aligned with trainable_indices."""
    params = parameter_list(state)
    leaves = []
    for i in trainable_indices(state):
        params[i] = tape.leaf(params[i])
        leaves.append(params[i])
    return replace_parameters(state, params), leaves


# ---------------------------------------------------------------------------
# forward pieces
# ---------------------------------------------------------------------------


def fuse_thought(layers: list[Tensor], w: list[Tensor] | ThoughtFusionWeights) -> Tensor:
    """Weighted sum of all layer embeddings: T = sum_l w^l H^l."""
    weights = w.w if isinstance(w, ThoughtFusionWeights) else w
    if len(layers) != len(weights):
        raise DimensionError(
            f"{len(weights)} fusion weights for {len(layers)} layer matrices"
        )
    shape = layers[0].shape
    for h in layers[1:]:
        if h.shape != shape:
            raise DimensionError("layer matrices must share one shape")
    out = smul(weights[0], layers[0])
    for wl, hl in zip(weights[1:], layers[1:]):
        out = add(out, smul(wl, hl))
    return out


def _condnet_hidden(t: Tensor, net: ConditionNet) -> Tensor:
    if t.cols != net.w1.rows:
        raise DimensionError(f"thought dim {t.cols} != condition-net input {net.w1.rows}")
    ones = np.ones((t.rows, 1))
    return leaky_relu(add(matmul(t, net.w1), const_mm(ones, net.b1)))


def condnet_prompts(t: Tensor, net: ConditionNet) -> Tensor:
    """P = leaky_relu(T W1 + b1) W2 + b2, one prompt row per node."""
    hidden = _condnet_hidden(t, net)
    ones = np.ones((t.rows, 1))
    return add(matmul(hidden, net.w2), const_mm(ones, net.b2))


def apply_feature_prompt(p: Tensor, x: Tensor) -> Tensor:
    """Element-wise modification of the feature matrix."""
    if p.shape != x.shape:
        raise DimensionError(f"prompt shape {p.shape} != feature shape {x.shape}")
    return mul(p, x)


def standard_prompt_apply(h_k: Tensor, std: StandardPrompt) -> Tensor:
    """Map final embeddings H_K to the answer matrix."""
    if std.kind == "gpf_plus":
        if h_k.cols != std.proj.rows:
            raise DimensionError(
                f"embedding dim {h_k.cols} != projection dim {std.proj.rows}"
            )
        alpha = row_softmax(matmul(h_k, std.proj))      # n x N
        p_std = matmul(alpha, std.bias)                 # n x h
        return mul(p_std, h_k)
    if std.kind == "graphprompt":
        if h_k.cols != std.vector.cols:
            raise DimensionError(
                f"embedding dim {h_k.cols} != prompt vector dim {std.vector.cols}"
            )
        return mul(const_mm(np.ones((h_k.rows, 1)), std.vector), h_k)
    # gpf acts on the input features of step 1; nothing to do here.
    return h_k


def compute_step1_cache(x: Tensor, adj, weights: EncoderWeights) -> list[Tensor]:
    """Layer embeddings of the unmodified features.

    Step 1 always consumes the original feature matrix, so its encoder pass
    is constant across tuning epochs for every prompt kind except gpf
    (which shifts the step-1 input).  cot_forward accepts this cache to
    skip that pass.
    """
    return [Tensor._wrap(np.asarray(h.data)) for h in encode(x, adj, weights)]


def cot_forward(
    x: Tensor,
    adj,
    weights: EncoderWeights,
    state: PromptState,
    step1_cache: list[Tensor] | None = None,
    feature_base: SparseConst | None = None,
) -> tuple[Tensor, list[Tensor]]:
    """K chained inference steps followed by the standard prompt.

    Returns the answer matrix and the K-1 intermediate thoughts.  The
    encoder weights must be frozen; gradients reach only the prompt-side
    parameters.

    ``feature_base`` is the constant feature matrix in sparse form; when
    given (and the prompt chain multiplies into the original features), the
    condition-net output, the feature modification and the first encoder
    projection run as one nnz-scale kernel instead of materializing the
    dense n x d prompt matrix.
    """
    if not weights.frozen:
        raise DimensionError("cot_forward requires frozen encoder weights")
    if state.steps < 1:
        raise DimensionError("steps must be >= 1")
    if weights.num_layers != state.fusion.num_layers:
        raise DimensionError(
            f"{state.fusion.num_layers} fusion weights for "
            f"{weights.num_layers} encoder layers"
        )

    if state.std.kind == "gpf":
        ones = np.ones((x.rows, 1))
        x1 = add(x, const_mm(ones, state.std.vector))
        step1_cache = None  # step-1 input depends on a tuned parameter
        feature_base = None
    else:
        x1 = x
    use_fused = feature_base is not None and not state.chain_features

    layers = step1_cache if step1_cache is not None else encode(x1, adj, weights)
    xk = x1
    thoughts: list[Tensor] = []
    for _ in range(1, state.steps):
        t_k = fuse_thought(layers, state.fusion)
        thoughts.append(t_k)
        if use_fused:
            hidden = _condnet_hidden(t_k, state.condnet)
            z = masked_project(
                hidden, state.condnet.w2, state.condnet.b2,
                feature_base, weights.layers[0].data,
            )
            layers = encode_from_projection(z, adj, weights)
        else:
            p_k = condnet_prompts(t_k, state.condnet)
            xk = apply_feature_prompt(p_k, xk if state.chain_features else x1)
            layers = encode(xk, adj, weights)

    return standard_prompt_apply(layers[-1], state.std), thoughts


# ---------------------------------------------------------------------------
# prompt-state checkpoints
# ---------------------------------------------------------------------------


def save_prompt_state(state: PromptState, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    num_l = state.fusion.num_layers
    h = state.hidden_dim
    s = state.condnet.bottleneck
    d = state.feature_dim
    n_bias = state.std.num_bias
    lines = [
        PROMPT_MAGIC,
        f"{state.steps} {num_l} {h} {s} {d} {state.std.kind} {n_bias}",
        " ".join(f"{wl.item():.17g}" for wl in state.fusion.w),
    ]
    mats = [state.condnet.w1, state.condnet.b1, state.condnet.w2, state.condnet.b2]
    if state.std.kind == "gpf_plus":
        mats += [state.std.bias, Tensor(state.std.proj.data.T)]
    else:
        mats += [state.std.vector]
    for m in mats:
        for row in m.data:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_prompt_state(path: str | Path) -> PromptState:
    path = Path(path)
    if not path.is_file():
        raise FormatError(f"prompt state not found: {path}")
    lines = path.read_text().splitlines()
    if not lines or lines[0] != PROMPT_MAGIC:
        got = lines[0] if lines else "<empty>"
        raise FormatError(f"bad prompt-state header {got!r}, expected {PROMPT_MAGIC!r}")
    try:
        k_str, l_str, h_str, s_str, d_str, kind, n_str = lines[1].split()
        steps, num_l, h, s, d, n_bias = (
            int(k_str), int(l_str), int(h_str), int(s_str), int(d_str), int(n_str),
        )
    except (IndexError, ValueError) as err:
        raise FormatError("prompt-state dims line is malformed") from err
    if kind not in STD_KINDS:
        raise FormatError(f"unknown standard prompt kind {kind!r}")

    try:
        w_vals = [float(v) for v in lines[2].split()]
        if len(w_vals) != num_l:
            raise ValueError
        body = lines[3:]

        def take(rows: int, cols: int) -> Tensor:
            nonlocal body
            block, body = body[:rows], body[rows:]
            if len(block) != rows:
                raise ValueError
            data = [[float(v) for v in line.split()] for line in block]
            if any(len(r) != cols for r in data):
                raise ValueError
            return Tensor(np.array(data))

        condnet = ConditionNet(take(h, s), take(1, s), take(s, d), take(1, d))
        if kind == "gpf_plus":
            bias = take(n_bias, h)
            proj = Tensor(take(n_bias, h).data.T)
            std = StandardPrompt(kind=kind, bias=bias, proj=proj)
        elif kind == "gpf":
            std = StandardPrompt(kind=kind, vector=take(1, d))
        else:
            std = StandardPrompt(kind=kind, vector=take(1, h))
        if body:
            raise ValueError
    except ValueError as err:
        raise FormatError("prompt-state payload inconsistent with header") from err

    fusion = ThoughtFusionWeights([Tensor([[v]]) for v in w_vals])
    return PromptState(fusion, condnet, std, steps)
