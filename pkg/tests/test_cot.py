import math

import numpy as np
import pytest

from gcot.errors import DimensionError, FormatError
from gcot.encoder import EncoderConfig, EncoderWeights, encode, init_weights
from gcot.graphdata import GraphRecord, normalized_adjacency
from gcot.numcore import Tape, Tensor, backward, sum_all
from gcot.cot import (
    ConditionNet,
    PromptState,
    StandardPrompt,
    ThoughtFusionWeights,
    apply_feature_prompt,
    compute_step1_cache,
    condnet_prompts,
    cot_forward,
    fuse_thought,
    init_prompt_state,
    load_prompt_state,
    parameter_list,
    replace_parameters,
    save_prompt_state,
    standard_prompt_apply,
    track_state,
    trainable_indices,
)


def scalars(*values):
    return [Tensor([[v]]) for v in values]


# ---------------------------------------------------------------------------
# fuse_thought
# ---------------------------------------------------------------------------


def test_fuse_one_hot_selects_single_layer():
    rng = np.random.default_rng(0)
    layers = [Tensor(rng.standard_normal((4, 3))) for _ in range(3)]
    t = fuse_thought(layers, scalars(0.0, 0.0, 1.0))
    np.testing.assert_array_equal(t.data, layers[2].data)


def test_fuse_uniform_weights_give_mean():
    rng = np.random.default_rng(1)
    layers = [Tensor(rng.standard_normal((5, 2))) for _ in range(3)]
    t = fuse_thought(layers, scalars(1 / 3, 1 / 3, 1 / 3))
    np.testing.assert_allclose(
        t.data, np.mean([l.data for l in layers], axis=0), atol=1e-15
    )


def test_fuse_hand_computed():
    t = fuse_thought(
        [Tensor([[1.0, 0.0]]), Tensor([[0.0, 2.0]])], scalars(2.0, 0.5)
    )
    np.testing.assert_array_equal(t.data, [[2.0, 1.0]])


def test_fuse_length_mismatch():
    with pytest.raises(DimensionError):
        fuse_thought([Tensor([[1.0]])], scalars(1.0, 1.0))
    with pytest.raises(DimensionError):
        fuse_thought([Tensor([[1.0]]), Tensor([[1.0, 2.0]])], scalars(1.0, 1.0))


# ---------------------------------------------------------------------------
# condnet
# ---------------------------------------------------------------------------


def test_condnet_identity_initialization_yields_ones():
    state = init_prompt_state(3, 8, 5, cond_hidden=4, seed=123)
    rng = np.random.default_rng(2)
    t = Tensor(rng.standard_normal((7, 8)))
    p = condnet_prompts(t, state.condnet)
    np.testing.assert_array_equal(p.data, np.ones((7, 5)))


def test_condnet_constant_function_when_first_layer_zero():
    b2 = np.array([[0.5, -1.0, 2.0]])
    net = ConditionNet(
        w1=Tensor.zeros(4, 2),
        b1=Tensor.zeros(1, 2),
        w2=Tensor(np.random.default_rng(0).standard_normal((2, 3))),
        b2=Tensor(b2),
    )
    t = Tensor(np.random.default_rng(1).standard_normal((6, 4)))
    p = condnet_prompts(t, net)
    np.testing.assert_allclose(p.data, np.repeat(b2, 6, axis=0), atol=1e-15)


def test_condnet_scalar_chain_hand_computed():
    # s=1, 1x1 thought: p = leaky(t*w1 + b1)*w2 + b2 with t=2, w1=3, b1=-7
    # pre-activation = -1 -> leaky gives -0.01; p = -0.01*5 + 1 = 0.95
    net = ConditionNet(
        w1=Tensor([[3.0]]), b1=Tensor([[-7.0]]), w2=Tensor([[5.0]]), b2=Tensor([[1.0]])
    )
    p = condnet_prompts(Tensor([[2.0]]), net)
    assert p.data[0, 0] == pytest.approx(0.95, abs=1e-15)


# ---------------------------------------------------------------------------
# feature prompts
# ---------------------------------------------------------------------------


def test_feature_prompt_identity_and_zero():
    x = Tensor(np.random.default_rng(0).standard_normal((3, 4)))
    np.testing.assert_array_equal(
        apply_feature_prompt(Tensor.ones(3, 4), x).data, x.data
    )
    np.testing.assert_array_equal(
        apply_feature_prompt(Tensor.zeros(3, 4), x).data, np.zeros((3, 4))
    )


def test_feature_prompt_hand_computed():
    out = apply_feature_prompt(Tensor([[2.0, 3.0]]), Tensor([[4.0, 5.0]]))
    np.testing.assert_array_equal(out.data, [[8.0, 15.0]])


# ---------------------------------------------------------------------------
# standard prompts
# ---------------------------------------------------------------------------


def test_gpf_plus_single_bias_prompt():
    h = Tensor(np.random.default_rng(0).standard_normal((4, 3)))
    bias = np.array([[2.0, 0.5, -1.0]])
    std = StandardPrompt("gpf_plus", bias=Tensor(bias), proj=Tensor(np.zeros((3, 1))))
    out = standard_prompt_apply(h, std)
    np.testing.assert_allclose(out.data, bias * h.data, atol=1e-15)


def test_gpf_plus_zero_projections_average_bias():
    h = Tensor(np.random.default_rng(1).standard_normal((5, 3)))
    bias = np.random.default_rng(2).standard_normal((4, 3))
    std = StandardPrompt("gpf_plus", bias=Tensor(bias), proj=Tensor(np.zeros((3, 4))))
    out = standard_prompt_apply(h, std)
    np.testing.assert_allclose(out.data, bias.mean(axis=0) * h.data, atol=1e-12)


def test_gpf_plus_hand_computed_attention():
    # one node embedding engineered to give logits (ln 3, 0):
    # prompt = 0.75 p1 + 0.25 p2
    h = Tensor([[1.0]])
    proj = Tensor([[math.log(3.0), 0.0]])  # h x N with h = 1, N = 2
    bias = np.array([[4.0], [8.0]])
    std = StandardPrompt("gpf_plus", bias=Tensor(bias), proj=proj)
    out = standard_prompt_apply(h, std)
    expected = (0.75 * 4.0 + 0.25 * 8.0) * 1.0
    assert out.data[0, 0] == pytest.approx(expected, abs=1e-12)


def test_graphprompt_vector_scales_rows():
    h = Tensor(np.random.default_rng(3).standard_normal((4, 3)))
    vec = np.array([[2.0, -1.0, 0.5]])
    std = StandardPrompt("graphprompt", vector=Tensor(vec))
    out = standard_prompt_apply(h, std)
    np.testing.assert_allclose(out.data, vec * h.data, atol=1e-15)


def test_gpf_is_identity_on_embeddings():
    h = Tensor(np.random.default_rng(4).standard_normal((4, 3)))
    std = StandardPrompt("gpf", vector=Tensor.zeros(1, 7))
    assert standard_prompt_apply(h, std) is h


# ---------------------------------------------------------------------------
# cot_forward structure
# ---------------------------------------------------------------------------


def toy_setup(n=5, d=4, num_layers=3, h=6, seed=0):
    rng = np.random.default_rng(seed)
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]
    g = GraphRecord(features=Tensor(rng.standard_normal((n, d))), edges=edges)
    adj = normalized_adjacency(g)
    weights = init_weights(EncoderConfig(num_layers, d, h), seed=seed + 1).freeze()
    return g, adj, weights


def random_state(num_layers, h, d, s, steps, num_bias, seed):
    """A prompt state with every parameter moved away from initialization."""
    rng = np.random.default_rng(seed)
    state = init_prompt_state(
        num_layers, h, d, cond_hidden=s, steps=steps, num_bias=num_bias, seed=seed
    )
    params = [Tensor(0.4 * rng.standard_normal(p.shape)) for p in parameter_list(state)]
    return replace_parameters(state, params)


def test_k1_runs_zero_inference_loops():
    g, adj, weights = toy_setup()
    state = random_state(3, 6, 4, s=3, steps=1, num_bias=2, seed=5)
    out, thoughts = cot_forward(g.features, adj, weights, state)
    assert thoughts == []
    h_last = encode(g.features, adj, weights)[-1]
    expected = standard_prompt_apply(h_last, state.std)
    np.testing.assert_array_equal(out.data, expected.data)


def test_identity_init_makes_k2_equal_k1():
    g, adj, weights = toy_setup()
    s1 = init_prompt_state(3, 6, 4, cond_hidden=3, steps=1, num_bias=2, seed=9)
    s2 = init_prompt_state(3, 6, 4, cond_hidden=3, steps=2, num_bias=2, seed=9)
    out1, _ = cot_forward(g.features, adj, weights, s1)
    out2, thoughts = cot_forward(g.features, adj, weights, s2)
    np.testing.assert_array_equal(out1.data, out2.data)
    assert len(thoughts) == 1


def test_k3_matches_straight_line_oracle():
    """Re-derives the full three-step pipeline with bare numpy."""
    g, adj, weights = toy_setup()
    steps = 3
    state = random_state(3, 6, 4, s=3, steps=steps, num_bias=2, seed=11)
    out, thoughts = cot_forward(g.features, adj, weights, state)

    a = adj.data
    x = g.features.data
    thetas = [t.data for t in weights.layers]
    w = [wl.item() for wl in state.fusion.w]
    w1, b1 = state.condnet.w1.data, state.condnet.b1.data
    w2, b2 = state.condnet.w2.data, state.condnet.b2.data
    bias, proj = state.std.bias.data, state.std.proj.data

    def enc(xin):
        hs, cur = [], xin
        for li, theta in enumerate(thetas):
            cur = a @ cur @ theta
            if li < len(thetas) - 1:
                cur = np.maximum(cur, 0.0)
            hs.append(cur)
        return hs

    xk = x
    oracle_thoughts = []
    for _ in range(steps - 1):
        hs = enc(xk)
        t = sum(w[l] * hs[l] for l in range(len(hs)))
        oracle_thoughts.append(t)
        z = t @ w1 + b1
        hidden = np.where(z > 0, z, 0.01 * z)
        p = hidden @ w2 + b2
        xk = p * x
    h_k = enc(xk)[-1]
    logits = h_k @ proj
    e = np.exp(logits - logits.max(axis=1, keepdims=True))
    alpha = e / e.sum(axis=1, keepdims=True)
    p_std = alpha @ bias
    expected = p_std * h_k

    assert np.abs(out.data - expected).max() < 1e-9
    assert len(thoughts) == steps - 1
    for got, want in zip(thoughts, oracle_thoughts):
        assert np.abs(got.data - want).max() < 1e-9


def test_chain_features_multiplies_previous_features():
    g, adj, weights = toy_setup()
    state = random_state(3, 6, 4, s=3, steps=3, num_bias=2, seed=13)
    chained = PromptState(state.fusion, state.condnet, state.std, 3, chain_features=True)
    out_plain, _ = cot_forward(g.features, adj, weights, state)
    out_chain, _ = cot_forward(g.features, adj, weights, chained)
    assert np.abs(out_plain.data - out_chain.data).max() > 1e-9


def test_gpf_adds_vector_before_first_step():
    g, adj, weights = toy_setup()
    state = init_prompt_state(3, 6, 4, cond_hidden=3, steps=1, std_kind="gpf", seed=3)
    vec = np.array([[0.3, -0.2, 0.1, 0.5]])
    state = replace_parameters(state, parameter_list(state)[:-1] + [Tensor(vec)])
    out, _ = cot_forward(g.features, adj, weights, state)
    expected = encode(Tensor(g.features.data + vec), adj, weights)[-1]
    np.testing.assert_allclose(out.data, expected.data, atol=1e-12)


def test_step1_cache_changes_nothing():
    g, adj, weights = toy_setup()
    cache = compute_step1_cache(g.features, adj, weights)
    for steps in (1, 2, 3):
        state = random_state(3, 6, 4, s=3, steps=steps, num_bias=2, seed=steps)
        plain, _ = cot_forward(g.features, adj, weights, state)
        cached, _ = cot_forward(g.features, adj, weights, state, step1_cache=cache)
        np.testing.assert_array_equal(plain.data, cached.data)


def test_fused_sparse_path_matches_generic_path():
    from gcot.numcore import SparseConst

    rng = np.random.default_rng(31)
    n, d = 9, 10
    x_data = rng.uniform(0.5, 1.5, (n, d)) * (rng.random((n, d)) < 0.3)
    x_data[0, 0] = 1.0  # no all-zero matrix
    g = GraphRecord(features=Tensor(x_data), edges=[(i, i + 1) for i in range(n - 1)])
    adj = normalized_adjacency(g)
    weights = init_weights(EncoderConfig(3, d, 6), seed=5).freeze()
    base = SparseConst(x_data)
    for steps in (2, 3):
        state = random_state(3, 6, d, s=3, steps=steps, num_bias=2, seed=steps + 40)
        plain, t_plain = cot_forward(g.features, adj, weights, state)
        fused, t_fused = cot_forward(g.features, adj, weights, state, feature_base=base)
        assert np.abs(plain.data - fused.data).max() < 1e-9
        for a, b in zip(t_plain, t_fused):
            assert np.abs(a.data - b.data).max() < 1e-9


def test_fused_path_gradients_match_generic_path():
    from gcot.numcore import SparseConst

    rng = np.random.default_rng(77)
    n, d = 8, 9
    x_data = rng.uniform(0.5, 1.5, (n, d)) * (rng.random((n, d)) < 0.35)
    x_data[0, 0] = 1.0
    g = GraphRecord(features=Tensor(x_data), edges=[(i, (i + 3) % n) for i in range(n)])
    adj = normalized_adjacency(g)
    weights = init_weights(EncoderConfig(2, d, 5), seed=9).freeze()
    base = SparseConst(x_data)
    state = random_state(2, 5, d, s=3, steps=3, num_bias=2, seed=3)

    grads = {}
    for label, kwargs in (("plain", {}), ("fused", {"feature_base": base})):
        tape = Tape()
        tracked, leaves = track_state(state, tape)
        out, _ = cot_forward(g.features, adj, weights, tracked, **kwargs)
        backward(sum_all(out), tape)
        grads[label] = [tape.grad(l) for l in leaves]
    for a, b in zip(grads["plain"], grads["fused"]):
        np.testing.assert_allclose(a, b, atol=1e-9)


def test_forward_requires_frozen_weights():
    g, adj, _ = toy_setup()
    unfrozen = init_weights(EncoderConfig(3, 4, 6), seed=0)
    state = init_prompt_state(3, 6, 4, cond_hidden=3)
    with pytest.raises(DimensionError, match="frozen"):
        cot_forward(g.features, adj, unfrozen, state)


# ---------------------------------------------------------------------------
# parameter sharing and gradients
# ---------------------------------------------------------------------------


def test_one_leaf_per_parameter_regardless_of_steps():
    g, adj, weights = toy_setup()
    for steps in (1, 2, 4):
        state = random_state(3, 6, 4, s=3, steps=steps, num_bias=2, seed=steps)
        tape = Tape()
        tracked, leaves = track_state(state, tape)
        out, _ = cot_forward(g.features, adj, weights, tracked)
        backward(sum_all(out), tape)
        assert tape.num_leaves() == len(leaves) == len(trainable_indices(state))


def test_k1_excludes_fusion_and_condnet_from_tape():
    state = init_prompt_state(3, 6, 4, cond_hidden=3, steps=1, num_bias=2)
    num_l = state.fusion.num_layers
    idx = trainable_indices(state)
    assert all(i >= num_l + 4 for i in idx)  # only standard-prompt parameters


def test_pinned_fusion_is_not_trainable():
    state = init_prompt_state(3, 6, 4, cond_hidden=3, steps=2, pinned_layer=2)
    assert [wl.item() for wl in state.fusion.w] == [0.0, 1.0, 0.0]
    idx = trainable_indices(state)
    assert all(i >= 3 for i in idx)  # fusion scalars excluded, condnet included
    assert 3 in idx


def test_gradients_match_finite_differences_through_unroll():
    g, adj, weights = toy_setup()
    state = random_state(3, 6, 4, s=3, steps=2, num_bias=2, seed=21)
    params = parameter_list(state)
    tidx = trainable_indices(state)

    def loss_for(park):
        st = replace_parameters(state, park)
        out, _ = cot_forward(g.features, adj, weights, st)
        return sum_all(out)

    tape = Tape()
    tracked = list(params)
    leaves = []
    for i in tidx:
        tracked[i] = tape.leaf(tracked[i])
        leaves.append(tracked[i])
    backward(loss_for(tracked), tape)

    h = 1e-4
    for li, i in enumerate(tidx):
        grad = tape.grad(leaves[li])
        base = params[i].data
        it = np.nditer(base, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            plus = list(params)
            arr = base.copy()
            arr[idx] += h
            plus[i] = Tensor(arr)
            minus = list(params)
            arr = base.copy()
            arr[idx] -= h
            minus[i] = Tensor(arr)
            fd = (loss_for(plus).item() - loss_for(minus).item()) / (2 * h)
            assert abs(grad[idx] - fd) / max(abs(fd), abs(grad[idx]), 1e-6) < 1e-3


def test_frozen_weights_unchanged_by_backward():
    g, adj, weights = toy_setup()
    digest = weights.digest()
    state = random_state(3, 6, 4, s=3, steps=2, num_bias=2, seed=2)
    for _ in range(3):
        tape = Tape()
        tracked, leaves = track_state(state, tape)
        out, _ = cot_forward(g.features, adj, weights, tracked)
        backward(sum_all(out), tape)
    assert weights.digest() == digest
    assert tape.num_leaves() == len(leaves)


# ---------------------------------------------------------------------------
# prompt-state checkpoints
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("kind", ["gpf_plus", "gpf", "graphprompt"])
def test_prompt_state_round_trip(tmp_path, kind):
    state = random_state(3, 6, 4, s=3, steps=2, num_bias=3, seed=8) \
        if kind == "gpf_plus" else init_prompt_state(
            3, 6, 4, cond_hidden=3, steps=2, std_kind=kind, seed=8
        )
    path = save_prompt_state(state, tmp_path / "prompt.ckpt")
    loaded = load_prompt_state(path)
    assert loaded.steps == state.steps
    assert loaded.std.kind == state.std.kind
    for a, b in zip(parameter_list(state), parameter_list(loaded)):
        np.testing.assert_array_equal(a.data, b.data)


def test_prompt_state_bad_header(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_text("GCOT-PROMPT v9\n")
    with pytest.raises(FormatError):
        load_prompt_state(path)


def test_prompt_state_truncated(tmp_path):
    state = init_prompt_state(2, 4, 3, cond_hidden=2, steps=2, seed=0)
    path = save_prompt_state(state, tmp_path / "p.ckpt")
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(FormatError):
        load_prompt_state(path)
