#!/usr/bin/env python3
"""The chained inference mechanism, one substage at a time.

Walks a small graph through: encode -> fuse layer embeddings into per-node
thoughts -> condition-net generates node-specific feature prompts ->
modified features enter the next step -> standard prompt forms the answer
matrix.  Also shows the identity-start property: with the condition-net at
its initialization, extra steps change nothing.
"""

import numpy as np

from gcot import (
    EncoderConfig,
    Tensor,
    apply_feature_prompt,
    condnet_prompts,
    cot_forward,
    encode,
    fuse_thought,
    init_prompt_state,
    init_weights,
    normalized_adjacency,
    standard_prompt_apply,
)
from gcot.graphdata import GraphRecord

rng = np.random.default_rng(3)
n, d, h = 6, 5, 8
g = GraphRecord(
    features=Tensor(rng.standard_normal((n, d))),
    edges=[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)],
)
adj = normalized_adjacency(g)
weights = init_weights(EncoderConfig(3, d, h), seed=0).freeze()

# --- substages, manually -----------------------------------------------------

state = init_prompt_state(num_layers=3, hidden_dim=h, feature_dim=d,
                          cond_hidden=4, steps=2, seed=1)

layers = encode(g.features, adj, weights)
thought = fuse_thought(layers, state.fusion)
print("thought matrix:", thought.shape, "(one row per node)")

prompts = condnet_prompts(thought, state.condnet)
print("prompts at initialization are exactly ones:",
      bool((prompts.data == 1.0).all()))

x2 = apply_feature_prompt(prompts, g.features)
print("so the modified features equal the originals:",
      bool((x2.data == g.features.data).all()))

answer = standard_prompt_apply(encode(x2, adj, weights)[-1], state.std)
print("answer matrix:", answer.shape)

# --- identity start: K = 2 equals K = 1 until tuning moves the parameters ----

one_step = init_prompt_state(3, h, d, cond_hidden=4, steps=1, seed=1)
out1, _ = cot_forward(g.features, adj, weights, one_step)
out2, thoughts = cot_forward(g.features, adj, weights, state)
print("K=2 output equals K=1 output at init:",
      bool((out1.data == out2.data).all()))

# --- after perturbing the condition-net, the chain actually refines ----------

from gcot.cot import parameter_list, replace_parameters

params = parameter_list(state)
moved = [Tensor(p.data + 0.1 * rng.standard_normal(p.shape)) for p in params]
state_moved = replace_parameters(state, moved)
out2_moved, thoughts = cot_forward(g.features, adj, weights, state_moved)
print("after moving parameters, K=2 differs from K=1 by",
      f"{np.abs(out2_moved.data - out1.data).max():.4f} (max abs)")
print("intermediate thoughts returned:", len(thoughts))
