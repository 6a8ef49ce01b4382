#!/usr/bin/env python3
"""Tour of the numerical core: tensors, the tape, backward, and Adam.

Fits a tiny linear model by gradient descent to show the full loop:
build a tape, run ops, call backward, step the optimizer, repeat.
"""

import numpy as np

from gcot import (
    AdamHyper,
    AdamState,
    Tape,
    Tensor,
    adam_step,
    add,
    backward,
    cmul,
    cosine,
    matmul,
    mul,
    row_softmax,
    sum_all,
)

# --- tensors are immutable 2-D float64 matrices ---------------------------

a = Tensor([[1.0, 2.0], [3.0, 4.0]])
b = Tensor([[5.0, 6.0], [7.0, 8.0]])
print("a @ b               =", matmul(a, b).data.tolist())
print("softmax of (ln3, 0) =", row_softmax(Tensor([[np.log(3.0), 0.0]])).data.tolist())
print("cosine((1,0),(1,1)) =", round(cosine(Tensor([[1, 0]]), Tensor([[1, 1]])).item(), 5))

# --- reverse-mode differentiation ------------------------------------------
# loss = x * y at (2, 3): d/dx = 3, d/dy = 2

tape = Tape()
x = tape.leaf([[2.0]])
y = tape.leaf([[3.0]])
backward(mul(x, y), tape)
print("d(xy)/dx =", tape.grad(x)[0, 0], " d(xy)/dy =", tape.grad(y)[0, 0])

# --- a complete training loop: least squares via Adam ----------------------
# recover w_true from noisy observations; the tape is rebuilt every step

rng = np.random.default_rng(0)
w_true = np.array([[2.0], [-1.0], [0.5]])
features = Tensor(rng.standard_normal((64, 3)))
targets = Tensor(features.data @ w_true + 0.01 * rng.standard_normal((64, 1)))

w = Tensor(np.zeros((3, 1)))
state = AdamState.init([w], AdamHyper(learning_rate=0.05))
for step in range(300):
    tape = Tape()
    w_tracked = tape.leaf(w)
    diff = add(matmul(features, w_tracked), cmul(targets, -1.0))
    loss = sum_all(mul(diff, diff))
    backward(loss, tape)
    [w], state = adam_step([w], [tape.grad(w_tracked)], state)
    if step % 100 == 0:
        print(f"step {step:3d}  sum of squared residuals = {loss.item():.5f}")

print("recovered w =", np.round(w.data.reshape(-1), 3).tolist(),
      " true =", w_true.reshape(-1).tolist())
