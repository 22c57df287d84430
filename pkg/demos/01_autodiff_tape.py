"""
A tiny reverse-mode tape
========================

Everything the model learns flows through ``mwejoint.tensor``: dense float64
arrays that remember how they were made.  Here we build a two-layer network
by hand, take one gradient, and compare it with a finite difference.
"""
import numpy as np

from mwejoint import tensor as T
from mwejoint.tensor import Tensor

rng = np.random.default_rng(0)
x = Tensor(rng.normal(size=(4, 3)))
w1 = Tensor(rng.normal(size=(3, 5)), requires_grad=True)
w2 = Tensor(rng.normal(size=(5, 2)), requires_grad=True)

# forward: relu(x w1) w2, then a masked cross-entropy over the 4 rows
logits = T.relu(x @ w1) @ w2
loss = T.softmax_cross_entropy(logits, targets=[0, 1, 1, 0], mask=[True, True, False, True])
print("loss", loss.item())

# backward fills .grad on every leaf that asked for it
loss.backward()
print("d loss / d w2\n", w2.grad)

# the same entry by central differences
eps = 1e-6
w2.data[0, 0] += eps
hi = T.softmax_cross_entropy(T.relu(x @ w1) @ w2, [0, 1, 1, 0], [True, True, False, True]).item()
w2.data[0, 0] -= 2 * eps
lo = T.softmax_cross_entropy(T.relu(x @ w1) @ w2, [0, 1, 1, 0], [True, True, False, True]).item()
w2.data[0, 0] += eps
print("finite difference", (hi - lo) / (2 * eps), "tape", w2.grad[0, 0])

# shape mistakes are reported with both shapes
try:
    x @ w2
except T.ShapeError as e:
    print("ShapeError:", e)
