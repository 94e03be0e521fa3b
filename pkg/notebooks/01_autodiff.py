"""
Reverse-mode gradients on a tape
================================

Tensors are plain numpy arrays until a tape watches them. Everything built from
watched tensors is recorded, and ``backward`` walks the record in reverse.
"""

# %%
import numpy as np

from paretocl import autodiff as ad
from paretocl.autodiff import Tape, Tensor

rng = np.random.default_rng(0)
W = Tensor(rng.normal(size=(3, 4)), name="W")
b = Tensor(np.zeros(4), name="b")
x = Tensor(rng.normal(size=(5, 3)))  # never watched: a constant
y = np.array([0, 1, 2, 3, 0])

# %% a two-parameter classifier and its loss
tape = Tape()
tape.watch_all([W, b])
loss = ad.cross_entropy(ad.add_bias(ad.matmul(x, W), b), y)
grads = ad.backward(loss, tape)
gW = grads[W.node_id]
print("loss", loss.item())
print("dL/dW\n", gW.round(4))

# %% the same derivative by central differences
eps = 1e-6
fd = np.zeros_like(W.data)
for i in np.ndindex(W.shape):
    old = W.data[i]
    W.data[i] = old + eps
    hi = ad.cross_entropy(ad.add_bias(ad.matmul(x, W), b), y).item()
    W.data[i] = old - eps
    lo = ad.cross_entropy(ad.add_bias(ad.matmul(x, W), b), y).item()
    W.data[i] = old
    fd[i] = (hi - lo) / (2 * eps)
print("max |analytic - numeric|", np.abs(gW - fd).max())

# %% one SGD step lowers the loss; release() then detaches W from the tape
ad.sgd_update([W], grads, lr=0.5)
tape.release()
print("after one step", ad.cross_entropy(ad.add_bias(ad.matmul(x, W), b), y).item())
