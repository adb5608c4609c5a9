"""Two-layer graph convolution with hand-written forward and backward.

The same weight pair serves two modes: a single branch that propagates
with the normalized adjacency in both layers, and a dual branch that
swaps the learned graph into the first layer while the second layer stays
on the original operator. Dual mode never copies the weights; both
branches read the one parameter set.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .graphdata import operator_matrix
from .mlp import (
    cross_entropy_probs,
    glorot_uniform,
    read_checkpoint,
    softmax_backward,
    write_checkpoint,
)
from .numerics import softmax_rows


@dataclass
class GcnModel:
    """Shared weights of the two-layer GCN (d -> hidden -> c)."""

    w1: np.ndarray
    w2: np.ndarray

    @property
    def hidden(self):
        return self.w1.shape[1]

    def copy(self):
        return GcnModel(self.w1.copy(), self.w2.copy())


def init_gcn(d, hidden, c, rng):
    return GcnModel(
        w1=glorot_uniform(rng, d, hidden),
        w2=glorot_uniform(rng, hidden, c),
    )


@dataclass
class BranchCache:
    """Forward intermediates kept for the backward pass of one branch."""

    layer1_op: object
    layer2_op: object
    pre: np.ndarray
    hidden: np.ndarray
    logits: np.ndarray


def _forward_branch(model, layer1_op, layer2_op, x):
    op1 = operator_matrix(layer1_op)
    op2 = operator_matrix(layer2_op)
    pre = op1 @ (x @ model.w1)
    hid = np.maximum(pre, 0.0)
    logits = op2 @ (hid @ model.w2)
    return BranchCache(op1, op2, pre, hid, logits)


def forward_single(model, a_hat, x):
    """Logits of the plain two-layer GCN on one operator."""
    return _forward_branch(model, a_hat, a_hat, x).logits


def forward_dual(model, a_hat, s_star, x):
    """Logits of both branches: original-graph view and learned-graph view.

    The learned operator drives only the first layer; the second layer
    propagates with the original normalized adjacency in both branches.
    """
    h_bar = _forward_branch(model, a_hat, a_hat, x)
    h_tilde = _forward_branch(model, s_star, a_hat, x)
    return h_bar.logits, h_tilde.logits


def _transpose(op):
    return op.T if (sp.issparse(op) or isinstance(op, np.ndarray)) else np.asarray(op).T


def gcn_backward(model, caches, x, dlogits_list):
    """Accumulate weight gradients over one or two branches.

    Parameters
    ----------
    model : GcnModel
    caches : list of BranchCache
    x : ndarray
    dlogits_list : list of ndarray
        Upstream gradient for each branch's logits, aligned with caches.
    """
    dw1 = np.zeros_like(model.w1)
    dw2 = np.zeros_like(model.w2)
    for cache, dlogits in zip(caches, dlogits_list):
        up = _transpose(cache.layer2_op) @ dlogits
        dw2 += cache.hidden.T @ up
        dhidden = up @ model.w2.T
        dpre = dhidden * (cache.pre > 0.0)
        dw1 += x.T @ (_transpose(cache.layer1_op) @ dpre)
    return dw1, dw2


def gcn_ce_loss(logits, labels, idx):
    """Mean cross entropy of the softmaxed logits over ``idx``."""
    loss, _ = cross_entropy_probs(softmax_rows(logits), labels, idx)
    return loss


def gcn_ce_loss_grad(logits, labels, idx):
    """Cross entropy plus its gradient w.r.t. the logits."""
    probs = softmax_rows(logits)
    loss, dprobs = cross_entropy_probs(probs, labels, idx)
    return loss, softmax_backward(probs, dprobs)


def predict(logits):
    """Argmax class per node; ties break toward the lowest class index."""
    return np.argmax(logits, axis=1).astype(np.int64)


def save_gcn(path, model, seed, extra=None):
    mats = {"w1": model.w1, "w2": model.w2}
    if extra:
        mats.update(extra)
    write_checkpoint(path, "gcn", seed, mats)


def load_gcn(path):
    kind, seed, mats = read_checkpoint(path)
    if kind != "gcn":
        raise ValueError(f"{path}: expected a gcn checkpoint, found kind={kind!r}")
    extra = {k: v for k, v in mats.items() if k not in ("w1", "w2")}
    return GcnModel(w1=mats["w1"], w2=mats["w2"]), seed, extra
