"""Two-layer perceptron pretraining; supplies class probabilities H.

Training is full-batch gradient descent with a fixed step so runs are
reproducible bit-for-bit from a seed. The checkpoint format defined here
(text header plus row-major decimal weights) is shared with the GCN
models.
"""

import os
from dataclasses import dataclass

import numpy as np

from .errors import MissingArtifactError, NumericError
from .numerics import softmax_rows


@dataclass
class MlpModel:
    """Weights of a two-layer rectifier network (d -> hidden -> c)."""

    theta1: np.ndarray
    theta2: np.ndarray

    @property
    def hidden(self):
        return self.theta1.shape[1]

    def logits(self, x):
        return np.maximum(x @ self.theta1, 0.0) @ self.theta2


def glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_mlp(d, hidden, c, rng):
    return MlpModel(
        theta1=glorot_uniform(rng, d, hidden),
        theta2=glorot_uniform(rng, hidden, c),
    )


def cross_entropy_probs(probs, targets, idx, eps=1e-12):
    """Mean negative log-probability of the target class over ``idx``.

    Returns (loss, dprobs). The log argument is clamped at ``eps``;
    clamped entries get zero gradient.
    """
    idx = np.asarray(idx, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("cross entropy over an empty index set")
    picked = probs[idx, targets[idx]]
    clamped = np.maximum(picked, eps)
    loss = float(-np.mean(np.log(clamped)))
    dprobs = np.zeros_like(probs)
    live = picked > eps
    rows = idx[live]
    dprobs[rows, targets[rows]] = -1.0 / (idx.size * picked[live])
    return loss, dprobs


def softmax_backward(probs, dprobs):
    """Chain rule through a row-wise softmax: dz = p * (g - <g, p>)."""
    inner = np.sum(dprobs * probs, axis=1, keepdims=True)
    return probs * (dprobs - inner)


def mlp_loss_grad(model, x, targets, idx, weight_decay=0.0):
    """Cross-entropy training loss and gradients for both weight layers."""
    pre = x @ model.theta1
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ model.theta2
    probs = softmax_rows(logits)
    loss, dprobs = cross_entropy_probs(probs, targets, idx)
    dlogits = softmax_backward(probs, dprobs)
    dtheta2 = hidden.T @ dlogits
    dhidden = dlogits @ model.theta2.T
    dpre = dhidden * (pre > 0.0)
    dtheta1 = x.T @ dpre
    if weight_decay:
        loss += 0.5 * weight_decay * (np.sum(model.theta1**2) + np.sum(model.theta2**2))
        dtheta1 += weight_decay * model.theta1
        dtheta2 += weight_decay * model.theta2
    return loss, dtheta1, dtheta2


def pretrain_mlp(x, labels, cfg, seed):
    """Train the MLP on the train split, returning the best-validation snapshot.

    Parameters
    ----------
    x : ndarray, shape (n, d)
    labels : LabelSet
    cfg : MlpConfig
        Provides hidden width, learning rate, epoch budget, weight decay.
    seed : int
        Seed for the weight initialization.

    Returns
    -------
    (MlpModel, dict)
        Snapshot with the highest validation accuracy seen, plus a history
        dict of per-epoch train losses and validation accuracies.

    Raises
    ------
    NumericError
        If the training loss stops being finite.
    """
    if len(labels.train) == 0:
        raise ValueError("train split is empty")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    model = init_mlp(x.shape[1], cfg.hidden, labels.c, rng)
    targets = labels.labels

    best = MlpModel(model.theta1.copy(), model.theta2.copy())
    best_acc = _val_accuracy(model, x, labels)
    best_epoch = -1
    losses, val_accs = [], []
    for epoch in range(cfg.epochs):
        loss, g1, g2 = mlp_loss_grad(model, x, targets, labels.train, cfg.weight_decay)
        if not np.isfinite(loss):
            raise NumericError(f"MLP training diverged at epoch {epoch}: loss={loss}")
        model.theta1 -= cfg.lr * g1
        model.theta2 -= cfg.lr * g2
        acc = _val_accuracy(model, x, labels)
        losses.append(loss)
        val_accs.append(acc)
        if acc > best_acc:
            best = MlpModel(model.theta1.copy(), model.theta2.copy())
            best_acc = acc
            best_epoch = epoch
    history = {
        "train_loss": losses,
        "val_acc": val_accs,
        "best_epoch": best_epoch,
        "best_val_acc": best_acc,
    }
    return best, history


def _val_accuracy(model, x, labels):
    if len(labels.val) == 0:
        return 0.0
    pred = np.argmax(model.logits(x[labels.val]), axis=1)
    return float(np.mean(pred == labels.labels[labels.val]))


def mlp_probs(model, x):
    """Row-stochastic class probabilities for every node."""
    return softmax_rows(model.logits(x))


# ---------------------------------------------------------------------------
# checkpoint format (shared with the GCN models)
# ---------------------------------------------------------------------------


def write_checkpoint(path, kind, seed, matrices):
    """Write named weight matrices as text: header lines + decimal rows."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("elugcn-checkpoint v1\n")
        fh.write(f"kind {kind}\n")
        fh.write(f"seed {seed}\n")
        for name, mat in matrices.items():
            mat = np.asarray(mat, dtype=np.float64)
            fh.write(f"matrix {name} {mat.shape[0]} {mat.shape[1]}\n")
            for row in mat:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_checkpoint(path):
    """Read a checkpoint written by :func:`write_checkpoint`.

    Returns (kind, seed, dict of name -> ndarray).
    """
    if not os.path.isfile(path):
        raise MissingArtifactError(path, hint="checkpoint not found")
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != "elugcn-checkpoint v1":
        raise ValueError(f"{path}: not a recognized checkpoint file")
    kind = lines[1].split(" ", 1)[1]
    seed = int(lines[2].split(" ", 1)[1])
    matrices = {}
    pos = 3
    while pos < len(lines):
        tag, name, rows, cols = lines[pos].split()
        if tag != "matrix":
            raise ValueError(f"{path}: unexpected checkpoint line {pos + 1}")
        rows, cols = int(rows), int(cols)
        block = lines[pos + 1 : pos + 1 + rows]
        matrices[name] = np.array(
            [[float(tok) for tok in line.split()] for line in block]
        ).reshape(rows, cols)
        pos += 1 + rows
    return kind, seed, matrices


def save_mlp(path, model, seed):
    write_checkpoint(path, "mlp", seed, {"theta1": model.theta1, "theta2": model.theta2})


def load_mlp(path):
    kind, seed, mats = read_checkpoint(path)
    if kind != "mlp":
        raise ValueError(f"{path}: expected an mlp checkpoint, found kind={kind!r}")
    return MlpModel(theta1=mats["theta1"], theta2=mats["theta2"]), seed
