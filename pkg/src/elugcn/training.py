"""Full-batch training loops for the single- and dual-branch models.

Both loops run plain momentum gradient descent from a seeded init and
return the snapshot with the best validation accuracy. Per-epoch entries
record the state *after* that epoch's update; the reported losses are the
cross-entropy components, which is also what the loss-gap metric uses
(the contrastive and decay terms are label-free and cancel in the gap).
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .contrastive import (
    ProjectionHead,
    contrastive_loss_grad,
    fused_ce_grad,
    head_backward,
    init_head,
    project,
)
from .errors import NumericError
from .gcn import (
    _forward_branch,
    gcn_backward,
    gcn_ce_loss_grad,
    init_gcn,
    predict,
)
from .mlp import cross_entropy_probs
from .metrics import accuracy, generalization_gap
from .numerics import softmax_rows


@dataclass
class RunReport:
    """Per-epoch curves and final evaluation of one training run."""

    epochs: list = field(default_factory=list)
    final: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def loss_columns(self):
        pairs = [
            (e["train_loss"], e["val_loss"])
            for e in self.epochs
            if e["val_loss"] is not None
        ]
        train = [t for t, _ in pairs]
        val = [v for _, v in pairs]
        return train, val

    def gap_summary(self):
        train, val = self.loss_columns()
        _, summary = generalization_gap(train, val)
        return summary


def _epoch_entry(probs, targets, labels):
    train_loss, _ = cross_entropy_probs(probs, targets, labels.train)
    has_val = len(labels.val) > 0
    val_loss = cross_entropy_probs(probs, targets, labels.val)[0] if has_val else None
    pred = predict(probs)
    return {
        "train_loss": train_loss,
        "val_loss": val_loss,
        "gap": abs(val_loss - train_loss) if has_val else None,
        "train_acc": accuracy(pred, targets, labels.train),
        "val_acc": accuracy(pred, targets, labels.val),
    }


def train_single(a_hat, x, labels, cfg, seed):
    """Train the plain GCN; returns (best model, prediction array, report).

    ``cfg`` is a GcnConfig. Divergence (non-finite loss) raises
    NumericError.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    model = init_gcn(x.shape[1], cfg.hidden, labels.c, rng)
    targets = labels.labels
    v1 = np.zeros_like(model.w1)
    v2 = np.zeros_like(model.w2)

    def snapshot_metrics(m):
        probs = softmax_rows(_forward_branch(m, a_hat, a_hat, x).logits)
        return probs, _epoch_entry(probs, targets, labels)

    best = model.copy()
    _, entry = snapshot_metrics(model)
    best_val = entry["val_acc"]

    report = RunReport()
    started = time.perf_counter()
    for epoch in range(cfg.epochs):
        cache = _forward_branch(model, a_hat, a_hat, x)
        loss, dlogits = gcn_ce_loss_grad(cache.logits, targets, labels.train)
        if not np.isfinite(loss):
            raise NumericError(f"GCN training diverged at epoch {epoch}: loss={loss}")
        dw1, dw2 = gcn_backward(model, [cache], x, [dlogits])
        dw1 += cfg.weight_decay * model.w1
        v1 = cfg.momentum * v1 - cfg.lr * dw1
        v2 = cfg.momentum * v2 - cfg.lr * dw2
        model.w1 += v1
        model.w2 += v2

        probs, entry = snapshot_metrics(model)
        report.epochs.append(entry)
        if entry["val_acc"] is not None and (best_val is None or entry["val_acc"] > best_val):
            best = model.copy()
            best_val = entry["val_acc"]
    report.timings["train_s"] = time.perf_counter() - started

    probs, entry = snapshot_metrics(best)
    predictions = predict(probs)
    report.final = {
        "val_acc": best_val,
        "test_acc": accuracy(predictions, targets, labels.test),
        "train_acc": entry["train_acc"],
    }
    return best, predictions, report


def dual_probs(model, head, a_hat, s_star, x, eta_fuse):
    """Fused class probabilities of the two branches."""
    bar = _forward_branch(model, a_hat, a_hat, x)
    tilde = _forward_branch(model, s_star, a_hat, x)
    pb = softmax_rows(bar.logits)
    pt = softmax_rows(tilde.logits)
    return (1.0 - eta_fuse) * pb + eta_fuse * pt


def train_dual(a_hat, s_star, x, labels, part, gcn_cfg, con_cfg, seed):
    """Train the shared-weight two-branch model with the fused objective.

    Returns (model, head, prediction array, report). The branch weights
    and the projection head all step together under one momentum rule.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    model = init_gcn(x.shape[1], gcn_cfg.hidden, labels.c, rng)
    head = init_head(labels.c, con_cfg.proj_dim, rng)
    targets = labels.labels
    v1 = np.zeros_like(model.w1)
    v2 = np.zeros_like(model.w2)
    vp = np.zeros_like(head.wp)
    lam = con_cfg.lambda_
    eta = con_cfg.eta_fuse

    def snapshot_metrics(m, hd):
        probs = dual_probs(m, hd, a_hat, s_star, x, eta)
        return probs, _epoch_entry(probs, targets, labels)

    best_model = model.copy()
    best_head = ProjectionHead(wp=head.wp.copy())
    _, entry = snapshot_metrics(model, head)
    best_val = entry["val_acc"]

    report = RunReport()
    started = time.perf_counter()
    for epoch in range(gcn_cfg.epochs):
        bar = _forward_branch(model, a_hat, a_hat, x)
        tilde = _forward_branch(model, s_star, a_hat, x)
        ce, dh_bar, dh_tilde = fused_ce_grad(
            bar.logits, tilde.logits, targets, labels.train, eta
        )
        p_bar, p_tilde = project(head, bar.logits, tilde.logits)
        l_con, dp_bar, dp_tilde = contrastive_loss_grad(
            p_bar, p_tilde, part, con_cfg.tau, con_cfg.gamma
        )
        loss = ce + lam * l_con
        if not np.isfinite(loss):
            raise NumericError(f"dual training diverged at epoch {epoch}: loss={loss}")
        dwp, dh_bar_con, dh_tilde_con = head_backward(
            head, bar.logits, tilde.logits, p_bar, p_tilde, dp_bar, dp_tilde
        )
        dh_bar = dh_bar + lam * dh_bar_con
        dh_tilde = dh_tilde + lam * dh_tilde_con
        dw1, dw2 = gcn_backward(model, [bar, tilde], x, [dh_bar, dh_tilde])
        dw1 += gcn_cfg.weight_decay * model.w1
        dwp = lam * dwp

        v1 = gcn_cfg.momentum * v1 - gcn_cfg.lr * dw1
        v2 = gcn_cfg.momentum * v2 - gcn_cfg.lr * dw2
        vp = gcn_cfg.momentum * vp - gcn_cfg.lr * dwp
        model.w1 += v1
        model.w2 += v2
        head.wp += vp

        probs, entry = snapshot_metrics(model, head)
        entry["con_loss"] = l_con
        report.epochs.append(entry)
        if entry["val_acc"] is not None and (best_val is None or entry["val_acc"] > best_val):
            best_model = model.copy()
            best_head.wp = head.wp.copy()
            best_val = entry["val_acc"]
    report.timings["train_s"] = time.perf_counter() - started

    probs, entry = snapshot_metrics(best_model, best_head)
    predictions = predict(probs)
    report.final = {
        "val_acc": best_val,
        "test_acc": accuracy(predictions, targets, labels.test),
        "train_acc": entry["train_acc"],
        "acc_elu": accuracy(
            predictions, targets, np.intersect1d(part.v_elu, labels.test)
        ),
        "acc_nelu": accuracy(
            predictions, targets, np.intersect1d(part.v_nelu, labels.test)
        ),
    }
    return best_model, best_head, predictions, report
