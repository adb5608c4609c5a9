"""Evaluation metrics: accuracies, loss-gap series, block-mass fraction."""

import numpy as np


def accuracy(pred, truth, idx=None):
    """Fraction of correct predictions, optionally restricted to ``idx``.

    Returns None on an empty evaluation set instead of zero.
    """
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if idx is not None:
        idx = np.asarray(idx, dtype=np.int64)
        if idx.size == 0:
            return None
        pred = pred[idx]
        truth = truth[idx]
    if pred.size == 0:
        return None
    return float(np.mean(pred == truth))


def generalization_gap(train_losses, val_losses):
    """Per-epoch |val - train| loss plus its tail mean.

    The summary scalar averages the last fifth of the series (at least
    one entry); an empty series yields ([], None).
    """
    series = [abs(v - t) for t, v in zip(train_losses, val_losses)]
    if not series:
        return [], None
    tail = series[-max(1, len(series) // 5):]
    return series, float(np.mean(tail))


def intra_class_mass_fraction(s_sparse, labels):
    """Share of absolute edge mass connecting same-class node pairs."""
    coo = s_sparse.tocoo()
    if coo.nnz == 0:
        return 0.0
    labels = np.asarray(labels)
    mass = np.abs(coo.data)
    same = labels[coo.row] == labels[coo.col]
    total = float(mass.sum())
    return float(mass[same].sum() / total) if total > 0 else 0.0
