"""Split unlabeled nodes by agreement between GCN and label propagation.

A node that the trained GCN classifies the same way label propagation
does is treated as making effective use of the training labels (ELU);
disagreement marks it NELU. Nodes that propagation never reaches carry no
label signal at all and are tracked separately, though downstream
contrastive training treats them like NELU nodes.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .propagation import NO_SIGNAL


@dataclass(frozen=True)
class EluPartition:
    """Disjoint unlabeled-node sets plus the predictions that formed them."""

    v_elu: np.ndarray
    v_nelu: np.ndarray
    no_signal: np.ndarray
    gcn_pred: np.ndarray
    lpa_pred: np.ndarray

    def contrast_negatives(self):
        """NELU plus unreached nodes: the mismatch side of the contrast."""
        return np.sort(np.concatenate([self.v_nelu, self.no_signal]))

    @property
    def unlabeled_count(self):
        return len(self.v_elu) + len(self.v_nelu) + len(self.no_signal)


def partition(gcn_pred, lpa_pred, labels):
    """Assign every non-train node to exactly one of ELU/NELU/NOSIG."""
    gcn_pred = np.asarray(gcn_pred, dtype=np.int64)
    lpa_pred = np.asarray(lpa_pred, dtype=np.int64)
    if gcn_pred.shape != lpa_pred.shape:
        raise ValueError(
            f"prediction arrays disagree in length: {gcn_pred.shape} vs {lpa_pred.shape}"
        )
    if len(gcn_pred) != labels.n:
        raise ValueError(f"expected {labels.n} predictions, got {len(gcn_pred)}")
    unlabeled = labels.unlabeled_nodes()
    reached = lpa_pred[unlabeled] != NO_SIGNAL
    agree = gcn_pred[unlabeled] == lpa_pred[unlabeled]
    return EluPartition(
        v_elu=unlabeled[reached & agree],
        v_nelu=unlabeled[reached & ~agree],
        no_signal=unlabeled[~reached],
        gcn_pred=gcn_pred,
        lpa_pred=lpa_pred,
    )


def partition_report(part, truth, eval_idx=None):
    """Set proportions and per-set accuracy of the GCN predictions.

    Accuracies are computed over nodes that are both in the set and in
    ``eval_idx`` (the test split by default); an empty intersection
    reports the accuracy as absent (None), not zero.
    """
    total = part.unlabeled_count
    if eval_idx is None:
        eval_idx = truth.test
    eval_set = set(int(i) for i in eval_idx)

    def acc_over(nodes):
        nodes = [v for v in nodes if int(v) in eval_set and truth.labels[v] >= 0]
        if not nodes:
            return None
        nodes = np.asarray(nodes)
        return float(np.mean(part.gcn_pred[nodes] == truth.labels[nodes]))

    return {
        "n_elu": len(part.v_elu),
        "n_nelu": len(part.v_nelu),
        "n_nosig": len(part.no_signal),
        "proportion_nelu": len(part.v_nelu) / total if total else 0.0,
        "proportion_nosig": len(part.no_signal) / total if total else 0.0,
        "acc_elu": acc_over(part.v_elu),
        "acc_nelu": acc_over(part.v_nelu),
    }


def write_partition_csv(path, part):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node_id", "gcn_pred", "lpa_pred", "set"])
        rows = [(v, "ELU") for v in part.v_elu]
        rows += [(v, "NELU") for v in part.v_nelu]
        rows += [(v, "NOSIG") for v in part.no_signal]
        for v, name in sorted(rows):
            writer.writerow([int(v), int(part.gcn_pred[v]), int(part.lpa_pred[v]), name])


def read_partition_csv(path, n):
    """Rebuild an EluPartition from its CSV artifact.

    Prediction entries for nodes absent from the file (the train split)
    are filled with ``NO_SIGNAL``.
    """
    sets = {"ELU": [], "NELU": [], "NOSIG": []}
    gcn_pred = np.full(n, NO_SIGNAL, dtype=np.int64)
    lpa_pred = np.full(n, NO_SIGNAL, dtype=np.int64)
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.DictReader(fh):
            v = int(row["node_id"])
            gcn_pred[v] = int(row["gcn_pred"])
            lpa_pred[v] = int(row["lpa_pred"])
            sets[row["set"]].append(v)
    return EluPartition(
        v_elu=np.asarray(sorted(sets["ELU"]), dtype=np.int64),
        v_nelu=np.asarray(sorted(sets["NELU"]), dtype=np.int64),
        no_signal=np.asarray(sorted(sets["NOSIG"]), dtype=np.int64),
        gcn_pred=gcn_pred,
        lpa_pred=lpa_pred,
    )
