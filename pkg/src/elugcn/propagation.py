"""Label propagation with clamping and a walk-enumeration influence oracle.

Propagation multiplies the current state by a graph operator and resets the
clamped rows to their targets after every step. The oracle recomputes the
same per-class scores by explicitly enumerating weighted walks, which keeps
it independent of the matrix-product code path it is used to check.
"""

from dataclasses import dataclass

import numpy as np

from .graphdata import normalize, operator_matrix

#: Prediction sentinel for nodes never reached by any label mass.
NO_SIGNAL = -1

#: Node-count guard for the exponential walk enumeration.
ORACLE_MAX_NODES = 20


@dataclass(frozen=True)
class PropagationState:
    """Propagated label mass ``q`` (n-by-c) after ``step`` iterations."""

    q: np.ndarray
    step: int
    clamped: np.ndarray


def lpa(op, y, clamped, k):
    """Run ``k`` multiply-then-clamp propagation steps.

    Parameters
    ----------
    op : NormalizedAdjacency, sparse matrix or ndarray
        Propagation operator, n-by-n.
    y : ndarray, shape (n, c)
        Initial label mass; clamped rows are reset to these values after
        every step.
    clamped : array-like of int
        Row indices to clamp; must carry label mass in ``y``.
    k : int
        Number of steps, at least 1.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    mat = operator_matrix(op)
    y = np.asarray(y, dtype=np.float64)
    if mat.shape[1] != y.shape[0]:
        raise ValueError(f"operator shape {mat.shape} does not match y rows {y.shape[0]}")
    clamped = np.asarray(clamped, dtype=np.int64)
    if clamped.size and not np.abs(y[clamped]).sum(axis=1).all():
        raise ValueError("clamped rows must carry label mass in y")
    q = y.copy()
    for _ in range(k):
        q = mat @ q
        if clamped.size:
            q[clamped] = y[clamped]
    return PropagationState(q=q, step=k, clamped=clamped)


def lpa_predict(state):
    """Per-node argmax class; all-zero rows map to ``NO_SIGNAL``.

    Ties break toward the lowest class index, matching the global
    prediction rule used across the package.
    """
    q = state.q if isinstance(state, PropagationState) else np.asarray(state)
    pred = np.argmax(q, axis=1).astype(np.int64)
    pred[np.all(q == 0.0, axis=1)] = NO_SIGNAL
    return pred


def accumulated_lpa_scores(op, y, k):
    """Sum of the unclamped propagation states over steps 1..k.

    Entry (v, l) equals the total weight of walks of length 1..k from any
    labeled node of class l to v, the quantity the walk oracle enumerates.
    """
    mat = operator_matrix(op)
    q = np.asarray(y, dtype=np.float64).copy()
    total = np.zeros_like(q)
    for _ in range(k):
        q = mat @ q
        total += q
    return total


def influence_oracle(g, labels, target, class_index, k):
    """Walk-enumerated influence of one class's labeled nodes on ``target``.

    Enumerates every walk of length 1..k from ``target`` over the
    self-loop-augmented normalized operator and accumulates the product of
    step weights whenever the walk ends on a train node of the class.
    Exponential in ``k``; guarded to graphs with at most
    ``ORACLE_MAX_NODES`` nodes.
    """
    scores = influence_scores(g, labels, target, k)
    return float(scores[class_index])


def influence_scores(g, labels, target, k):
    """Per-class walk-influence scores for ``target`` (see influence_oracle)."""
    if g.n > ORACLE_MAX_NODES:
        raise ValueError(f"walk enumeration limited to n <= {ORACLE_MAX_NODES}, got {g.n}")
    mat = normalize(g).matrix.tocsr()
    neighbor_ids = [mat.indices[mat.indptr[i] : mat.indptr[i + 1]] for i in range(g.n)]
    neighbor_ws = [mat.data[mat.indptr[i] : mat.indptr[i + 1]] for i in range(g.n)]
    source_class = np.full(g.n, NO_SIGNAL, dtype=np.int64)
    source_class[labels.train] = labels.labels[labels.train]

    scores = np.zeros(labels.c)

    def extend(node, depth, prod):
        for nb, w in zip(neighbor_ids[node], neighbor_ws[node]):
            p = prod * w
            cls = source_class[nb]
            if cls != NO_SIGNAL:
                scores[cls] += p
            if depth + 1 < k:
                extend(nb, depth + 1, p)

    extend(target, 0, 1.0)
    return scores
