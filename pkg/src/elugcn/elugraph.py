"""Construction of the learned label-utilization graph.

The graph is the minimizer of a ridge-regularized alignment between
propagated label mass and the pretrained class probabilities. The
production path iterates a low-rank update that never forms an n-by-n
matrix until the single final assembly; a dense closed-form route is kept
alongside as the oracle for equivalence and optimality tests.
"""

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NumericError
from .numerics import small_inverse, woodbury_apply

#: Size guard for routes that materialize an n-by-n dense matrix.
DENSE_GUARD = 2048

#: Row-block size for the final assembly product.
ASSEMBLY_BLOCK_ROWS = 512


@dataclass
class EluGraphResult:
    """Sparsified learned graph plus everything needed to audit the build."""

    s_sparse: sp.csr_matrix
    q_final: np.ndarray
    expanded_label_rows: np.ndarray
    build_stats: dict = field(default_factory=dict)


def expand_labels(y, part, gcn_probs):
    """Add one-hot pseudo-label rows for every ELU node.

    Returns the widened label matrix and the clamp row set (original
    labeled rows plus the ELU nodes). Original label rows are untouched.
    """
    y_expanded = np.asarray(y, dtype=np.float64).copy()
    if len(part.v_elu):
        pseudo = np.argmax(gcn_probs[part.v_elu], axis=1)
        y_expanded[part.v_elu] = 0.0
        y_expanded[part.v_elu, pseudo] = 1.0
    clamp_set = np.nonzero(np.abs(y_expanded).sum(axis=1) > 0.0)[0]
    return y_expanded, clamp_set


def alignment_objective(s, h, q, beta):
    """Ridge-regularized alignment value ||q - s h||_F^2 + beta * sum(s^2)."""
    resid = q - s @ h
    return float(np.sum(resid * resid) + beta * np.sum(s * s))


def closed_form_s(h, q, beta, max_n=DENSE_GUARD):
    """Dense global minimizer of the alignment objective (oracle route).

    The stationarity condition of ``||q - s h||^2 + beta ||s||^2`` gives
    ``S (H H^T + beta I) = Q H^T``, solved directly here; O(n^3) time and
    O(n^2) memory, so guarded to small instances.
    """
    h = np.asarray(h, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    n = h.shape[0]
    if n > max_n:
        raise ValueError(f"dense closed form limited to n <= {max_n}, got {n}")
    # gram is symmetric, so solve against the transpose.
    gram = h @ h.T + beta * np.eye(n)
    return np.linalg.solve(gram, (q @ h.T).T).T


def q_update(h, q_prev, beta, clamp_set, y_expanded):
    """One low-rank propagation step with label clamping.

    Applies the current alignment solution to the propagated mass:
    ``Q_next = Q (H^T ((H H^T + beta I)^{-1} Q))`` at O(n c^2 + c^3) cost,
    then overwrites the clamp rows with their targets exactly.
    """
    t = woodbury_apply(h, beta, q_prev)
    q_next = q_prev @ (h.T @ t)
    q_next[clamp_set] = y_expanded[clamp_set]
    return q_next


def assembly_right_factor(h, q, beta):
    """c-by-n right factor of the final graph product ``Q @ right``.

    Equals ``(1/beta) H^T - (1/beta^2) (H^T H) (I_c + (1/beta) H^T H)^{-1} H^T``.
    """
    gram = h.T @ h
    core = small_inverse(np.eye(h.shape[1]) + gram / beta)
    mid = gram @ core / (beta * beta)
    return h.T / beta - mid @ h.T


def assemble_s_star(h, q, beta, block_rows=ASSEMBLY_BLOCK_ROWS, consume=None):
    """Final n-by-n graph as row blocks of ``q`` against the right factor.

    With ``consume`` given, each (start, block) pair is handed to the
    callback and nothing is stored (benchmark/streaming mode); otherwise
    the full dense matrix is returned.
    """
    right = assembly_right_factor(h, q, beta)
    n = q.shape[0]
    out = None if consume is not None else np.empty((n, n))
    scratch = np.empty((min(block_rows, n), n)) if consume is not None else None
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        if consume is not None:
            block = scratch[: stop - start]
            np.matmul(q[start:stop], right, out=block)
            consume(start, block)
        else:
            np.matmul(q[start:stop], right, out=out[start:stop])
    return out


def sparsify(s_dense, keep_fraction):
    """Zero all entries below the keep-fraction quantile of |values|.

    Retained values are unchanged. The retained count matches
    ``round(keep_fraction * total)`` up to ties at the threshold.
    """
    if not 0.0 < keep_fraction <= 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1], got {keep_fraction}")
    s_dense = np.asarray(s_dense, dtype=np.float64)
    total = s_dense.size
    target = int(round(keep_fraction * total))
    target = min(max(target, 1), total)
    flat_abs = np.abs(s_dense).ravel()
    if target == total:
        threshold = 0.0
        mask = np.ones_like(s_dense, dtype=bool)
    else:
        threshold = float(np.partition(flat_abs, total - target)[total - target])
        mask = np.abs(s_dense) >= threshold
    rows, cols = np.nonzero(mask)
    mat = sp.csr_matrix((s_dense[rows, cols], (rows, cols)), shape=s_dense.shape)
    return mat, threshold


def build_elu_graph(h, y, part, gcn_probs, beta, k, keep_fraction, clip_negative=False):
    """Full build: label expansion, k clamped low-rank steps, assembly, sparsify.

    Parameters
    ----------
    h : ndarray, shape (n, c)
        Class probabilities from the pretrained feature model.
    y : ndarray, shape (n, c)
        One-hot training labels.
    part : EluPartition
        Supplies the pseudo-label rows for the expansion.
    gcn_probs : ndarray, shape (n, c)
        Probabilities backing the pseudo labels.
    beta : float
        Ridge shift, > 0.
    k : int
        Propagation steps, >= 1.
    keep_fraction : float
        Fraction of entries retained after thresholding.
    clip_negative : bool
        Drop negative retained entries (ablation variant).
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    h = np.asarray(h, dtype=np.float64)
    y_expanded, clamp_set = expand_labels(y, part, gcn_probs)
    q = y_expanded.copy()
    iterations = []
    for step in range(k):
        t0 = time.perf_counter()
        q = q_update(h, q, beta, clamp_set, y_expanded)
        if not np.isfinite(q).all():
            raise NumericError(
                f"propagated mass diverged at step {step + 1} of {k}; "
                f"beta={beta} is too small for this problem scale"
            )
        iterations.append(
            {
                "time_s": time.perf_counter() - t0,
                "q_nonzero_fraction": float(np.count_nonzero(q) / q.size),
                "clamp_max_abs_dev": float(
                    np.max(np.abs(q[clamp_set] - y_expanded[clamp_set]))
                    if len(clamp_set)
                    else 0.0
                ),
            }
        )

    t0 = time.perf_counter()
    s_dense = assemble_s_star(h, q, beta)
    assembly_time = time.perf_counter() - t0
    s_sparse, threshold = sparsify(s_dense, keep_fraction)
    if clip_negative:
        s_sparse.data[s_sparse.data < 0.0] = 0.0
        s_sparse.eliminate_zeros()

    stats = {
        "n": int(h.shape[0]),
        "k": int(k),
        "beta": float(beta),
        "keep_fraction": float(keep_fraction),
        "clip_negative": bool(clip_negative),
        "threshold": threshold,
        "kept_entries": int(s_sparse.nnz),
        "density": float(s_sparse.nnz / (h.shape[0] ** 2)),
        "expanded_rows": int(len(clamp_set)),
        "iterations": iterations,
        "assembly_time_s": assembly_time,
    }
    return EluGraphResult(
        s_sparse=s_sparse,
        q_final=q,
        expanded_label_rows=clamp_set,
        build_stats=stats,
    )


def build_dense_reference(h, y, part, gcn_probs, beta, k, max_n=DENSE_GUARD):
    """Oracle build that runs every step through the dense closed form.

    Returns the pre-threshold graph and the final propagated mass; used to
    validate the low-rank route.
    """
    h = np.asarray(h, dtype=np.float64)
    y_expanded, clamp_set = expand_labels(y, part, gcn_probs)
    q = y_expanded.copy()
    for _ in range(k):
        s_i = closed_form_s(h, q, beta, max_n=max_n)
        q = s_i @ q
        q[clamp_set] = y_expanded[clamp_set]
    return closed_form_s(h, q, beta, max_n=max_n), q


def propagation_operator(s_sparse, mode="symnorm"):
    """Condition the learned graph for use as a GCN layer operator.

    The raw matrix is a regression solution whose scale tracks the ridge
    shift, so the training step normalizes it like any other adjacency
    before convolving with it. Modes:

    * ``raw``     -- use the thresholded matrix as is.
    * ``rownorm`` -- divide each row by its absolute sum (empty rows stay
      empty); signs are preserved.
    * ``symnorm`` -- add self-loops and scale symmetrically by the
      absolute-degree square roots, mirroring the treatment of the
      original adjacency (default).
    """
    if mode == "raw":
        return s_sparse
    if mode == "rownorm":
        mat = s_sparse.tocsr().copy()
        sums = np.abs(mat).sum(axis=1).A.ravel()
        inv = np.divide(1.0, sums, out=np.zeros_like(sums), where=sums > 1e-12)
        return (sp.diags(inv) @ mat).tocsr()
    if mode == "symnorm":
        mat = (s_sparse + sp.eye(s_sparse.shape[0], format="csr")).tocsr()
        deg = np.abs(mat).sum(axis=1).A.ravel()
        inv = 1.0 / np.sqrt(np.maximum(deg, 1e-12))
        return (sp.diags(inv) @ mat @ sp.diags(inv)).tocsr()
    raise ValueError(f"unknown operator mode {mode!r}")


# ---------------------------------------------------------------------------
# sparse triplet I/O
# ---------------------------------------------------------------------------


def save_triplets(path, s_sparse):
    """Write 'i j value' lines in row-major order."""
    coo = s_sparse.tocoo()
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# shape {s_sparse.shape[0]} {s_sparse.shape[1]}\n")
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{i} {j} {float(v)!r}\n")


def load_triplets(path):
    rows, cols, vals = [], [], []
    shape = None
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts and parts[0] == "shape":
                    shape = (int(parts[1]), int(parts[2]))
                continue
            i, j, v = line.split()
            rows.append(int(i))
            cols.append(int(j))
            vals.append(float(v))
    if shape is None:
        raise ValueError(f"{path}: missing '# shape n n' header")
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)
