"""Graph, feature and label containers plus dataset file I/O.

Dataset directory layout (all plain text, 0-indexed node ids):

* ``graph.edges``   -- one ``src dst [weight]`` per line, ``#`` comments.
* ``features.txt``  -- header ``n d`` then n rows of d decimals.
* ``labels.txt``    -- n lines, one class index per line, ``-1`` = unlabeled.
* ``train.idx`` / ``val.idx`` / ``test.idx`` -- one node index per line.

``save_dataset`` writes the same formats, so load(save(x)) is an identity.
"""

import os
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError, DatasetFormatError, MissingArtifactError

UNLABELED = -1

DATASET_FILES = (
    "graph.edges",
    "features.txt",
    "labels.txt",
    "train.idx",
    "val.idx",
    "test.idx",
)


@dataclass(frozen=True)
class SparseGraph:
    """Undirected weighted graph stored as symmetrized arc triplets.

    Every undirected edge appears as both (u, v) and (v, u); self-loops
    appear once. Arcs are sorted by (src, dst) and duplicate pairs have
    been merged by summing weights.
    """

    n: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    @classmethod
    def from_edges(cls, n, edges):
        """Build from one-directional (u, v, w) triples, mirroring each."""
        srcs, dsts, ws = [], [], []
        for u, v, w in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge ({u},{v}) out of range for n={n}")
            w = float(w)
            if not np.isfinite(w):
                raise ValueError(f"edge ({u},{v}) has non-finite weight")
            if w < 0:
                raise ValueError(f"edge ({u},{v}) has negative weight {w}")
            srcs.append(u)
            dsts.append(v)
            ws.append(w)
            if u != v:
                srcs.append(v)
                dsts.append(u)
                ws.append(w)
        if srcs:
            coo = sp.coo_matrix(
                (np.asarray(ws, dtype=np.float64), (srcs, dsts)), shape=(n, n)
            )
            coo.sum_duplicates()
            csr = coo.tocsr()
            csr.sort_indices()
            coo = csr.tocoo()
            src, dst, weight = coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data
        else:
            src = np.empty(0, dtype=np.int64)
            dst = np.empty(0, dtype=np.int64)
            weight = np.empty(0, dtype=np.float64)
        return cls(n=n, src=src, dst=dst, weight=weight)

    def __eq__(self, other):
        if not isinstance(other, SparseGraph):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.src, other.src)
            and np.array_equal(self.dst, other.dst)
            and np.array_equal(self.weight, other.weight)
        )

    def matrix(self):
        """Raw adjacency as CSR (no self-loop augmentation)."""
        return sp.csr_matrix(
            (self.weight, (self.src, self.dst)), shape=(self.n, self.n)
        )

    def neighbors(self, node):
        mask = self.src == node
        return self.dst[mask], self.weight[mask]

    @property
    def num_undirected_edges(self):
        loops = int(np.sum(self.src == self.dst))
        return (len(self.src) - loops) // 2 + loops


@dataclass(frozen=True)
class NormalizedAdjacency:
    """Symmetrically normalized adjacency with self-loops added once.

    ``matrix[i, j] = a~_ij / sqrt(d~_i * d~_j)`` where ``a~`` is the raw
    adjacency plus the identity and ``d~`` its row sums. Every diagonal
    entry is present and positive; the spectrum lies in [-1, 1].
    """

    matrix: sp.csr_matrix

    @property
    def n(self):
        return self.matrix.shape[0]


def operator_matrix(op):
    """Coerce a propagation operator to something supporting ``@``."""
    if isinstance(op, NormalizedAdjacency):
        return op.matrix
    return op


def normalize(g: SparseGraph) -> NormalizedAdjacency:
    """Symmetric degree normalization of the self-loop-augmented graph."""
    n = g.n
    with_loops = g.matrix() + sp.eye(n, format="csr")
    degrees = np.asarray(with_loops.sum(axis=1)).ravel()
    inv_sqrt = 1.0 / np.sqrt(degrees)
    coo = with_loops.tocoo()
    vals = coo.data * inv_sqrt[coo.row] * inv_sqrt[coo.col]
    mat = sp.csr_matrix((vals, (coo.row, coo.col)), shape=(n, n))
    mat.sort_indices()
    return NormalizedAdjacency(matrix=mat)


@dataclass(frozen=True)
class FeatureMatrix:
    """Dense n-by-d node feature matrix."""

    x: np.ndarray

    @property
    def n(self):
        return self.x.shape[0]

    @property
    def d(self):
        return self.x.shape[1]


@dataclass(frozen=True)
class LabelSet:
    """Per-node class labels with disjoint train/val/test splits.

    ``labels[v] == UNLABELED`` marks nodes without ground truth. Only the
    train split feeds the one-hot matrix; val/test labels are held out as
    evaluation truth.
    """

    labels: np.ndarray
    c: int
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        n = len(self.labels)
        for name, idx in (("train", self.train), ("val", self.val), ("test", self.test)):
            if len(idx) and (idx.min() < 0 or idx.max() >= n):
                raise ConfigError(f"{name} split index out of range [0, {n})")
        t, v, s = set(self.train), set(self.val), set(self.test)
        if t & v or t & s or v & s:
            raise ConfigError("train/val/test splits overlap")
        if any(self.labels[i] == UNLABELED for i in self.train):
            raise ConfigError("every train node must carry a concrete label")

    @property
    def n(self):
        return len(self.labels)

    def onehot(self):
        """n-by-c matrix with one-hot rows on the train split, zero elsewhere."""
        y = np.zeros((self.n, self.c))
        y[self.train, self.labels[self.train]] = 1.0
        return y

    def unlabeled_nodes(self):
        """All nodes outside the train split (the algorithm's view)."""
        mask = np.ones(self.n, dtype=bool)
        mask[self.train] = False
        return np.nonzero(mask)[0]


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------


def _require(path):
    if not os.path.isfile(path):
        raise MissingArtifactError(path, hint="dataset file not found")
    return path


def _data_lines(path):
    """Yield (line_no, payload) with comments stripped and blanks skipped."""
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            payload = raw.split("#", 1)[0].strip()
            if payload:
                yield line_no, payload


def _parse_int(token, path, line_no, what):
    try:
        return int(token)
    except ValueError:
        raise DatasetFormatError(path, line_no, f"invalid {what}: {token!r}") from None


def _parse_float(token, path, line_no, what):
    try:
        value = float(token)
    except ValueError:
        raise DatasetFormatError(path, line_no, f"invalid {what}: {token!r}") from None
    if not np.isfinite(value):
        raise DatasetFormatError(path, line_no, f"non-finite {what}: {token!r}")
    return value


def _load_features(path):
    lines = list(_data_lines(_require(path)))
    if not lines:
        raise DatasetFormatError(path, 1, "empty features file")
    header_no, header = lines[0]
    parts = header.split()
    if len(parts) != 2:
        raise DatasetFormatError(path, header_no, "header must be 'n d'")
    n = _parse_int(parts[0], path, header_no, "node count")
    d = _parse_int(parts[1], path, header_no, "feature dimension")
    if len(lines) - 1 != n:
        raise DatasetFormatError(
            path, header_no, f"row-count mismatch: header says n={n}, found {len(lines) - 1} rows"
        )
    x = np.empty((n, d))
    for row, (line_no, payload) in enumerate(lines[1:]):
        tokens = payload.split()
        if len(tokens) != d:
            raise DatasetFormatError(
                path, line_no, f"expected {d} values, found {len(tokens)}"
            )
        x[row] = [_parse_float(t, path, line_no, "feature value") for t in tokens]
    return FeatureMatrix(x=x)


def _load_labels(path, n):
    entries = list(_data_lines(_require(path)))
    if len(entries) != n:
        raise DatasetFormatError(
            path,
            entries[-1][0] if entries else 1,
            f"row-count mismatch: expected {n} labels, found {len(entries)}",
        )
    labels = np.empty(n, dtype=np.int64)
    for row, (line_no, payload) in enumerate(entries):
        value = _parse_int(payload, path, line_no, "label")
        if value < UNLABELED:
            raise DatasetFormatError(path, line_no, f"label {value} below -1")
        labels[row] = value
    return labels


def _load_index(path, n):
    out = []
    for line_no, payload in _data_lines(_require(path)):
        idx = _parse_int(payload, path, line_no, "node index")
        if not 0 <= idx < n:
            raise DatasetFormatError(path, line_no, f"index {idx} out of range [0, {n})")
        out.append(idx)
    return np.asarray(out, dtype=np.int64)


def _load_edges(path, n):
    edges = []
    for line_no, payload in _data_lines(_require(path)):
        tokens = payload.split()
        if len(tokens) not in (2, 3):
            raise DatasetFormatError(path, line_no, "expected 'src dst [weight]'")
        u = _parse_int(tokens[0], path, line_no, "source index")
        v = _parse_int(tokens[1], path, line_no, "target index")
        for name, idx in (("source", u), ("target", v)):
            if not 0 <= idx < n:
                raise DatasetFormatError(
                    path, line_no, f"{name} index {idx} out of range [0, {n})"
                )
        w = _parse_float(tokens[2], path, line_no, "edge weight") if len(tokens) == 3 else 1.0
        if w < 0:
            raise DatasetFormatError(path, line_no, f"negative edge weight {w}")
        edges.append((u, v, w))
    return edges


def load_dataset(directory):
    """Load a dataset directory into (SparseGraph, FeatureMatrix, LabelSet)."""
    features = _load_features(os.path.join(directory, "features.txt"))
    n = features.n
    labels = _load_labels(os.path.join(directory, "labels.txt"), n)
    graph = SparseGraph.from_edges(n, _load_edges(os.path.join(directory, "graph.edges"), n))
    train = _load_index(os.path.join(directory, "train.idx"), n)
    val = _load_index(os.path.join(directory, "val.idx"), n)
    test = _load_index(os.path.join(directory, "test.idx"), n)
    c = int(labels.max()) + 1 if labels.max() >= 0 else 0
    if c == 0:
        raise DatasetFormatError(
            os.path.join(directory, "labels.txt"), 1, "no labeled node in dataset"
        )
    label_set = LabelSet(labels=labels, c=c, train=train, val=val, test=test)
    return graph, features, label_set


def save_dataset(directory, graph, features, labels):
    """Write a dataset directory in the loadable text format."""
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "graph.edges"), "w", encoding="utf-8") as fh:
        for u, v, w in zip(graph.src, graph.dst, graph.weight):
            if u > v:
                continue  # each undirected edge written once
            if w == 1.0:
                fh.write(f"{u} {v}\n")
            else:
                fh.write(f"{u} {v} {float(w)!r}\n")
    with open(os.path.join(directory, "features.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"{features.n} {features.d}\n")
        for row in features.x:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    with open(os.path.join(directory, "labels.txt"), "w", encoding="utf-8") as fh:
        fh.writelines(f"{int(v)}\n" for v in labels.labels)
    for name, idx in (("train", labels.train), ("val", labels.val), ("test", labels.test)):
        with open(os.path.join(directory, f"{name}.idx"), "w", encoding="utf-8") as fh:
            fh.writelines(f"{int(v)}\n" for v in idx)


# ---------------------------------------------------------------------------
# synthetic planted-partition generator
# ---------------------------------------------------------------------------


def gen_sbm(
    out_dir,
    n_per_class,
    c,
    p_in,
    p_out,
    feat_dim,
    feat_shift,
    seed,
    train_per_class=20,
    val_per_class=30,
    informative_fraction=1.0,
    pattern="uniform",
):
    """Generate a planted-partition dataset on disk and return it loaded.

    Nodes 0..n_per_class-1 belong to class 0, the next block to class 1,
    and so on. Same-class pairs connect with probability ``p_in``; with
    the default ``uniform`` pattern every cross-class pair uses ``p_out``
    (``p_out > p_in`` gives a heterophilic fixture). The ``ring`` pattern
    applies ``p_out`` only to adjacent classes on a cycle and ``p_in``
    elsewhere, giving the structured disassortativity of real web-graph
    data rather than pure noise mixing.

    Features are unit Gaussian noise around a class mean placed at
    ``feat_shift`` along the class's own coordinate axis; when
    ``informative_fraction`` is below 1, only that share of nodes (drawn
    per class) carries the shifted mean and the rest are pure noise,
    which mimics the uneven feature quality of real citation graphs.
    Deterministic for a fixed seed, byte-for-byte.
    """
    for name, p in (("p_in", p_in), ("p_out", p_out)):
        if not 0.0 <= p <= 1.0:
            raise ConfigError(f"{name} must be in [0, 1], got {p}")
    if c < 2:
        raise ConfigError(f"need at least 2 classes, got {c}")
    if feat_dim < c:
        raise ConfigError(f"feat_dim must be >= c to place class means, got {feat_dim} < {c}")
    if train_per_class + val_per_class >= n_per_class:
        raise ConfigError("train_per_class + val_per_class must leave test nodes")
    if not 0.0 < informative_fraction <= 1.0:
        raise ConfigError(
            f"informative_fraction must be in (0, 1], got {informative_fraction}"
        )

    if pattern not in ("uniform", "ring"):
        raise ConfigError(f"pattern must be 'uniform' or 'ring', got {pattern!r}")

    n = n_per_class * c
    node_class = np.repeat(np.arange(c), n_per_class)
    rng = np.random.default_rng(np.random.SeedSequence(seed))

    # Upper-triangle coin flips, blockwise probability by class pair.
    if pattern == "uniform":
        pair_prob = np.full((c, c), p_out)
        np.fill_diagonal(pair_prob, p_in)
    else:
        pair_prob = np.full((c, c), p_in)
        for k in range(c):
            pair_prob[k, (k + 1) % c] = p_out
            pair_prob[k, (k - 1) % c] = p_out
    prob = pair_prob[node_class[:, None], node_class[None, :]]
    draws = rng.random((n, n))
    upper = np.triu(draws < prob, k=1)
    us, vs = np.nonzero(upper)
    edges = [(int(u), int(v), 1.0) for u, v in zip(us, vs)]
    graph = SparseGraph.from_edges(n, edges)

    means = np.zeros((c, feat_dim))
    means[np.arange(c), np.arange(c)] = feat_shift
    shifted = means[node_class]
    if informative_fraction < 1.0:
        n_inf = int(round(informative_fraction * n_per_class))
        informative = np.zeros(n, dtype=bool)
        for k in range(c):
            members = np.nonzero(node_class == k)[0]
            informative[rng.permutation(members)[:n_inf]] = True
        shifted = np.where(informative[:, None], shifted, 0.0)
    x = shifted + rng.standard_normal((n, feat_dim))
    features = FeatureMatrix(x=x)

    train, val, test = [], [], []
    for k in range(c):
        members = np.nonzero(node_class == k)[0]
        order = rng.permutation(members)
        train.extend(order[:train_per_class])
        val.extend(order[train_per_class : train_per_class + val_per_class])
        test.extend(order[train_per_class + val_per_class :])
    label_set = LabelSet(
        labels=node_class.astype(np.int64),
        c=c,
        train=np.sort(np.asarray(train, dtype=np.int64)),
        val=np.sort(np.asarray(val, dtype=np.int64)),
        test=np.sort(np.asarray(test, dtype=np.int64)),
    )

    save_dataset(out_dir, graph, features, label_set)
    return load_dataset(out_dir)
