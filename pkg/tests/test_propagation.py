import numpy as np
import pytest

from elugcn.graphdata import LabelSet, SparseGraph, normalize
from elugcn.propagation import (
    NO_SIGNAL,
    PropagationState,
    accumulated_lpa_scores,
    influence_oracle,
    influence_scores,
    lpa,
    lpa_predict,
)


def random_graph(rng, n, p=0.4):
    adj = np.triu((rng.random((n, n)) < p).astype(float), k=1)
    edges = [(int(i), int(j), 1.0) for i, j in zip(*np.nonzero(adj))]
    return SparseGraph.from_edges(n, edges)


def labels_for(graph, rng, c, n_labeled):
    train = rng.choice(graph.n, size=n_labeled, replace=False)
    labels = np.full(graph.n, -1, dtype=np.int64)
    labels[train] = rng.integers(0, c, size=n_labeled)
    rest = np.setdiff1d(np.arange(graph.n), train)
    return LabelSet(
        labels=labels, c=c, train=np.sort(train),
        val=rest[: len(rest) // 2], test=rest[len(rest) // 2 :],
    )


class TestLpa:
    def test_all_clamped_returns_y(self):
        g = SparseGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
        y = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0]])
        for k in (1, 4):
            state = lpa(normalize(g), y, [0, 1, 2], k)
            np.testing.assert_array_equal(state.q, y)

    def test_two_node_single_step(self):
        g = SparseGraph.from_edges(2, [(0, 1, 1.0)])
        y = np.array([[1.0, 0.0], [0.0, 0.0]])
        state = lpa(normalize(g), y, [0], 1)
        np.testing.assert_allclose(state.q[1], [0.5, 0.0], atol=1e-15)
        assert lpa_predict(state)[1] == 0

    def test_path_graph_matches_dense_oracle(self, rng):
        g = SparseGraph.from_edges(4, [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0)])
        a = normalize(g)
        dense = a.matrix.toarray()
        y = np.zeros((4, 2))
        y[0, 0] = 1.0
        y[3, 1] = 1.0
        clamped = np.array([0, 3])
        q = y.copy()
        for _ in range(3):
            q = dense @ q
            q[clamped] = y[clamped]
        state = lpa(a, y, clamped, 3)
        np.testing.assert_allclose(state.q, q, atol=1e-12)

    def test_k_must_be_positive(self):
        g = SparseGraph.from_edges(2, [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            lpa(normalize(g), np.eye(2), [0], 0)

    def test_shape_mismatch(self):
        g = SparseGraph.from_edges(2, [(0, 1, 1.0)])
        with pytest.raises(ValueError):
            lpa(normalize(g), np.zeros((3, 2)), [], 1)

    def test_clamped_rows_need_mass(self):
        g = SparseGraph.from_edges(2, [(0, 1, 1.0)])
        with pytest.raises(ValueError, match="label mass"):
            lpa(normalize(g), np.zeros((2, 2)), [0], 1)

    def test_clamp_invariant_every_step(self, rng):
        for _ in range(5):
            g = random_graph(rng, 8)
            labels = labels_for(g, rng, 3, 4)
            y = labels.onehot()
            op = normalize(g)
            for k in range(1, 6):
                state = lpa(op, y, labels.train, k)
                np.testing.assert_array_equal(state.q[labels.train], y[labels.train])

    def test_monotone_reach(self, rng):
        for _ in range(5):
            g = random_graph(rng, 9, p=0.25)
            labels = labels_for(g, rng, 2, 3)
            y = labels.onehot()
            op = normalize(g)
            previous = set()
            for k in range(1, 6):
                reached = set(np.nonzero(lpa(op, y, labels.train, k).q.sum(axis=1))[0])
                assert previous <= reached
                previous = reached


class TestLpaPredict:
    def test_argmax(self):
        state = PropagationState(np.array([[0.2, 0.7, 0.1]]), 1, np.array([]))
        assert lpa_predict(state)[0] == 1

    def test_tie_breaks_low(self):
        state = PropagationState(np.array([[0.5, 0.5]]), 1, np.array([]))
        assert lpa_predict(state)[0] == 0

    def test_zero_row_is_no_signal(self):
        state = PropagationState(np.array([[0.0, 0.0]]), 1, np.array([]))
        assert lpa_predict(state)[0] == NO_SIGNAL


class TestInfluenceOracle:
    def test_absent_class_scores_zero(self, rng):
        g = SparseGraph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])
        labels = LabelSet(
            labels=np.array([0, -1, -1]), c=2,
            train=np.array([0]), val=np.array([]), test=np.array([1, 2]),
        )
        assert influence_oracle(g, labels, 2, 1, k=3) == 0.0

    def test_single_edge_single_step(self):
        g = SparseGraph.from_edges(2, [(0, 1, 1.0)])
        labels = LabelSet(
            labels=np.array([0, -1]), c=1,
            train=np.array([0]), val=np.array([]), test=np.array([1]),
        )
        weight = normalize(g).matrix[1, 0]
        assert abs(influence_oracle(g, labels, 1, 0, k=1) - weight) < 1e-15

    def test_matches_accumulated_propagation(self, rng):
        for _ in range(4):
            g = random_graph(rng, 8, p=0.35)
            labels = labels_for(g, rng, 3, 4)
            op = normalize(g)
            k = 4
            expected = accumulated_lpa_scores(op, labels.onehot(), k)
            for node in range(g.n):
                scores = influence_scores(g, labels, node, k)
                total = scores.sum()
                if total == 0:
                    assert np.allclose(expected[node], 0.0)
                    continue
                np.testing.assert_allclose(
                    scores / total, expected[node] / expected[node].sum(), atol=1e-10
                )

    def test_size_guard(self, rng):
        g = random_graph(rng, 21, p=0.2)
        labels = labels_for(g, rng, 2, 4)
        with pytest.raises(ValueError, match="limited"):
            influence_scores(g, labels, 0, 2)
