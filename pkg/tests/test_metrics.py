import numpy as np
import scipy.sparse as sp

from elugcn.metrics import accuracy, generalization_gap, intra_class_mass_fraction


class TestAccuracy:
    def test_basic(self):
        assert accuracy([0, 1, 1], [0, 1, 0]) == 2 / 3

    def test_with_index(self):
        assert accuracy([0, 1, 1], [0, 1, 0], idx=[0, 1]) == 1.0

    def test_empty_returns_none(self):
        assert accuracy([0, 1], [0, 1], idx=[]) is None


class TestGeneralizationGap:
    def test_equal_series_gap_zero(self):
        series, summary = generalization_gap([1.0, 0.5, 0.2], [1.0, 0.5, 0.2])
        assert series == [0.0, 0.0, 0.0]
        assert summary == 0.0

    def test_series_length_matches_epochs(self):
        train = list(np.linspace(1, 0, 40))
        val = list(np.linspace(1, 0.3, 40))
        series, _ = generalization_gap(train, val)
        assert len(series) == 40

    def test_summary_is_tail_mean(self):
        train = [0.0] * 10
        val = [1.0] * 8 + [3.0, 3.0]
        _, summary = generalization_gap(train, val)
        assert summary == 3.0  # last fifth = last 2 entries

    def test_empty(self):
        series, summary = generalization_gap([], [])
        assert series == [] and summary is None

    def test_nonnegative(self):
        series, _ = generalization_gap([2.0, 0.1], [0.5, 0.4])
        assert all(v >= 0 for v in series)


class TestIntraClassMass:
    def test_hand_case(self):
        # 2 same-class entries of |mass| 3, one cross entry of mass 1
        mat = sp.csr_matrix(np.array([[0.0, 2.0, 1.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]))
        labels = np.array([0, 0, 1])
        assert intra_class_mass_fraction(mat, labels) == 3.0 / 4.0

    def test_empty_matrix(self):
        assert intra_class_mass_fraction(sp.csr_matrix((3, 3)), np.array([0, 1, 2])) == 0.0
