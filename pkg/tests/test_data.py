"""Container validation and CSV round-trips."""

import numpy as np
import pytest

from covclust import Dataset, ModelParams, SimilarityGraph
from covclust.data import (load_dataset, load_similarity, save_dataset,
                           save_similarity)
from covclust.errors import (DimensionError, DomainError, InputError)


class TestDataset:
    def test_basic_properties(self):
        data = Dataset(np.eye(3), np.array([1, 2, 2]), 2)
        assert data.n == 3 and data.d == 3 and data.c == 2
        np.testing.assert_array_equal(data.y0, [0, 1, 1])
        np.testing.assert_array_equal(data.class_counts(), [1, 2])

    def test_c_inferred_from_labels(self):
        data = Dataset(np.zeros((4, 2)), np.array([1, 3, 2, 3]))
        assert data.c == 3

    def test_empty_dataset_allowed_with_explicit_c(self):
        data = Dataset(np.zeros((0, 5)), np.zeros(0, dtype=np.int64), 3)
        assert data.n == 0 and data.d == 5

    def test_label_out_of_range(self):
        with pytest.raises(InputError):
            Dataset(np.zeros((2, 2)), np.array([1, 3]), 2)
        with pytest.raises(InputError):
            Dataset(np.zeros((2, 2)), np.array([0, 1]), 2)

    def test_non_integer_labels(self):
        with pytest.raises(DomainError):
            Dataset(np.zeros((2, 2)), np.array([1.0, 1.5]), 2)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            Dataset(np.zeros((3, 2)), np.array([1, 2]), 2)

    def test_non_finite_features(self):
        X = np.zeros((2, 2))
        X[0, 0] = np.nan
        with pytest.raises(DomainError):
            Dataset(X, np.array([1, 2]), 2)

    def test_single_class_rejected(self):
        with pytest.raises(DomainError):
            Dataset(np.zeros((2, 2)), np.array([1, 1]), 1)


class TestModelParams:
    def test_shapes(self):
        p = ModelParams(np.zeros((3, 4)), np.zeros(3))
        assert p.c == 3 and p.d == 4

    def test_intercept_mismatch(self):
        with pytest.raises(DimensionError):
            ModelParams(np.zeros((3, 4)), np.zeros(2))

    def test_non_finite(self):
        with pytest.raises(DomainError):
            ModelParams(np.full((2, 2), np.inf), np.zeros(2))

    def test_random_is_seeded(self):
        a = ModelParams.random(2, 3, seed=7)
        b = ModelParams.random(2, 3, seed=7)
        np.testing.assert_array_equal(a.B, b.B)
        np.testing.assert_array_equal(a.beta0, b.beta0)


class TestSimilarityGraph:
    def test_from_dense_picks_positive_entries(self):
        S = np.array([[1.0, 0.5, 0.0],
                      [0.5, 1.0, -0.2],
                      [0.0, -0.2, 1.0]])
        g = SimilarityGraph.from_dense(S)
        assert g.l == 1
        np.testing.assert_array_equal(g.edges, [[1, 2]])
        np.testing.assert_array_equal(g.weights, [0.5])
        np.testing.assert_array_equal(g.degrees, [1, 1, 0])

    def test_neighbors(self):
        g = SimilarityGraph(np.array([[1, 2], [2, 3]]),
                            np.array([0.5, 0.25]), 4)
        np.testing.assert_array_equal(g.neighbors(2), [1, 3])
        np.testing.assert_array_equal(g.neighbors(4), [])
        with pytest.raises(InputError):
            g.neighbors(5)

    def test_edges_sorted_and_deduplicated(self):
        g = SimilarityGraph.from_pairs([3, 1], [1, 2], [0.2, 0.7], 3)
        np.testing.assert_array_equal(g.edges, [[1, 2], [1, 3]])
        np.testing.assert_array_equal(g.weights, [0.7, 0.2])
        with pytest.raises(InputError):
            SimilarityGraph(np.array([[1, 2], [1, 2]]),
                            np.array([0.5, 0.5]), 3)

    def test_self_loop_rejected(self):
        with pytest.raises(InputError):
            SimilarityGraph.from_pairs([1], [1], [0.5], 2)

    def test_zero_weight_pairs_dropped_negative_rejected(self):
        g = SimilarityGraph.from_pairs([1, 1], [2, 3], [0.0, 0.4], 3)
        assert g.l == 1
        with pytest.raises(DomainError):
            SimilarityGraph.from_pairs([1], [2], [-0.1], 3)

    def test_asymmetric_dense_rejected(self):
        S = np.array([[0.0, 0.5], [0.4, 0.0]])
        with pytest.raises(InputError):
            SimilarityGraph.from_dense(S)

    def test_to_dense_round_trip(self, rng):
        from conftest import make_graph
        g = make_graph(rng, 7, p=0.5)
        g2 = SimilarityGraph.from_dense(g.to_dense())
        np.testing.assert_array_equal(g.edges, g2.edges)
        np.testing.assert_array_equal(g.weights, g2.weights)

    def test_edge_arrays_layout(self):
        g = SimilarityGraph(np.array([[1, 3], [2, 3]]),
                            np.array([0.5, 0.8]), 3)
        ei, ej, tails, w = g.edge_arrays()
        np.testing.assert_array_equal(ei, [0, 1])
        np.testing.assert_array_equal(ej, [2, 2])
        np.testing.assert_array_equal(tails, [0, 1, 2, 2])


class TestCsvRoundTrips:
    def test_dataset_round_trip_is_exact(self, rng, tmp_path):
        from conftest import make_dataset
        data = make_dataset(rng, 17, 5, 3)
        path = tmp_path / "data.csv"
        save_dataset(path, data, comments=["made by a test"])
        back = load_dataset(path)
        np.testing.assert_array_equal(back.X, data.X)
        np.testing.assert_array_equal(back.y, data.y)
        assert back.c == data.c

    def test_dense_similarity_round_trip(self, rng, tmp_path):
        from conftest import make_graph
        g = make_graph(rng, 6, p=0.6)
        path = tmp_path / "sim.csv"
        save_similarity(path, g)
        back = load_similarity(path)
        np.testing.assert_array_equal(back.edges, g.edges)
        np.testing.assert_array_equal(back.weights, g.weights)

    def test_triple_similarity_layout(self, tmp_path):
        path = tmp_path / "sim.csv"
        path.write_text("i,j,weight\n2,1,0.5\n3,1,0.25\n")
        g = load_similarity(path, d=4)
        np.testing.assert_array_equal(g.edges, [[1, 2], [1, 3]])
        with pytest.raises(InputError):
            load_similarity(path)  # triples need an explicit d

    def test_malformed_rows_raise_with_location(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("y,x1\n1,0.5\n2,oops\n")
        with pytest.raises(InputError, match="3"):
            load_dataset(path)

    def test_comment_lines_skipped(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("# provenance here\ny,x1\n1,0.25\n2,0.5\n")
        data = load_dataset(path)
        assert data.n == 2
