import numpy as np
import pytest

from graphood.errors import InsufficientNodes, ShapeMismatch, UnknownDataset
from graphood.graph import (
    ClassSpace,
    TagGraph,
    build_normalized_adjacency,
    class_split_for,
    make_splits,
)


def dense_normalized_adjacency(num_nodes, edges):
    """Independent dense oracle: build A+I and D explicitly."""
    a = np.zeros((num_nodes, num_nodes))
    for u, v in edges:
        a[u, v] = 1.0
        a[v, u] = 1.0
    a_tilde = a + np.eye(num_nodes)
    d = a_tilde.sum(axis=1)
    d_inv_sqrt = np.diag(1.0 / np.sqrt(d))
    return d_inv_sqrt @ a_tilde @ d_inv_sqrt


def random_graph(rng, n, edge_prob=0.3):
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    edges = [p for p in pairs if rng.random() < edge_prob]
    features = rng.normal(size=(n, 3))
    labels = rng.integers(0, 2, size=n)
    return TagGraph.from_parts(n, edges, features, labels)


class TestNormalizedAdjacency:
    def test_single_node_is_identity(self):
        g = TagGraph.from_parts(1, [], np.zeros((1, 2)), [0])
        adj = build_normalized_adjacency(g)
        np.testing.assert_allclose(adj.dense(), [[1.0]], atol=0)

    def test_two_nodes_one_edge(self):
        g = TagGraph.from_parts(2, [(0, 1)], np.zeros((2, 1)), [0, 0])
        adj = build_normalized_adjacency(g)
        np.testing.assert_allclose(adj.dense(), [[0.5, 0.5], [0.5, 0.5]], atol=1e-15)

    def test_matches_dense_oracle_random_10(self):
        rng = np.random.default_rng(7)
        g = random_graph(rng, 10)
        adj = build_normalized_adjacency(g)
        oracle = dense_normalized_adjacency(10, g.edges)
        np.testing.assert_allclose(adj.dense(), oracle, atol=1e-12)

    def test_matches_dense_oracle_many(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 40))
            g = random_graph(rng, n)
            adj = build_normalized_adjacency(g)
            np.testing.assert_allclose(
                adj.dense(), dense_normalized_adjacency(n, g.edges), atol=1e-12)

    def test_ring_rows_sum_to_one(self):
        n = 12
        edges = [(i, (i + 1) % n) for i in range(n)]
        g = TagGraph.from_parts(n, edges, np.zeros((n, 1)), [0] * n)
        sums = build_normalized_adjacency(g).dense().sum(axis=1)
        np.testing.assert_allclose(sums, np.ones(n), atol=1e-12)

    def test_exactly_symmetric(self):
        rng = np.random.default_rng(3)
        g = random_graph(rng, 25)
        m = build_normalized_adjacency(g).dense()
        assert np.array_equal(m, m.T)

    def test_entries_in_unit_interval_diag_positive(self):
        rng = np.random.default_rng(4)
        g = random_graph(rng, 30)
        m = build_normalized_adjacency(g).dense()
        assert m.min() >= 0.0 and m.max() <= 1.0
        assert np.all(np.diag(m) > 0.0)

    def test_isolated_node_keeps_self_weight_one(self):
        g = TagGraph.from_parts(3, [(0, 1)], np.zeros((3, 1)), [0, 0, 0])
        m = build_normalized_adjacency(g).dense()
        assert m[2, 2] == 1.0


class TestTagGraph:
    def test_ingest_canonicalizes(self):
        g = TagGraph.from_parts(
            4, [(1, 0), (0, 1), (2, 2), (3, 2)], np.zeros((4, 1)), [0] * 4)
        # self-loop dropped, duplicate (undirected) collapsed, min-max order
        assert g.edges.tolist() == [[0, 1], [2, 3]]

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(ShapeMismatch):
            TagGraph.from_parts(2, [(0, 5)], np.zeros((2, 1)), [0, 0])

    def test_nonfinite_features_rejected(self):
        feats = np.zeros((2, 1))
        feats[0, 0] = np.inf
        with pytest.raises(ShapeMismatch):
            TagGraph.from_parts(2, [(0, 1)], feats, [0, 0])

    def test_label_count_must_match(self):
        with pytest.raises(ShapeMismatch):
            TagGraph.from_parts(3, [], np.zeros((3, 1)), [0, 1])


class TestClassSpace:
    def test_complement_computed(self):
        cs = ClassSpace.from_id_split(["a", "b", "c", "d"], [1, 3])
        assert cs.ood_class_indices == (0, 2)
        assert cs.num_id == 2
        assert cs.unknown_label == 2

    def test_id_position_follows_split_order(self):
        cs = ClassSpace.from_id_split(["a", "b", "c", "d"], [3, 1])
        assert cs.id_position(3) == 0
        assert cs.id_position(1) == 1

    def test_needs_two_id_classes(self):
        with pytest.raises(ShapeMismatch):
            ClassSpace.from_id_split(["a", "b"], [0])

    def test_dense_id_labels(self):
        cs = ClassSpace.from_id_split(["a", "b", "c"], [0, 2])
        out = cs.dense_id_labels([0, 1, 2, 2])
        assert out.tolist() == [0, -1, 1, 1]


def big_labeled_graph(num_nodes=3000, num_classes=7):
    labels = np.arange(num_nodes) % num_classes
    return TagGraph.from_parts(num_nodes, [], np.zeros((num_nodes, 1)), labels)


class TestMakeSplits:
    CLASSES = ClassSpace.from_id_split(
        ["c0", "c1", "c2", "c3", "c4", "c5", "c6"], [2, 4, 5, 6])

    def test_counts_exact(self):
        g = big_labeled_graph()
        splits = make_splits(g, self.CLASSES, seed=0)
        k = self.CLASSES.num_id
        val_id = self.CLASSES.id_mask(g.labels[splits.val_nodes]).sum()
        test_id = self.CLASSES.id_mask(g.labels[splits.test_nodes]).sum()
        assert len(splits.val_nodes) == 2 * 10 * k
        assert val_id == 10 * k
        assert len(splits.test_nodes) == 1000
        assert test_id == 500

    def test_counts_exact_every_seed(self):
        g = big_labeled_graph()
        k = self.CLASSES.num_id
        for seed in range(5):
            s = make_splits(g, self.CLASSES, seed)
            assert self.CLASSES.id_mask(g.labels[s.val_nodes]).sum() == 10 * k
            assert (~self.CLASSES.id_mask(g.labels[s.test_nodes])).sum() == 500

    def test_deterministic(self):
        g = big_labeled_graph()
        a = make_splits(g, self.CLASSES, seed=11)
        b = make_splits(g, self.CLASSES, seed=11)
        assert np.array_equal(a.val_nodes, b.val_nodes)
        assert np.array_equal(a.test_nodes, b.test_nodes)
        assert np.array_equal(a.candidate_nodes, b.candidate_nodes)

    def test_different_seed_differs(self):
        g = big_labeled_graph()
        a = make_splits(g, self.CLASSES, seed=1)
        b = make_splits(g, self.CLASSES, seed=2)
        assert not np.array_equal(a.val_nodes, b.val_nodes)

    def test_partition_disjoint_and_covering(self):
        g = big_labeled_graph()
        s = make_splits(g, self.CLASSES, seed=0)
        assert len(np.intersect1d(s.val_nodes, s.test_nodes)) == 0
        assert len(np.intersect1d(s.val_nodes, s.candidate_nodes)) == 0
        assert len(np.intersect1d(s.test_nodes, s.candidate_nodes)) == 0
        total = len(s.val_nodes) + len(s.test_nodes) + len(s.candidate_nodes)
        assert total == g.num_nodes

    def test_small_graph_fails(self):
        labels = np.arange(20) % 4
        g = TagGraph.from_parts(20, [], np.zeros((20, 1)), labels)
        cs = ClassSpace.from_id_split(["a", "b", "c", "d"], [0, 1])
        with pytest.raises(InsufficientNodes):
            make_splits(g, cs, seed=0)

    def test_custom_sizes(self):
        g = big_labeled_graph(800, 4)
        cs = ClassSpace.from_id_split(["a", "b", "c", "d"], [0, 1])
        s = make_splits(g, cs, 0, test_id=50, test_ood=50)
        assert len(s.test_nodes) == 100


class TestClassSplitFor:
    def test_cora(self):
        cs = class_split_for("Cora")
        assert cs.id_class_indices == (2, 4, 5, 6)
        assert cs.num_id == 4

    def test_pubmed(self):
        cs = class_split_for("Pubmed")
        assert cs.id_class_indices == (0, 1)
        assert cs.num_id == 2

    def test_citeseer_k(self):
        assert class_split_for("citeseer").num_id == 3

    def test_wiki_cs(self):
        assert class_split_for("Wiki-CS").id_class_indices == (1, 4, 5, 6)
        assert class_split_for("WikiCS").num_id == 4

    def test_unknown(self):
        with pytest.raises(UnknownDataset):
            class_split_for("imagenet")
