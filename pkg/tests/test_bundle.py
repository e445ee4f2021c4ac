import numpy as np
import pytest

from graphood.bundle import (
    load_bundle,
    load_features,
    load_splits,
    save_bundle,
    save_features,
    save_splits,
)
from graphood.errors import BundleFormatError
from graphood.graph import ClassSpace, TagGraph, make_splits
from graphood.synthetic import make_sbm_graph


@pytest.fixture()
def small_graph():
    g = TagGraph.from_parts(
        4, [(0, 1), (1, 2)], np.arange(8, dtype=np.float64).reshape(4, 2),
        [0, 1, 2, 1], texts=["alpha", "beta", "gamma", "delta"])
    cs = ClassSpace.from_id_split(["x", "y", "z"], [0, 1])
    return g, cs


def test_round_trip(tmp_path, small_graph):
    graph, classes = small_graph
    save_bundle(tmp_path, graph, classes, "tiny")
    loaded, loaded_classes, meta = load_bundle(tmp_path)
    assert loaded.num_nodes == graph.num_nodes
    assert np.array_equal(loaded.edges, graph.edges)
    assert np.array_equal(loaded.labels, graph.labels)
    np.testing.assert_array_equal(loaded.features, graph.features)
    assert loaded.texts == graph.texts
    assert loaded_classes == classes
    assert meta["dataset"] == "tiny"


def test_features_bit_exact(tmp_path):
    rng = np.random.default_rng(0)
    feats = rng.normal(size=(13, 5)).astype(np.float32).astype(np.float64)
    path = tmp_path / "features.bin"
    save_features(path, feats)
    first = path.read_bytes()
    loaded = load_features(path)
    save_features(path, loaded)
    assert path.read_bytes() == first
    np.testing.assert_array_equal(loaded, feats)


def test_features_magic_checked(tmp_path):
    path = tmp_path / "features.bin"
    path.write_bytes(b"NOPE" + b"\x00" * 16)
    with pytest.raises(BundleFormatError):
        load_features(path)


def test_features_payload_length_checked(tmp_path):
    path = tmp_path / "features.bin"
    save_features(path, np.zeros((2, 2), dtype=np.float32))
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(BundleFormatError):
        load_features(path)


def test_missing_label_detected(tmp_path, small_graph):
    graph, classes = small_graph
    save_bundle(tmp_path, graph, classes, "tiny")
    lines = (tmp_path / "labels.tsv").read_text().splitlines()
    (tmp_path / "labels.tsv").write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(BundleFormatError):
        load_bundle(tmp_path)


def test_splits_round_trip(tmp_path):
    graph, classes = make_sbm_graph(0)
    splits = make_splits(graph, classes, 3, test_id=100, test_ood=100)
    save_splits(tmp_path / "splits.json", splits)
    loaded = load_splits(tmp_path / "splits.json")
    assert np.array_equal(loaded.val_nodes, splits.val_nodes)
    assert np.array_equal(loaded.test_nodes, splits.test_nodes)
    assert np.array_equal(loaded.candidate_nodes, splits.candidate_nodes)
    assert loaded.seed == splits.seed


def test_bundle_without_texts(tmp_path):
    g = TagGraph.from_parts(3, [(0, 1)], np.zeros((3, 2)), [0, 1, 0])
    cs = ClassSpace.from_id_split(["x", "y"], [0, 1])
    save_bundle(tmp_path, g, cs, "plain")
    loaded, _, _ = load_bundle(tmp_path)
    assert loaded.texts is None
