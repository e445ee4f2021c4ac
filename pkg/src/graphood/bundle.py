"""Graph bundle directory I/O.

A bundle directory holds:

- ``meta.json``      dataset name, node/feature counts, class names, ID class indices
- ``edges.tsv``      one ``src<TAB>dst`` line per undirected edge, 0-based
- ``features.bin``   magic ``TAGF``, u32 LE rows, u32 LE cols, row-major f32 LE
- ``labels.tsv``     ``node_id<TAB>class_index`` for every node
- ``texts.jsonl``    optional, one ``{"id": int, "text": str}`` object per line
- ``splits.json``    arrays ``val`` / ``test`` / ``candidate`` plus ``seed``

``features.bin`` is a bit-exact contract: bytes written here re-load to the
same float32 payload, which is widened to float64 in memory.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import BundleFormatError
from .graph import ClassSpace, SplitAssignment, TagGraph

FEATURES_MAGIC = b"TAGF"


def save_features(path, features):
    """Write a float32 feature matrix in the binary bundle layout."""
    arr = np.ascontiguousarray(np.asarray(features), dtype="<f4")
    rows, cols = arr.shape
    with open(path, "wb") as fh:
        fh.write(FEATURES_MAGIC)
        fh.write(struct.pack("<II", rows, cols))
        fh.write(arr.tobytes(order="C"))


def load_features(path):
    """Read ``features.bin``; returns float64 (widened from f32 storage)."""
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != FEATURES_MAGIC:
            raise BundleFormatError(f"bad features magic {magic!r}")
        header = fh.read(8)
        if len(header) != 8:
            raise BundleFormatError("truncated features header")
        rows, cols = struct.unpack("<II", header)
        payload = fh.read()
    expected = rows * cols * 4
    if len(payload) != expected:
        raise BundleFormatError(
            f"features payload is {len(payload)} bytes, expected {expected}"
        )
    arr = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    return arr.astype(np.float64)


def save_splits(path, splits):
    doc = {
        "val": [int(i) for i in splits.val_nodes],
        "test": [int(i) for i in splits.test_nodes],
        "candidate": [int(i) for i in splits.candidate_nodes],
        "seed": int(splits.seed),
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_splits(path):
    doc = json.loads(Path(path).read_text())
    return SplitAssignment(
        np.asarray(sorted(doc["val"]), dtype=np.int64),
        np.asarray(sorted(doc["test"]), dtype=np.int64),
        np.asarray(sorted(doc["candidate"]), dtype=np.int64),
        int(doc["seed"]),
    )


def save_bundle(directory, graph, classes, dataset_name, splits=None):
    """Write a full bundle directory (creates it if needed)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    meta = {
        "dataset": dataset_name,
        "num_nodes": graph.num_nodes,
        "feature_dim": graph.feature_dim,
        "class_names": list(classes.class_names),
        "id_class_indices": list(classes.id_class_indices),
    }
    (directory / "meta.json").write_text(json.dumps(meta, indent=1) + "\n")

    with open(directory / "edges.tsv", "w") as fh:
        for u, v in graph.edges:
            fh.write(f"{u}\t{v}\n")

    save_features(directory / "features.bin", graph.features)

    with open(directory / "labels.tsv", "w") as fh:
        for node, label in enumerate(graph.labels):
            fh.write(f"{node}\t{label}\n")

    if graph.texts is not None:
        with open(directory / "texts.jsonl", "w") as fh:
            for node, text in enumerate(graph.texts):
                fh.write(json.dumps({"id": node, "text": text}) + "\n")

    if splits is not None:
        save_splits(directory / "splits.json", splits)


def load_bundle(directory):
    """Load a bundle directory; returns ``(graph, classes, meta)``.

    Validates the graph invariants on ingest and checks label indices against
    the class list.
    """
    directory = Path(directory)
    meta = json.loads((directory / "meta.json").read_text())
    num_nodes = int(meta["num_nodes"])

    edges = []
    edges_path = directory / "edges.tsv"
    if edges_path.exists():
        for line in edges_path.read_text().splitlines():
            if not line.strip():
                continue
            u, v = line.split("\t")
            edges.append((int(u), int(v)))

    features = load_features(directory / "features.bin")
    if features.shape != (num_nodes, int(meta["feature_dim"])):
        raise BundleFormatError(
            f"features shape {features.shape} disagrees with meta "
            f"({num_nodes}, {meta['feature_dim']})"
        )

    labels = np.full(num_nodes, -1, dtype=np.int64)
    for line in (directory / "labels.tsv").read_text().splitlines():
        if not line.strip():
            continue
        node, label = line.split("\t")
        labels[int(node)] = int(label)
    if np.any(labels < 0):
        missing = np.flatnonzero(labels < 0)
        raise BundleFormatError(f"labels.tsv missing nodes {missing[:20].tolist()}")
    if labels.max() >= len(meta["class_names"]):
        raise BundleFormatError("label index beyond class list")

    texts = None
    texts_path = directory / "texts.jsonl"
    if texts_path.exists():
        slots = [None] * num_nodes
        for line in texts_path.read_text().splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            slots[int(obj["id"])] = str(obj["text"])
        texts = tuple("" if t is None else t for t in slots)

    graph = TagGraph.from_parts(num_nodes, edges, features, labels, texts)
    classes = ClassSpace.from_id_split(meta["class_names"], meta["id_class_indices"])
    return graph, classes, meta
