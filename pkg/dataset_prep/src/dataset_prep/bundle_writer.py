"""Bundle directory emission in the downstream pipeline's exact format.

- ``meta.json``      dataset name, counts, class names, ID class indices
- ``edges.tsv``      canonical ``min<TAB>max`` per undirected edge, deduplicated
- ``features.bin``   magic ``TAGF``, u32 LE rows, u32 LE cols, row-major f32 LE
- ``labels.tsv``     one line per node
- ``texts.jsonl``    one JSON object per line (when texts exist)
- ``manifest.json``  embedding model id, features source, sha256 checksums
"""

import hashlib
import json
import struct
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

FEATURES_MAGIC = b"TAGF"


@dataclass
class BundleManifest:
    dataset: str
    num_nodes: int
    feature_dim: int
    embedding_model: str | None
    features_source: str      # "embedded" or "upstream"
    checksums: dict

    def to_dict(self):
        return asdict(self)


def canonical_edges(edges):
    """Undirected canonical form: (min, max), self-loops dropped, unique."""
    seen = set()
    out = []
    for u, v in edges:
        u, v = int(u), int(v)
        if u == v:
            continue
        key = (min(u, v), max(u, v))
        if key not in seen:
            seen.add(key)
            out.append(key)
    return sorted(out)


def write_features(path, features):
    arr = np.ascontiguousarray(np.asarray(features), dtype="<f4")
    with open(path, "wb") as fh:
        fh.write(FEATURES_MAGIC)
        fh.write(struct.pack("<II", arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes(order="C"))


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_bundle(out_dir, source, labels, edges, features, texts,
                 embedding_model, features_source):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    features = np.asarray(features, dtype=np.float32)
    num_nodes = len(labels)
    if features.shape[0] != num_nodes:
        raise ValueError("feature row count != node count")

    meta = {
        "dataset": source.name,
        "num_nodes": num_nodes,
        "feature_dim": int(features.shape[1]),
        "class_names": list(source.class_names),
        "id_class_indices": list(source.id_class_indices),
    }
    (out_dir / "meta.json").write_text(json.dumps(meta, indent=1) + "\n")

    with open(out_dir / "edges.tsv", "w") as fh:
        for u, v in canonical_edges(edges):
            fh.write(f"{u}\t{v}\n")

    write_features(out_dir / "features.bin", features)

    with open(out_dir / "labels.tsv", "w") as fh:
        for node, label in enumerate(labels):
            fh.write(f"{node}\t{int(label)}\n")

    names = ["meta.json", "edges.tsv", "features.bin", "labels.tsv"]
    if texts is not None:
        with open(out_dir / "texts.jsonl", "w") as fh:
            for node, text in enumerate(texts):
                fh.write(json.dumps({"id": node, "text": text}) + "\n")
        names.append("texts.jsonl")

    checksums = {name: _sha256(out_dir / name) for name in names}
    manifest = BundleManifest(
        dataset=source.name,
        num_nodes=num_nodes,
        feature_dim=int(features.shape[1]),
        embedding_model=embedding_model,
        features_source=features_source,
        checksums=checksums,
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=1, sort_keys=True) + "\n")
    return manifest
