"""Raw-layout parsers.

Citation datasets (cora / citeseer / pubmed) are read from a directory with:

- ``<name>.content``: one line per node, ``paper_id<TAB>...<TAB>class_label``
  (any feature columns in between are ignored; texts are authoritative)
- ``<name>.cites``: ``cited<TAB>citing`` pairs, paper ids
- ``texts.tsv``: ``paper_id<TAB>text``, required for every node

Wiki-style datasets are read from ``data.json`` with ``labels`` and
``links`` (adjacency lists) plus either ``texts`` or upstream ``features``.
Node order follows the content file / JSON array order, 0-based.
"""

import json
from dataclasses import dataclass
from pathlib import Path


class SchemaMismatch(Exception):
    pass


class MissingTexts(Exception):
    def __init__(self, node_ids):
        self.node_ids = list(node_ids)
        super().__init__(f"nodes without text: {self.node_ids[:20]}")


@dataclass
class RawDataset:
    class_names: tuple
    labels: list            # per node, class index
    edges: list             # (u, v) pairs, raw (may hold dups / self-loops)
    texts: list | None      # per node, required unless features given
    features: list | None   # upstream feature rows (wiki fallback)


def ingest_citation(raw_dir, source):
    raw_dir = Path(raw_dir)
    content = raw_dir / f"{source.name}.content"
    cites = raw_dir / f"{source.name}.cites"
    texts_path = raw_dir / "texts.tsv"
    if not content.exists() or not cites.exists():
        raise SchemaMismatch(f"expected {content.name} and {cites.name} in {raw_dir}")

    name_to_index = {n: i for i, n in enumerate(source.class_names)}
    node_of = {}
    labels = []
    for line in content.read_text().splitlines():
        if not line.strip():
            continue
        parts = line.split("\t")
        paper_id, class_label = parts[0], parts[-1]
        if class_label not in name_to_index:
            raise SchemaMismatch(f"unknown class label {class_label!r}")
        node_of[paper_id] = len(labels)
        labels.append(name_to_index[class_label])

    edges = []
    for line in cites.read_text().splitlines():
        if not line.strip():
            continue
        a, b = line.split()
        # citations to papers outside the content file are dropped
        if a in node_of and b in node_of:
            edges.append((node_of[a], node_of[b]))

    texts = [None] * len(labels)
    if texts_path.exists():
        for line in texts_path.read_text().splitlines():
            if not line.strip():
                continue
            paper_id, text = line.split("\t", 1)
            if paper_id in node_of:
                texts[node_of[paper_id]] = text
    missing = [i for i, t in enumerate(texts) if not t]
    if missing:
        raise MissingTexts(missing)

    return RawDataset(source.class_names, labels, edges, texts, None)


def ingest_wiki_json(raw_dir, source):
    path = Path(raw_dir) / "data.json"
    if not path.exists():
        raise SchemaMismatch(f"expected data.json in {raw_dir}")
    doc = json.loads(path.read_text())
    labels = [int(x) for x in doc["labels"]]
    if labels and max(labels) >= len(source.class_names):
        raise SchemaMismatch("label index beyond the registered class list")
    edges = []
    for u, nbrs in enumerate(doc["links"]):
        for v in nbrs:
            edges.append((u, int(v)))

    texts = doc.get("texts")
    features = doc.get("features")
    if texts is not None:
        missing = [i for i, t in enumerate(texts) if not t]
        if missing:
            raise MissingTexts(missing)
        return RawDataset(source.class_names, labels, edges, list(texts), None)
    if features is None:
        raise SchemaMismatch("data.json has neither texts nor features")
    return RawDataset(source.class_names, labels, edges, None, features)


def ingest(raw_dir, source):
    if source.kind == "citation":
        return ingest_citation(raw_dir, source)
    return ingest_wiki_json(raw_dir, source)
