"""Graph data model, dataset class splits, and the normalized adjacency operator.

The adjacency operator adds a self-loop to every node and symmetrically
normalizes by degree, so isolated nodes map to themselves with weight 1.
All numeric work is done in float64; the on-disk feature format is float32
and gets widened on load (see :mod:`graphood.bundle`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import InsufficientNodes, ShapeMismatch, UnknownDataset


@dataclass(frozen=True)
class TagGraph:
    """Undirected graph with dense node features and full ground-truth labels.

    Edges are stored once in canonical ``(min, max)`` order, deduplicated and
    with self-loops removed.  ``texts`` optionally carries one raw string per
    node for annotator prompts.
    """

    num_nodes: int
    edges: np.ndarray      # (E, 2) int64, canonical order, unique
    features: np.ndarray   # (num_nodes, feature_dim) float64
    labels: np.ndarray     # (num_nodes,) int64, index into the full class list
    texts: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.edges.ndim != 2 or (self.edges.size and self.edges.shape[1] != 2):
            raise ShapeMismatch("edges must be an (E, 2) array")
        if self.edges.size:
            if self.edges.min() < 0 or self.edges.max() >= self.num_nodes:
                raise ShapeMismatch("edge endpoint out of range")
            if np.any(self.edges[:, 0] >= self.edges[:, 1]):
                raise ShapeMismatch("edges must be canonical (min, max), no self-loops")
            if len(np.unique(self.edges, axis=0)) != len(self.edges):
                raise ShapeMismatch("duplicate undirected edge")
        if self.features.shape[0] != self.num_nodes:
            raise ShapeMismatch("feature row count != num_nodes")
        if not np.all(np.isfinite(self.features)):
            raise ShapeMismatch("features contain non-finite entries")
        if self.labels.shape != (self.num_nodes,):
            raise ShapeMismatch("labels must be one entry per node")
        if self.labels.size and self.labels.min() < 0:
            raise ShapeMismatch("negative label index")
        if self.texts is not None and len(self.texts) != self.num_nodes:
            raise ShapeMismatch("texts length != num_nodes")

    @classmethod
    def from_parts(cls, num_nodes, edges, features, labels, texts=None):
        """Build a graph, canonicalizing the edge list.

        Self-loops are dropped (normalization re-adds exactly one), duplicate
        undirected edges collapse to a single entry.
        """
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size:
            lo = np.minimum(edges[:, 0], edges[:, 1])
            hi = np.maximum(edges[:, 0], edges[:, 1])
            keep = lo != hi
            edges = np.unique(np.stack([lo[keep], hi[keep]], axis=1), axis=0)
        else:
            edges = edges.reshape(0, 2)
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        if texts is not None:
            texts = tuple(texts)
        return cls(int(num_nodes), edges, features, labels, texts)

    @property
    def feature_dim(self):
        return self.features.shape[1]

    def text_of(self, node_id):
        if self.texts is None:
            return None
        return self.texts[node_id]


@dataclass(frozen=True)
class ClassSpace:
    """Ordered class names plus the ID / OOD partition.

    The filter's label alphabet is ``0..K-1`` for the ID classes (in
    ``id_class_indices`` order) plus the unknown label ``K``.
    """

    class_names: tuple[str, ...]
    id_class_indices: tuple[int, ...]
    ood_class_indices: tuple[int, ...]

    def __post_init__(self):
        total = set(range(len(self.class_names)))
        ids = set(self.id_class_indices)
        oods = set(self.ood_class_indices)
        if ids & oods:
            raise ShapeMismatch("ID and OOD class sets overlap")
        if ids | oods != total:
            raise ShapeMismatch("ID and OOD class sets must cover all classes")
        if len(self.id_class_indices) < 2:
            raise ShapeMismatch("need at least two ID classes")

    @classmethod
    def from_id_split(cls, class_names, id_class_indices):
        class_names = tuple(class_names)
        id_class_indices = tuple(int(i) for i in id_class_indices)
        ood = tuple(i for i in range(len(class_names)) if i not in set(id_class_indices))
        return cls(class_names, id_class_indices, ood)

    @property
    def num_classes(self):
        return len(self.class_names)

    @property
    def num_id(self):
        """K, the number of ID classes."""
        return len(self.id_class_indices)

    @property
    def unknown_label(self):
        """Index of the unknown class in the K+1 alphabet."""
        return self.num_id

    def id_names(self):
        return tuple(self.class_names[i] for i in self.id_class_indices)

    def is_id(self, class_index):
        return int(class_index) in set(self.id_class_indices)

    def id_position(self, class_index):
        """Dense position (0..K-1) of a full class index; raises if OOD."""
        return self.id_class_indices.index(int(class_index))

    def id_mask(self, labels):
        """Boolean mask over a label array: True where the class is ID."""
        labels = np.asarray(labels)
        mask = np.zeros(labels.shape, dtype=bool)
        for c in self.id_class_indices:
            mask |= labels == c
        return mask

    def dense_id_labels(self, labels):
        """Map full class indices to 0..K-1; OOD entries become -1."""
        labels = np.asarray(labels)
        out = np.full(labels.shape, -1, dtype=np.int64)
        for pos, c in enumerate(self.id_class_indices):
            out[labels == c] = pos
        return out


@dataclass(frozen=True)
class SplitAssignment:
    """Disjoint validation / test / candidate node partitions."""

    val_nodes: np.ndarray
    test_nodes: np.ndarray
    candidate_nodes: np.ndarray
    seed: int

    def __post_init__(self):
        val = set(self.val_nodes.tolist())
        test = set(self.test_nodes.tolist())
        cand = set(self.candidate_nodes.tolist())
        if val & test or val & cand or test & cand:
            raise ShapeMismatch("split sets must be pairwise disjoint")

    def held_out(self):
        """Validation plus test nodes, the set no annotation may touch."""
        return np.union1d(self.val_nodes, self.test_nodes)


def make_splits(graph, classes, seed, *, val_per_class=10, test_id=500, test_ood=500):
    """Sample validation / test / candidate splits.

    Validation receives ``val_per_class * K`` ID nodes and the same number of
    OOD nodes; test receives ``test_id`` ID and ``test_ood`` OOD nodes.  All
    remaining nodes form the candidate pool.  Sampling is uniform without
    replacement within the ID and OOD pools separately and is deterministic
    for a given seed.
    """
    k = classes.num_id
    n_val = val_per_class * k
    id_mask = classes.id_mask(graph.labels)
    id_pool = np.flatnonzero(id_mask)
    ood_pool = np.flatnonzero(~id_mask)
    need_id = n_val + test_id
    need_ood = n_val + test_ood
    if len(id_pool) < need_id or len(ood_pool) < need_ood:
        raise InsufficientNodes(len(id_pool), len(ood_pool), need_id, need_ood)

    rng = np.random.default_rng(seed)
    id_perm = rng.permutation(id_pool)
    ood_perm = rng.permutation(ood_pool)
    val = np.concatenate([id_perm[:n_val], ood_perm[:n_val]])
    test = np.concatenate([id_perm[n_val:n_val + test_id], ood_perm[n_val:n_val + test_ood]])
    held = np.union1d(val, test)
    candidate = np.setdiff1d(np.arange(graph.num_nodes), held)
    return SplitAssignment(np.sort(val), np.sort(test), candidate, int(seed))


_DATASET_SPLITS = {
    "cora": (
        ("Case_Based", "Genetic_Algorithms", "Neural_Networks", "Probabilistic_Methods",
         "Reinforcement_Learning", "Rule_Learning", "Theory"),
        (2, 4, 5, 6),
    ),
    "citeseer": (
        ("Agents", "AI", "DB", "IR", "ML", "HCI"),
        (0, 1, 2),
    ),
    "wiki-cs": (
        ("Computational_Linguistics", "Databases", "Operating_Systems",
         "Computer_Architecture", "Computer_Security", "Internet_Protocols",
         "Computer_File_Systems", "Distributed_Computing_Architecture",
         "Web_Technology", "Programming_Language_Topics"),
        (1, 4, 5, 6),
    ),
    "pubmed": (
        ("Diabetes_Mellitus_Experimental", "Diabetes_Mellitus_Type_1",
         "Diabetes_Mellitus_Type_2"),
        (0, 1),
    ),
}


def class_split_for(dataset_name):
    """Fixed ID/OOD class split for the four supported citation datasets."""
    key = dataset_name.strip().lower().replace("_", "-").replace("wikics", "wiki-cs")
    if key not in _DATASET_SPLITS:
        raise UnknownDataset(
            f"unknown dataset {dataset_name!r}; known: {sorted(_DATASET_SPLITS)}"
        )
    names, id_indices = _DATASET_SPLITS[key]
    return ClassSpace.from_id_split(names, id_indices)


@dataclass(frozen=True)
class NormAdj:
    """Sparse symmetric operator D^{-1/2} (A + I) D^{-1/2}."""

    matrix: sparse.csr_matrix

    @property
    def num_nodes(self):
        return self.matrix.shape[0]

    def apply(self, x):
        """Multiply the operator onto a vector or matrix of node values."""
        return self.matrix @ x

    def dense(self):
        return self.matrix.toarray()


def build_normalized_adjacency(graph):
    """Degree-normalized adjacency with self-loops for every node.

    An isolated node has degree 1 after the self-loop, so its diagonal entry
    is exactly 1.  Off-diagonal weights are mirrored, making the matrix
    symmetric to the last bit.
    """
    n = graph.num_nodes
    deg = np.ones(n, dtype=np.float64)
    if graph.edges.size:
        np.add.at(deg, graph.edges[:, 0], 1.0)
        np.add.at(deg, graph.edges[:, 1], 1.0)
    d_inv_sqrt = 1.0 / np.sqrt(deg)

    u = graph.edges[:, 0] if graph.edges.size else np.empty(0, dtype=np.int64)
    v = graph.edges[:, 1] if graph.edges.size else np.empty(0, dtype=np.int64)
    w = d_inv_sqrt[u] * d_inv_sqrt[v]
    diag = np.arange(n)
    rows = np.concatenate([u, v, diag])
    cols = np.concatenate([v, u, diag])
    vals = np.concatenate([w, w, d_inv_sqrt * d_inv_sqrt])
    mat = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    return NormAdj(mat)
