"""Synthetic stochastic block model fixtures.

Blocks double as classes: the first ``id_blocks`` are ID, the rest OOD.
Features are Gaussian clouds around block-specific means, so separability is
controlled by ``mean_scale`` over ``noise_sigma``.
"""

from __future__ import annotations

import numpy as np

from .graph import ClassSpace, TagGraph


def make_sbm_graph(seed, *, blocks=6, nodes_per_block=100, id_blocks=4,
                   feature_dim=8, mean_scale=3.5, ood_mean_scale=2.0,
                   noise_sigma=1.0, intra_p=0.05, inter_p=0.005,
                   with_texts=False):
    """Build an SBM graph and its class space; deterministic per seed.

    ID blocks get well-separated means of norm ``mean_scale``; OOD blocks sit
    closer to the origin (norm ``ood_mean_scale``), the low-signal geometry
    post-hoc detectors rely on.
    """
    if feature_dim < blocks:
        raise ValueError("feature_dim must be >= number of blocks")
    rng = np.random.default_rng(seed)
    n = blocks * nodes_per_block
    labels = np.repeat(np.arange(blocks), nodes_per_block)

    prob = np.where(labels[:, None] == labels[None, :], intra_p, inter_p)
    draw = rng.random((n, n))
    upper = np.triu(draw < prob, k=1)
    edges = np.argwhere(upper)

    means = np.zeros((blocks, feature_dim))
    for b in range(id_blocks):
        means[b, b] = mean_scale
    # OOD means point away from every ID cluster (negative in two ID dims),
    # which survives neighborhood smoothing and keeps ID-class logits low
    for o in range(blocks - id_blocks):
        means[id_blocks + o, o % id_blocks] = -ood_mean_scale
        means[id_blocks + o, (o + id_blocks // 2) % id_blocks] = -ood_mean_scale
    features = means[labels] + rng.normal(0.0, noise_sigma, size=(n, feature_dim))

    names = tuple(f"Topic_{b}" for b in range(blocks))
    texts = None
    if with_texts:
        texts = tuple(f"Synthetic document {i} about {names[labels[i]]}." for i in range(n))

    graph = TagGraph.from_parts(n, edges, features, labels, texts)
    classes = ClassSpace.from_id_split(names, tuple(range(id_blocks)))
    return graph, classes
