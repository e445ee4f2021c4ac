"""Build a small graph and inspect the normalized adjacency operator."""

import numpy as np

from graphood import TagGraph, build_normalized_adjacency

# a 5-node path with one isolated node
edges = [(0, 1), (1, 2), (2, 3)]
features = np.eye(5)
labels = [0, 0, 1, 1, 0]
graph = TagGraph.from_parts(5, edges, features, labels)

adj = build_normalized_adjacency(graph)
print("dense operator:")
print(np.round(adj.dense(), 3))

# the isolated node maps to itself with weight exactly 1
print("\nisolated node weight:", adj.dense()[4, 4])

# on a ring every node has the same degree, so rows sum to 1
ring = TagGraph.from_parts(6, [(i, (i + 1) % 6) for i in range(6)],
                           np.zeros((6, 1)), [0] * 6)
print("ring row sums:", build_normalized_adjacency(ring).dense().sum(axis=1))

# applying the operator averages a signal over neighborhoods
signal = np.array([1.0, 0.0, 0.0, 0.0, 0.0])
print("\nsignal after one application: ", np.round(adj.apply(signal), 3))
print("signal after two applications:", np.round(adj.apply(adj.apply(signal)), 3))
