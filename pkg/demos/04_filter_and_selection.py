"""Train the K+1 filter on noisy labels, filter candidates, select nodes."""

import numpy as np

from graphood import (
    MockConfusion,
    TrainConfig,
    annotate,
    build_normalized_adjacency,
    filter_candidates,
    make_sbm_graph,
    make_splits,
    pick_annotation_nodes,
    select_kmedoids,
    select_random,
    select_uncertainty,
    softmax,
    train_filter,
    uniform_confusion_matrix,
)

graph, classes = make_sbm_graph(seed=0)
adj = build_normalized_adjacency(graph)
splits = make_splits(graph, classes, seed=0, test_id=100, test_ood=100)
k = classes.num_id

# noisy annotations on 100 random candidates
nodes = pick_annotation_nodes(splits.candidate_nodes, 100, seed=3)
matrix = uniform_confusion_matrix(classes, epsilon=0.2)
annotations = annotate(nodes, graph, classes, MockConfusion(matrix, seed=3))

config = TrainConfig(dropout_p=0.0, model_selection="last_epoch")
result = train_filter(graph.features, adj, annotations, graph.labels,
                      classes, splits, config)
print("unknown-class weight sweep:", result.sweep_scores)
print("chosen weight:", result.unknown_weight)

kept = filter_candidates(result.acts.logits, splits.candidate_nodes, k)
truth = classes.id_mask(graph.labels[kept.node_ids])
print(f"kept {len(kept.node_ids)} of {len(splits.candidate_nodes)} candidates, "
      f"{int(truth.sum())} truly ID")

budget = 10 * k
pool = kept.node_ids
for name, sel in (
    ("random", select_random(pool, budget, seed=0)),
    ("uncertainty", select_uncertainty(softmax(result.acts.logits), pool, budget)),
    ("kmedoids", select_kmedoids(result.acts.H1, pool, budget, seed=0)),
):
    picked_id = classes.id_mask(graph.labels[list(sel.selected)])
    print(f"{name:12s} selected {len(sel.selected)} nodes, "
          f"ID share {picked_id.mean():.2f}")
