"""Train the two-layer GCN on a synthetic block-model graph."""

import numpy as np

from graphood import (
    LabeledTrainingSet,
    TrainConfig,
    build_normalized_adjacency,
    make_sbm_graph,
    train,
)

graph, classes = make_sbm_graph(seed=0)
adj = build_normalized_adjacency(graph)
k = classes.num_id
print(f"{graph.num_nodes} nodes, {len(graph.edges)} edges, K = {k}")

# 10 labeled nodes per ID class, chosen from the front of each block
rng = np.random.default_rng(1)
train_ids = np.concatenate([
    np.flatnonzero(graph.labels == c)[:10] for c in classes.id_class_indices
])
train_set = LabeledTrainingSet(train_ids, classes.dense_id_labels(graph.labels)[train_ids])

# validation callback: accuracy on 20 held-out ID nodes per class
val_ids = np.concatenate([
    np.flatnonzero(graph.labels == c)[10:30] for c in classes.id_class_indices
])
val_truth = classes.dense_id_labels(graph.labels)[val_ids]


def val_eval(acts):
    return float((np.argmax(acts.logits[val_ids], axis=1) == val_truth).mean())


config = TrainConfig(epochs=200, seed=0)
model, acts, log = train(graph.features, adj, k, train_set, val_eval, config)

print(f"best validation accuracy {log.best_score:.3f} at epoch {log.best_epoch}")
id_nodes = classes.id_mask(graph.labels)
pred = np.argmax(acts.logits, axis=1)
dense = classes.dense_id_labels(graph.labels)
print("accuracy over all ID nodes:",
      round(float((pred[id_nodes] == dense[id_nodes]).mean()), 3))

# loss trajectory, every 40th epoch
for record in log.records[::40]:
    print(f"epoch {record.epoch:3d}  loss {record.loss:.4f}  val {record.val_score:.3f}")
