"""Render annotation prompts and compare the three annotator backends."""

import numpy as np

from graphood import (
    MockConfusion,
    OracleGroundTruth,
    PromptTemplate,
    annotate,
    class_split_for,
    make_sbm_graph,
    parse_response,
    predicted_ood_proportion,
    render_prompt,
    uniform_confusion_matrix,
)

classes = class_split_for("Cora")
print("ID categories:", ", ".join(classes.id_names()))

short = render_prompt(PromptTemplate("short", "paper"), classes,
                      "A study of backpropagation variants.")
print("\n--- short prompt ---")
print(short)

# response parsing maps free text into the K+1 alphabet
for raw in ("none", "Neural_Networks", "Likely about Rule_Learning systems",
            "hard to say", "Theory. Confidence: 0.9"):
    out = parse_response(raw, classes)
    name = ("unknown" if out.label == classes.unknown_label
            else classes.id_names()[out.label])
    print(f"{raw!r:45s} -> {name:16s} clean={out.parsed_cleanly} "
          f"confidence={out.confidence}")

# oracle vs mock with noise on a synthetic graph
graph, sbm_classes = make_sbm_graph(seed=0)
nodes = list(range(0, 600, 6))

oracle_set = annotate(nodes, graph, sbm_classes, OracleGroundTruth())
print("\noracle predicted OOD proportion:",
      predicted_ood_proportion(oracle_set, sbm_classes))

for eps in (0.0, 0.3):
    matrix = uniform_confusion_matrix(sbm_classes, eps)
    mock_set = annotate(nodes, graph, sbm_classes, MockConfusion(matrix, seed=7))
    agree = np.mean([mock_set.entries[n].label == oracle_set.entries[n].label
                     for n in nodes])
    print(f"mock eps={eps}: agreement with oracle {agree:.3f}, "
          f"OOD proportion {predicted_ood_proportion(mock_set, sbm_classes):.3f}")
