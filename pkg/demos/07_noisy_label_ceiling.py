"""How far do noisy annotations alone go, versus a few accurate labels?

Trains the ID classifier on (a) increasing numbers of noisy mock labels and
(b) the same numbers of ground-truth labels, then prints the paired curves.
The noisy curve plateaus well below the clean one once annotation noise is
substantial.
"""

from graphood import ExperimentConfig, TrainConfig, make_sbm_graph
from graphood.pipeline import run_upper_bound_study

graph, classes = make_sbm_graph(seed=0)
k = classes.num_id

config = ExperimentConfig(
    annotator="mock", mock_epsilon=0.4, seeds=(0, 1, 2),
    test_id=100, test_ood=100,
    filter_train=TrainConfig(model_selection="last_epoch", dropout_p=0.0),
    classifier_train=TrainConfig(model_selection="last_epoch"),
)

counts = [2 * k, 5 * k, 10 * k, 20 * k, 200, 320]
study = run_upper_bound_study(config, counts, graph, classes)

print(f"{'annotated':>10s} {'noisy id_acc':>13s} {'clean id_acc':>13s} "
      f"{'noisy auroc':>12s} {'clean auroc':>12s}")
for noisy, clean in zip(study.noisy, study.clean):
    print(f"{noisy.count:>10d} {noisy.id_acc_mean:>13.3f} "
          f"{clean.id_acc_mean:>13.3f} {noisy.auroc_mean:>12.3f} "
          f"{clean.auroc_mean:>12.3f}")

best_noisy = max(p.id_acc_mean for p in study.noisy)
clean_20k = next(p for p in study.clean if p.count == 20 * k)
print(f"\nnoisy plateau (any count): {best_noisy:.3f}")
print(f"clean labels at 20 x K:    {clean_20k.id_acc_mean:.3f}")
