"""Post-hoc OOD detectors and the evaluation metrics on toy logits."""

import numpy as np

from graphood import (
    auroc,
    aupr,
    energy_score,
    entropy_score,
    fpr_at_95_tpr,
    msp_score,
)

rng = np.random.default_rng(0)

# confident ID rows have one large logit; OOD rows are flat and small
id_logits = rng.normal(0, 0.3, (200, 4))
id_logits[np.arange(200), rng.integers(0, 4, 200)] += 8.0
ood_logits = rng.normal(0, 0.5, (200, 4))
logits = np.vstack([id_logits, ood_logits])
is_ood = np.arange(400) >= 200

for fn in (msp_score, entropy_score, energy_score):
    scores = fn(logits)
    print(f"{scores.detector:8s} auroc {auroc(scores.values, is_ood):.4f}  "
          f"aupr {aupr(scores.values, is_ood):.4f}  "
          f"fpr@95 {fpr_at_95_tpr(scores.values, is_ood):.4f}")

# hand-checkable values
print("\nmsp of uniform 4-way row:", msp_score(np.zeros((1, 4))).values[0])
print("entropy of uniform 4-way row:", entropy_score(np.zeros((1, 4))).values[0],
      "= ln 4 =", np.log(4))
print("energy of [0, 0]:", energy_score(np.zeros((1, 2))).values[0], "= -ln 2")

# shifting a row never changes msp/entropy but shifts energy
row = np.array([[1.0, 2.0, 0.5, 0.1]])
print("\nmsp shift-invariant:",
      msp_score(row).values[0] == msp_score(row + 5).values[0])
print("energy shifts by -c:",
      energy_score(row + 5).values[0] - energy_score(row).values[0])
