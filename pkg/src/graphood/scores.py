"""Post-hoc OOD scoring over classifier logits.

Every detector returns scores oriented so that higher means more likely OOD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class OodScores:
    values: np.ndarray
    detector: str


def softmax(logits):
    """Row softmax with max subtraction; rows sum to 1."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def msp_score(logits):
    """1 minus the maximum softmax probability."""
    return OodScores(1.0 - softmax(logits).max(axis=1), "msp")


def entropy_score(logits):
    """Shannon entropy of the softmax row; 0*log0 counts as 0."""
    p = softmax(logits)
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return OodScores(-plogp.sum(axis=1), "entropy")


def energy_score(logits, temperature=1.0):
    """Negative temperature-scaled log-sum-exp of the logits."""
    if temperature <= 0:
        raise ValueError("temperature must be > 0")
    z = logits / temperature
    m = z.max(axis=1)
    lse = m + np.log(np.exp(z - m[:, None]).sum(axis=1))
    return OodScores(-temperature * lse, "energy")


def propagate_scores(scores, adj, alpha=0.5, steps=2):
    """Blend each score with its neighborhood: s <- (1-a) s + a (A s)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must be in [0, 1]")
    if steps < 0:
        raise ValueError("steps must be >= 0")
    s = np.asarray(scores.values if isinstance(scores, OodScores) else scores,
                   dtype=np.float64)
    for _ in range(steps):
        s = (1.0 - alpha) * s + alpha * adj.apply(s)
    name = scores.detector + "_prop" if isinstance(scores, OodScores) else "prop"
    return OodScores(s, name)


def compute_detector(name, logits, adj=None):
    """Dispatch a detector by config name."""
    if name == "msp":
        return msp_score(logits)
    if name == "entropy":
        return entropy_score(logits)
    if name == "energy":
        return energy_score(logits)
    if name == "energy_prop":
        if adj is None:
            raise ValueError("energy_prop needs the adjacency operator")
        return propagate_scores(energy_score(logits), adj)
    raise ValueError(f"unknown detector {name!r}")


def write_scores_tsv(path, node_ids, scores):
    with open(path, "w") as fh:
        for node, value in zip(node_ids, scores.values):
            fh.write(f"{int(node)}\t{scores.detector}\t{value!r}\n")
