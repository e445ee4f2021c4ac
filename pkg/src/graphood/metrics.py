"""Evaluation metrics: ID accuracy, AUROC, AUPR, FPR@95, and aggregation.

OOD is the positive class throughout.  Tie conventions are fixed exactly:

- AUROC uses the Mann-Whitney statistic with half credit for tied pairs,
  computed by a single sort with average ranks.
- AUPR is average precision with each tie group processed as one block,
  precision evaluated after the whole block.
- FPR@95 sweeps thresholds at the distinct score values with the decision
  rule ``score >= t`` means OOD, and takes the minimum FPR among thresholds
  reaching TPR >= 0.95.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DegenerateLabels, EmptyIdTestSet


@dataclass(frozen=True)
class EvalReport:
    id_acc: float
    auroc: float
    aupr: float
    fpr_at_95: float
    id_proportion: float | None = None
    seed: int = 0
    config_echo: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "id_acc": self.id_acc,
            "auroc": self.auroc,
            "aupr": self.aupr,
            "fpr_at_95": self.fpr_at_95,
            "id_proportion": self.id_proportion,
            "seed": self.seed,
        }


METRIC_NAMES = ("id_acc", "auroc", "aupr", "fpr_at_95", "id_proportion")


@dataclass(frozen=True)
class AggregateReport:
    """Per-metric mean and sample standard deviation over seeds."""

    means: dict
    stds: dict
    seeds: tuple[int, ...]

    def to_dict(self):
        return {"means": self.means, "stds": self.stds, "seeds": list(self.seeds)}


def id_accuracy(pred_classes, true_classes, id_test_nodes):
    """Fraction correct over exactly the ID members of the test set."""
    id_test_nodes = np.asarray(id_test_nodes, dtype=np.int64)
    if id_test_nodes.size == 0:
        raise EmptyIdTestSet("no ID nodes in the test set")
    pred = np.asarray(pred_classes)[id_test_nodes]
    true = np.asarray(true_classes)[id_test_nodes]
    return float((pred == true).mean())


def _scores_labels(scores, is_ood):
    s = np.asarray(getattr(scores, "values", scores), dtype=np.float64)
    y = np.asarray(is_ood, dtype=bool)
    if s.shape != y.shape:
        raise DegenerateLabels("scores and labels must align")
    return s, y


def auroc(scores, is_ood):
    """Probability a random OOD node outscores a random ID node (ties 0.5)."""
    s, y = _scores_labels(scores, is_ood)
    pos = int(y.sum())
    neg = int(len(y) - pos)
    if pos == 0 or neg == 0:
        raise DegenerateLabels("need at least one OOD and one ID node")

    order = np.argsort(s, kind="mergesort")
    sorted_s = s[order]
    boundaries = np.flatnonzero(np.diff(sorted_s) != 0) + 1
    starts = np.concatenate([[0], boundaries])
    ends = np.concatenate([boundaries, [len(s)]])
    avg_rank = (starts + ends + 1) / 2.0  # 1-based average rank per tie group
    ranks = np.empty(len(s))
    ranks[order] = np.repeat(avg_rank, ends - starts)
    return float((ranks[y].sum() - pos * (pos + 1) / 2.0) / (pos * neg))


def _block_counts(scores, is_ood):
    """Cumulative positive/negative counts after each distinct-score block,
    blocks in descending score order."""
    order = np.argsort(-scores, kind="mergesort")
    s_desc = scores[order]
    y_desc = is_ood[order]
    boundaries = np.flatnonzero(np.diff(s_desc) != 0) + 1
    ends = np.concatenate([boundaries, [len(s_desc)]])
    tp = np.cumsum(y_desc)[ends - 1]
    fp = np.cumsum(~y_desc)[ends - 1]
    return tp.astype(np.float64), fp.astype(np.float64)


def aupr(scores, is_ood):
    """Average precision with tie groups processed as blocks."""
    s, y = _scores_labels(scores, is_ood)
    pos = int(y.sum())
    if pos == 0:
        raise DegenerateLabels("need at least one OOD node")
    tp, fp = _block_counts(s, y)
    precision = tp / (tp + fp)
    delta_recall = np.diff(np.concatenate([[0.0], tp])) / pos
    return float((delta_recall * precision).sum())


def fpr_at_95_tpr(scores, is_ood, tpr_target=0.95):
    """Minimum FPR among distinct-score thresholds reaching the TPR target."""
    s, y = _scores_labels(scores, is_ood)
    pos = int(y.sum())
    neg = int(len(y) - pos)
    if pos == 0 or neg == 0:
        raise DegenerateLabels("need at least one OOD and one ID node")
    tp, fp = _block_counts(s, y)
    tpr = tp / pos
    fpr = fp / neg
    qualifying = fpr[tpr >= tpr_target]
    # the lowest threshold classifies everything OOD (TPR = 1), so this is
    # never empty
    return float(qualifying.min())


def aggregate(reports):
    """Mean and sample std (N-1 denominator; 0 for a single seed) per metric."""
    if not reports:
        raise DegenerateLabels("no reports to aggregate")
    means, stds = {}, {}
    for name in METRIC_NAMES:
        vals = [getattr(r, name) for r in reports]
        if any(v is None for v in vals):
            means[name] = None
            stds[name] = None
            continue
        arr = np.asarray(vals, dtype=np.float64)
        means[name] = float(arr.mean())
        stds[name] = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return AggregateReport(means, stds, tuple(r.seed for r in reports))


def format_percent(mean, std):
    """Render a mean/std pair the way result tables print them."""
    return f"{100.0 * mean:.2f}±{100.0 * std:.2f}"


def report_markdown(aggregate_report, title="results"):
    """Aligned one-row markdown table: ID ACC, AUROC, AUPR, FPR@95."""
    cols = ["id_acc", "auroc", "aupr", "fpr_at_95"]
    headers = ["ID ACC", "AUROC", "AUPR", "FPR@95"]
    cells = []
    for c in cols:
        m, s = aggregate_report.means.get(c), aggregate_report.stds.get(c)
        cells.append("n/a" if m is None else format_percent(m, s))
    lines = [
        f"# {title}",
        "",
        "| " + " | ".join(headers) + " |",
        "|" + "|".join(["---"] * len(headers)) + "|",
        "| " + " | ".join(cells) + " |",
        "",
    ]
    return "\n".join(lines)


def write_report_files(out_dir, payload, aggregate_report, title="results"):
    """Emit ``report.json`` (deterministic bytes) and ``report.md``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(
        json.dumps(payload, sort_keys=True, indent=1) + "\n"
    )
    (out_dir / "report.md").write_text(report_markdown(aggregate_report, title))
