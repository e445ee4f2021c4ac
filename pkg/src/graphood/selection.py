"""Noisy-label filter training, candidate filtering, and node selection.

The K+1 filter is a GCN trained on annotator labels with a down-weighted
unknown class; the weight is swept over a small grid and chosen by binary
ID-vs-OOD accuracy on the validation nodes.  Candidates whose predicted class
lands in the unknown slot are excluded before the human budget is spent.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial.distance import cdist

from .errors import BudgetExhausted, EmptySet, ShapeMismatch
from .gcn import LabeledTrainingSet, config_with_weights, train

DEFAULT_UNKNOWN_WEIGHTS = (0.05, 0.1, 0.2, 0.3, 0.5)


@dataclass(frozen=True)
class CandidateIdSet:
    """Candidates the filter predicts to be ID, plus the logits snapshot."""

    node_ids: np.ndarray
    logits: np.ndarray  # full-graph filter logits, one row per node


@dataclass(frozen=True)
class SelectionResult:
    selected: tuple[int, ...]
    strategy: str
    budget: int

    def __post_init__(self):
        if len(set(self.selected)) != len(self.selected):
            raise ShapeMismatch("duplicate node in selection")
        if len(self.selected) > self.budget:
            raise ShapeMismatch("selection exceeds budget")


@dataclass
class OracleLabels:
    """Human labeling outcome: dense ID labels and revealed-OOD nodes."""

    labels: dict
    revealed_ood: tuple[int, ...]
    id_proportion: float | None


@dataclass
class MergedLabels:
    train_set: LabeledTrainingSet
    conflict_count: int


@dataclass
class FilterResult:
    model: object
    acts: object
    unknown_weight: float
    sweep_scores: dict


def binary_val_accuracy(logits, val_nodes, true_id_mask, k):
    """Fraction of validation nodes whose ID/OOD call matches ground truth."""
    pred_id = np.argmax(logits[val_nodes], axis=1) < k
    return float((pred_id == true_id_mask).mean())


def train_filter(X, adj, annotations, graph_labels, classes, splits, config,
                 unknown_weights=DEFAULT_UNKNOWN_WEIGHTS):
    """Sweep the unknown-class weight and keep the best filter.

    Each sweep entry trains a fresh K+1 GCN on the annotator labels (ID-class
    weights 1, unknown weight w) with identical seeding, scoring epochs by
    binary ID-vs-OOD validation accuracy.  Ties keep the earliest weight in
    the grid.
    """
    if not annotations.entries:
        raise EmptySet("no annotations to train the filter on")
    k = classes.num_id
    train_set = LabeledTrainingSet.from_mapping(
        annotations.labels(),
        {n: annotations.source for n in annotations.entries},
    )
    val = splits.val_nodes
    true_id = classes.id_mask(np.asarray(graph_labels)[val])

    def val_eval(acts):
        return binary_val_accuracy(acts.logits, val, true_id, k)

    best = None
    sweep_scores = {}
    for w in unknown_weights:
        cfg = config_with_weights(config, (1.0,) * k + (float(w),))
        model, acts, log = train(X, adj, k + 1, train_set, val_eval, cfg)
        score = val_eval(acts)
        sweep_scores[float(w)] = score
        if best is None or score > best[0]:
            best = (score, float(w), model, acts)
    _, weight, model, acts = best
    return FilterResult(model=model, acts=acts, unknown_weight=weight,
                        sweep_scores=sweep_scores)


def filter_candidates(logits, candidate_nodes, k):
    """Keep candidates whose argmax over the K+1 logits is an ID class.

    ``np.argmax`` breaks ties toward the lowest index, so an ID class tied
    with the unknown class keeps the node.
    """
    candidate_nodes = np.asarray(candidate_nodes, dtype=np.int64)
    winners = np.argmax(logits[candidate_nodes], axis=1)
    kept = candidate_nodes[winners < k]
    return CandidateIdSet(node_ids=np.sort(kept), logits=np.asarray(logits))


def select_random(pool, budget, seed):
    """Uniform sample without replacement, deterministic per seed."""
    pool = np.sort(np.asarray(pool, dtype=np.int64))
    size = min(int(budget), len(pool))
    rng = np.random.default_rng(seed)
    picked = rng.choice(pool, size=size, replace=False)
    return SelectionResult(tuple(int(n) for n in np.sort(picked)), "random", int(budget))


def select_uncertainty(probs, pool, budget):
    """Highest softmax entropy first; ties broken by node index ascending."""
    pool = np.sort(np.asarray(pool, dtype=np.int64))
    p = np.asarray(probs)[pool]
    plogp = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    entropy = -plogp.sum(axis=1)
    order = np.lexsort((pool, -entropy))
    picked = pool[order[: min(int(budget), len(pool))]]
    return SelectionResult(tuple(int(n) for n in picked), "uncertainty", int(budget))


def _kmedoids_pp_init(dist, k, rng):
    """k-medoids++ seeding on a precomputed distance matrix."""
    m = dist.shape[0]
    chosen = [int(rng.integers(m))]
    closest_sq = dist[chosen[0]] ** 2
    while len(chosen) < k:
        total = closest_sq.sum()
        if total <= 0.0:
            remaining = np.setdiff1d(np.arange(m), np.asarray(chosen))
            pick = int(rng.choice(remaining))
        else:
            pick = int(rng.choice(m, p=closest_sq / total))
        chosen.append(pick)
        closest_sq = np.minimum(closest_sq, dist[pick] ** 2)
    return np.asarray(chosen, dtype=np.int64)


def _kmedoids(dist, k, rng, max_iter=100):
    """Alternating assignment / medoid-update sweeps; returns local indices
    and cluster assignments."""
    medoids = _kmedoids_pp_init(dist, k, rng)
    assign = np.argmin(dist[:, medoids], axis=1)
    for _ in range(max_iter):
        new_medoids = medoids.copy()
        for c in range(k):
            members = np.flatnonzero(assign == c)
            if members.size == 0:
                continue
            costs = dist[np.ix_(members, members)].sum(axis=1)
            new_medoids[c] = members[int(np.argmin(costs))]
        new_assign = np.argmin(dist[:, new_medoids], axis=1)
        if np.array_equal(new_medoids, medoids):
            break
        medoids, assign = new_medoids, new_assign
    return medoids, assign


def kmedoids_cost(embeddings, pool, selected):
    """Total distance from every pool point to its nearest selected point."""
    pool = np.asarray(pool, dtype=np.int64)
    sel = np.asarray(selected, dtype=np.int64)
    d = cdist(np.asarray(embeddings)[pool], np.asarray(embeddings)[sel])
    return float(d.min(axis=1).sum())


def select_kmedoids(embeddings, pool, budget, seed, fixed_clusters=None):
    """Medoids of a PAM-style clustering over the pool's embedding rows.

    By default the cluster count equals the selection size.  With
    ``fixed_clusters`` set, the pool is clustered into that many groups and
    the medoids of the largest clusters are taken instead.
    """
    pool = np.sort(np.asarray(pool, dtype=np.int64))
    budget = int(budget)
    size = min(budget, len(pool))
    if size == 0:
        return SelectionResult((), "kmedoids_featprop", budget)
    rng = np.random.default_rng(seed)
    emb = np.asarray(embeddings)[pool]
    dist = cdist(emb, emb)

    k = min(fixed_clusters, len(pool)) if fixed_clusters else size
    medoids, assign = _kmedoids(dist, k, rng)
    if fixed_clusters:
        sizes = np.bincount(assign, minlength=k)
        # largest clusters first; medoid node id breaks ties
        order = np.lexsort((pool[medoids], -sizes))
        medoids = medoids[order[:size]]
    picked = pool[medoids]
    return SelectionResult(
        tuple(int(n) for n in np.sort(picked)), "kmedoids_featprop", budget
    )


def propagated_features(adj, X, steps=2):
    """Features smoothed by repeated adjacency application (for FeatProp)."""
    out = np.asarray(X, dtype=np.float64)
    for _ in range(steps):
        out = adj.apply(out)
    return out


def oracle_label(selection, graph, classes, ledger):
    """Spend one budget unit per selected node and reveal its true status.

    ID nodes yield their dense ID class; OOD nodes are revealed as OOD and
    excluded from classifier training.  Budget is consumed for every selected
    node regardless of outcome.
    """
    n = len(selection.selected)
    if ledger.human_remaining < n:
        raise BudgetExhausted("human", n, ledger.human_remaining)
    ledger.spend_human(n, note=f"oracle labeling ({selection.strategy})")
    labels = {}
    revealed = []
    for node in selection.selected:
        c = int(graph.labels[node])
        if classes.is_id(c):
            labels[node] = classes.id_position(c)
        else:
            revealed.append(node)
    proportion = len(labels) / n if n else None
    return OracleLabels(labels=labels, revealed_ood=tuple(revealed),
                        id_proportion=proportion)


def merge_labels(oracle, llm_set, classes, mode="human_only"):
    """Combine human and annotator ID labels into one training set.

    ``human_only`` keeps just the oracle labels.  ``combined`` adds annotator
    ID labels for nodes the human never touched; on overlap the human outcome
    wins, and disagreements (including annotator-ID versus revealed-OOD) are
    counted as conflicts.  Unknown-labeled annotator entries are dropped.
    """
    if mode not in ("human_only", "combined"):
        raise ShapeMismatch(f"unknown merge mode {mode!r}")
    merged = dict(oracle.labels)
    provenance = {n: "oracle" for n in merged}
    conflicts = 0
    if mode == "combined" and llm_set is not None:
        revealed = set(oracle.revealed_ood)
        for node, label in sorted(llm_set.id_labeled(classes).items()):
            if node in oracle.labels:
                if oracle.labels[node] != label:
                    conflicts += 1
                continue
            if node in revealed:
                conflicts += 1
                continue
            merged[node] = label
            provenance[node] = "llm"
    train_set = LabeledTrainingSet.from_mapping(merged, provenance)
    return MergedLabels(train_set=train_set, conflict_count=conflicts)


def save_selection(path, selection, oracle=None, seed=None):
    """Serialize the selection round to ``selection.json``."""
    doc = {
        "strategy": selection.strategy,
        "seed": seed,
        "budget": selection.budget,
        "selected": list(selection.selected),
    }
    if oracle is not None:
        doc["revealed_labels"] = {str(n): int(l) for n, l in sorted(oracle.labels.items())}
        doc["revealed_ood"] = list(oracle.revealed_ood)
        doc["id_proportion"] = oracle.id_proportion
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_selection(path):
    doc = json.loads(Path(path).read_text())
    selection = SelectionResult(tuple(doc["selected"]), doc["strategy"], doc["budget"])
    oracle = None
    if "revealed_labels" in doc:
        oracle = OracleLabels(
            labels={int(n): int(l) for n, l in doc["revealed_labels"].items()},
            revealed_ood=tuple(doc.get("revealed_ood", ())),
            id_proportion=doc.get("id_proportion"),
        )
    return selection, oracle, doc.get("seed")
