"""End-to-end pipeline orchestration and the budget ledger.

Pipeline modes:

- ``llm_good``: annotate a small random candidate subset with the configured
  annotator, train the K+1 filter on those noisy labels, drop candidates the
  filter calls unknown, spend the human budget inside the kept pool in one
  round, train the ID classifier on the human labels, score with a post-hoc
  detector.
- ``llm_good_combined``: same, but the classifier also consumes the
  annotator's ID labels (human label wins on overlap).
- ``llm_good_f``: the annotator labels every candidate; no filter model.
- ``baseline_*``: classic loop with an initial ID-labeled pool and
  fixed-size selection rounds until the budget is spent.

Every stage that annotates nodes asserts it never touched validation or test
nodes, and the ledger enforces budget totals.  With mock or oracle
annotators, reports are byte-identical across runs for the same config.
"""

from __future__ import annotations

import hashlib
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .annotate import (
    AnnotationCache,
    MockConfusion,
    OracleGroundTruth,
    PromptTemplate,
    RemoteChat,
    annotate,
    pick_annotation_nodes,
    uniform_confusion_matrix,
)
from .bundle import load_bundle
from .config import validate_config
from .errors import (
    BudgetExhausted,
    EmptyTrainingSet,
    GraphOodError,
    LeakageError,
)
from .gcn import LabeledTrainingSet, train
from .graph import build_normalized_adjacency, make_splits
from .metrics import EvalReport, aggregate, id_accuracy, auroc, aupr, fpr_at_95_tpr
from .scores import compute_detector, softmax
from .selection import (
    SelectionResult,
    filter_candidates,
    merge_labels,
    oracle_label,
    propagated_features,
    select_kmedoids,
    select_random,
    select_uncertainty,
    train_filter,
)

# stream tags for per-seed random draws
_S_LLM_PICK = 11
_S_SELECT = 12
_S_MOCK = 13
_S_INIT_POOL = 14
_S_ROUND = 15
_S_STUDY = 16
_S_FILTER_TRAIN = 17
_S_CLF_TRAIN = 18


def derive_seed(seed, stream, extra=0):
    """Deterministic child seed for a named random stream."""
    return int((seed * 1_000_003 + stream * 7_919 + extra * 104_729) % (2 ** 62))


@dataclass
class BudgetLedger:
    """Tracks human and LLM annotation budget consumption."""

    human_total: int
    llm_total: int
    human_used: int = 0
    llm_used: int = 0
    events: list = field(default_factory=list)

    @property
    def human_remaining(self):
        return self.human_total - self.human_used

    @property
    def llm_remaining(self):
        return self.llm_total - self.llm_used

    def spend_human(self, n, note=""):
        if n > self.human_remaining:
            raise BudgetExhausted("human", n, self.human_remaining)
        self.human_used += n
        self.events.append({"kind": "human", "count": int(n), "note": note})

    def spend_llm(self, n, note=""):
        if n > self.llm_remaining:
            raise BudgetExhausted("llm", n, self.llm_remaining)
        self.llm_used += n
        self.events.append({"kind": "llm", "count": int(n), "note": note})

    def to_dict(self):
        return {
            "human_total": self.human_total,
            "human_used": self.human_used,
            "llm_total": self.llm_total,
            "llm_used": self.llm_used,
            "events": self.events,
        }


def guard_no_leakage(nodes, splits):
    """Annotated nodes must stay inside the candidate pool."""
    bad = np.intersect1d(np.asarray(list(nodes), dtype=np.int64), splits.held_out())
    if bad.size:
        raise LeakageError(f"annotation touched held-out nodes {bad[:10].tolist()}")


def build_annotator_spec(config, seed, classes):
    if config.annotator == "oracle":
        return OracleGroundTruth()
    if config.annotator == "mock":
        mock_seed = config.mock_seed
        if mock_seed is None:
            mock_seed = derive_seed(seed, _S_MOCK)
        return MockConfusion(uniform_confusion_matrix(classes, config.mock_epsilon),
                             seed=mock_seed)
    return RemoteChat(
        endpoint=config.endpoint,
        model_name=config.model_name,
        max_in_flight=config.max_in_flight,
        max_retries=config.max_retries,
    )


def _classifier_val_eval(splits, classes, graph_labels):
    val = splits.val_nodes
    val_id = val[classes.id_mask(np.asarray(graph_labels)[val])]
    dense = classes.dense_id_labels(graph_labels)

    def val_eval(acts):
        pred = np.argmax(acts.logits[val_id], axis=1)
        return float((pred == dense[val_id]).mean())

    return val_eval


def _train_classifier(X, adj, train_set, splits, classes, graph_labels, config,
                      seed, allow_empty=False):
    cfg = replace(config.classifier_train, seed=derive_seed(seed, _S_CLF_TRAIN))
    val_eval = _classifier_val_eval(splits, classes, graph_labels)
    if len(train_set) == 0:
        if not allow_empty:
            raise EmptyTrainingSet("no ID labels to train the classifier")
        cfg = replace(cfg, epochs=0)
    return train(X, adj, classes.num_id, train_set, val_eval, cfg)


def _evaluate(logits, adj, graph, classes, splits, detector, id_proportion, seed):
    test = splits.test_nodes
    labels = graph.labels
    is_ood_test = ~classes.id_mask(labels[test])
    id_test = test[~is_ood_test]
    dense = classes.dense_id_labels(labels)
    pred = np.argmax(logits, axis=1)

    detector_scores = compute_detector(detector, logits, adj)
    test_scores = detector_scores.values[test]
    return EvalReport(
        id_acc=id_accuracy(pred, dense, id_test),
        auroc=auroc(test_scores, is_ood_test),
        aupr=aupr(test_scores, is_ood_test),
        fpr_at_95=fpr_at_95_tpr(test_scores, is_ood_test),
        id_proportion=id_proportion,
        seed=seed,
    )


def _annotate_candidates(config, graph, classes, splits, seed, nodes, cache):
    guard_no_leakage(nodes, splits)
    spec = build_annotator_spec(config, seed, classes)
    template = PromptTemplate(kind=config.prompt_kind, object_word=config.object_word)
    return annotate(nodes, graph, classes, spec, template=template, cache=cache)


def _select_from_pool(config, pool, budget, seed, filter_result, adj, X):
    if budget <= 0 or len(pool) == 0:
        return SelectionResult((), config.selection, max(int(budget), 0))
    if config.selection == "random":
        return select_random(pool, budget, derive_seed(seed, _S_SELECT))
    if config.selection == "uncertainty":
        probs = softmax(filter_result.acts.logits)
        return select_uncertainty(probs, pool, budget)
    if config.selection == "kmedoids" and filter_result is not None:
        emb = filter_result.acts.H1
    else:  # kmedoids_featprop, or kmedoids without a filter model
        emb = propagated_features(adj, X)
    return select_kmedoids(emb, pool, budget, derive_seed(seed, _S_SELECT),
                           fixed_clusters=config.kmedoids_fixed_clusters)


@dataclass
class SeedArtifacts:
    """Everything a single-seed run produced besides the metric report."""

    splits: object
    ledger: BudgetLedger
    annotation: object = None
    filter_result: object = None
    kept_pool: np.ndarray | None = None
    selection: object = None
    oracle: object = None
    merged: object = None
    classifier_model: object = None
    classifier_acts: object = None


def run_single(config, graph, classes, seed, adj=None, cache=None):
    """One seed of the configured pipeline; returns (EvalReport, artifacts)."""
    if adj is None:
        adj = build_normalized_adjacency(graph)
    X = graph.features
    k = classes.num_id
    budget = config.resolve_human_budget(k)
    splits = make_splits(graph, classes, seed, val_per_class=config.val_per_class,
                         test_id=config.test_id, test_ood=config.test_ood)

    if config.mode.startswith("baseline_"):
        return _run_baseline_seed(config, graph, classes, splits, adj, X, seed, budget)

    full_filter = config.mode == "llm_good_f"
    if full_filter:
        llm_nodes = splits.candidate_nodes
        llm_total = len(llm_nodes)
    else:
        llm_total = config.llm_budget
        llm_nodes = pick_annotation_nodes(
            splits.candidate_nodes, config.llm_budget, derive_seed(seed, _S_LLM_PICK))
    ledger = BudgetLedger(human_total=budget, llm_total=llm_total)
    ledger.spend_llm(len(llm_nodes), note="zero-shot annotation")

    ann = _annotate_candidates(config, graph, classes, splits, seed, llm_nodes, cache)

    filter_result = None
    if full_filter:
        kept = np.asarray(sorted(ann.id_labeled(classes)), dtype=np.int64)
    else:
        filter_cfg = replace(config.filter_train, seed=derive_seed(seed, _S_FILTER_TRAIN))
        filter_result = train_filter(X, adj, ann, graph.labels, classes, splits,
                                     filter_cfg, config.unknown_weights)
        kept = filter_candidates(filter_result.acts.logits,
                                 splits.candidate_nodes, k).node_ids

    selection = _select_from_pool(config, kept, budget, seed, filter_result, adj, X)
    guard_no_leakage(selection.selected, splits)
    oracle = oracle_label(selection, graph, classes, ledger)

    merge_mode = "combined" if config.mode == "llm_good_combined" else "human_only"
    merged = merge_labels(oracle, ann if merge_mode == "combined" else None,
                          classes, merge_mode)

    model, acts, _ = _train_classifier(X, adj, merged.train_set, splits, classes,
                                       graph.labels, config, seed)
    report = _evaluate(acts.logits, adj, graph, classes, splits, config.detector,
                       oracle.id_proportion, seed)

    assert ledger.human_used <= ledger.human_total
    assert ledger.llm_used <= ledger.llm_total
    artifacts = SeedArtifacts(
        splits=splits, ledger=ledger, annotation=ann, filter_result=filter_result,
        kept_pool=kept, selection=selection, oracle=oracle, merged=merged,
        classifier_model=model, classifier_acts=acts,
    )
    return report, artifacts


_BASELINE_DETECTOR = {
    "baseline_msp": "msp",
    "baseline_entropy": "entropy",
    "baseline_energy": "energy",
    "baseline_uncertainty": "msp",
    "baseline_featprop": "msp",
}


def _run_baseline_seed(config, graph, classes, splits, adj, X, seed, budget):
    """Initial ID-labeled pool, then fixed-size selection rounds."""
    k = classes.num_id
    ledger = BudgetLedger(human_total=budget, llm_total=0)
    dense = classes.dense_id_labels(graph.labels)

    initial_n = min(5 * k if budget >= 10 * k else k, budget)
    cand_id = splits.candidate_nodes[classes.id_mask(graph.labels[splits.candidate_nodes])]
    rng = np.random.default_rng(derive_seed(seed, _S_INIT_POOL))
    initial = np.sort(rng.choice(cand_id, size=initial_n, replace=False))
    guard_no_leakage(initial, splits)
    ledger.spend_human(initial_n, note="initial labeled pool")

    labeled = {int(n): int(dense[n]) for n in initial}
    touched = set(labeled)
    annotated_total = initial_n
    id_total = initial_n

    round_idx = 0
    model, acts = None, None
    while ledger.human_remaining > 0:
        round_size = min(k, ledger.human_remaining)
        train_set = LabeledTrainingSet.from_mapping(labeled)
        model, acts, _ = _train_classifier(X, adj, train_set, splits, classes,
                                           graph.labels, config, seed)
        pool = np.asarray(
            [n for n in splits.candidate_nodes if int(n) not in touched],
            dtype=np.int64)
        if len(pool) == 0:
            break
        if config.mode == "baseline_uncertainty":
            selection = select_uncertainty(softmax(acts.logits), pool, round_size)
        elif config.mode == "baseline_featprop":
            selection = select_kmedoids(
                propagated_features(adj, X), pool, round_size,
                derive_seed(seed, _S_ROUND, round_idx),
                fixed_clusters=config.kmedoids_fixed_clusters)
        else:
            selection = select_random(pool, round_size,
                                      derive_seed(seed, _S_ROUND, round_idx))
        guard_no_leakage(selection.selected, splits)
        oracle = oracle_label(selection, graph, classes, ledger)
        labeled.update(oracle.labels)
        touched.update(selection.selected)
        annotated_total += len(selection.selected)
        id_total += len(oracle.labels)
        round_idx += 1

    train_set = LabeledTrainingSet.from_mapping(labeled)
    model, acts, _ = _train_classifier(X, adj, train_set, splits, classes,
                                       graph.labels, config, seed)
    detector = _BASELINE_DETECTOR[config.mode]
    report = _evaluate(acts.logits, adj, graph, classes, splits, detector,
                       id_total / annotated_total if annotated_total else None, seed)
    assert ledger.human_used <= ledger.human_total
    artifacts = SeedArtifacts(splits=splits, ledger=ledger,
                              classifier_model=model, classifier_acts=acts)
    return report, artifacts


@dataclass
class PipelineResult:
    config: object
    per_seed: list
    aggregate: object
    failures: list
    timings: dict = field(default_factory=dict)
    artifacts: dict = field(default_factory=dict)


def config_echo(config):
    doc = asdict(config)
    return doc


def run_pipeline(config, graph=None, classes=None, keep_artifacts=False):
    """Run every configured seed and aggregate the reports.

    A failing seed is recorded as a structured failure and the remaining
    seeds still run; the aggregate covers the successful ones.
    """
    validate_config(config)
    if graph is None:
        if config.dataset_path is None:
            raise GraphOodError("no graph given and no dataset path configured")
        graph, classes, _ = load_bundle(config.dataset_path)
    adj = build_normalized_adjacency(graph)
    cache = AnnotationCache(config.cache_path) if config.cache_path else None

    reports, failures, timings, artifacts = [], [], {}, {}
    for seed in config.seeds:
        started = time.perf_counter()
        try:
            report, arts = run_single(config, graph, classes, seed, adj=adj, cache=cache)
            reports.append(report)
            if keep_artifacts:
                artifacts[seed] = arts
        except GraphOodError as exc:
            failures.append({"seed": int(seed), "error": type(exc).__name__,
                             "message": str(exc)})
        timings[str(seed)] = time.perf_counter() - started

    agg = aggregate(reports) if reports else None
    return PipelineResult(config=config, per_seed=reports, aggregate=agg,
                          failures=failures, timings=timings, artifacts=artifacts)


def report_payload(result):
    """Deterministic document for ``report.json`` (no timings, no clocks)."""
    return {
        "mode": result.config.mode,
        "config": config_echo(result.config),
        "per_seed": [r.to_dict() for r in result.per_seed],
        "aggregate": result.aggregate.to_dict() if result.aggregate else None,
        "failures": result.failures,
    }


def _hash_file(path):
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def emit_report(result, out_dir):
    """Write report.json, report.md, and the experiment.json manifest."""
    from .metrics import write_report_files

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    payload = report_payload(result)
    if result.aggregate is not None:
        write_report_files(out_dir, payload, result.aggregate,
                           title=f"{result.config.mode} results")
    else:
        (out_dir / "report.json").write_text(
            json.dumps(payload, sort_keys=True, indent=1) + "\n")

    inputs = {}
    if result.config.dataset_path:
        bundle = Path(result.config.dataset_path)
        for name in ("meta.json", "edges.tsv", "features.bin", "labels.tsv"):
            p = bundle / name
            if p.exists():
                inputs[name] = _hash_file(p)
    manifest = {
        "config": config_echo(result.config),
        "inputs": inputs,
        "timings": result.timings,
        "failures": result.failures,
    }
    (out_dir / "experiment.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    return out_dir / "report.json"


@dataclass
class StudyPoint:
    count: int
    id_acc_mean: float
    id_acc_std: float
    auroc_mean: float
    auroc_std: float


@dataclass
class StudyResult:
    noisy: list
    clean: list

    def to_dict(self):
        return {
            "noisy": [asdict(p) for p in self.noisy],
            "clean": [asdict(p) for p in self.clean],
        }


def run_upper_bound_study(config, label_counts, graph=None, classes=None):
    """Train the classifier on N noisy versus N oracle-labeled random nodes.

    For each count, the given number of candidate nodes is annotated (noisy
    curve: the configured annotator; clean curve: ground truth) and the ID
    subset trains the classifier.  Returns paired curves of ID accuracy and
    AUROC, aggregated over the configured seeds.
    """
    validate_config(config)
    if graph is None:
        graph, classes, _ = load_bundle(config.dataset_path)
    adj = build_normalized_adjacency(graph)
    X = graph.features
    cache = AnnotationCache(config.cache_path) if config.cache_path else None

    noisy_points, clean_points = [], []
    for count in label_counts:
        noisy_reports, clean_reports = [], []
        for seed in config.seeds:
            splits = make_splits(graph, classes, seed,
                                 val_per_class=config.val_per_class,
                                 test_id=config.test_id, test_ood=config.test_ood)
            picker_seed = derive_seed(seed, _S_STUDY, count)
            nodes = pick_annotation_nodes(splits.candidate_nodes, count, picker_seed)
            guard_no_leakage(nodes, splits)

            spec = build_annotator_spec(config, seed, classes)
            template = PromptTemplate(kind=config.prompt_kind,
                                      object_word=config.object_word)
            ann = annotate(nodes, graph, classes, spec, template=template,
                           cache=cache)
            noisy_train = LabeledTrainingSet.from_mapping(ann.id_labeled(classes))
            _, acts, _ = _train_classifier(X, adj, noisy_train, splits, classes,
                                           graph.labels, config, seed,
                                           allow_empty=True)
            noisy_reports.append(_evaluate(acts.logits, adj, graph, classes, splits,
                                           config.detector, None, seed))

            dense = classes.dense_id_labels(graph.labels)
            clean_map = {int(n): int(dense[n]) for n in nodes if dense[n] >= 0}
            clean_train = LabeledTrainingSet.from_mapping(clean_map)
            _, acts, _ = _train_classifier(X, adj, clean_train, splits, classes,
                                           graph.labels, config, seed,
                                           allow_empty=True)
            clean_reports.append(_evaluate(acts.logits, adj, graph, classes, splits,
                                           config.detector, None, seed))

        for reports, points in ((noisy_reports, noisy_points),
                                (clean_reports, clean_points)):
            agg = aggregate(reports)
            points.append(StudyPoint(
                count=int(count),
                id_acc_mean=agg.means["id_acc"], id_acc_std=agg.stds["id_acc"],
                auroc_mean=agg.means["auroc"], auroc_std=agg.stds["auroc"],
            ))
    return StudyResult(noisy=noisy_points, clean=clean_points)


def emit_study(study, out_dir):
    """Write study.json plus a plot-ready TSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "study.json").write_text(
        json.dumps(study.to_dict(), sort_keys=True, indent=1) + "\n")
    with open(out_dir / "study.tsv", "w") as fh:
        fh.write("curve\tcount\tid_acc_mean\tid_acc_std\tauroc_mean\tauroc_std\n")
        for name, points in (("noisy", study.noisy), ("clean", study.clean)):
            for p in points:
                fh.write(f"{name}\t{p.count}\t{p.id_acc_mean!r}\t{p.id_acc_std!r}"
                         f"\t{p.auroc_mean!r}\t{p.auroc_std!r}\n")
    return out_dir / "study.json"
