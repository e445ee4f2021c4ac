"""Command-line interface.

Stage subcommands operate on artifacts inside ``--out-dir`` so a pipeline can
be run step by step (``prepare-splits`` through ``evaluate``); ``run`` and
``study-upper-bound`` execute multi-seed experiments in one shot and
``report`` consolidates several report.json files into a comparison table.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .annotate import AnnotationCache, AnnotationSet
from .bundle import load_bundle, load_splits, save_splits
from .config import parse_config
from .errors import GraphOodError
from .gcn import load_checkpoint, save_checkpoint
from .graph import build_normalized_adjacency, make_splits
from .metrics import aggregate, format_percent
from .pipeline import (
    BudgetLedger,
    _annotate_candidates,
    _evaluate,
    _select_from_pool,
    _train_classifier,
    derive_seed,
    emit_report,
    emit_study,
    pick_annotation_nodes,
    run_pipeline,
    run_upper_bound_study,
    _S_LLM_PICK,
)
from .scores import compute_detector, write_scores_tsv
from .selection import (
    FilterResult,
    filter_candidates,
    load_selection,
    merge_labels,
    oracle_label,
    save_selection,
    train_filter,
)
from .gcn import forward


def _load_context(args):
    config = parse_config(args.config)
    if args.out_dir:
        config = replace(config, out_dir=args.out_dir)
    graph, classes, meta = load_bundle(config.dataset_path)
    adj = build_normalized_adjacency(graph)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return config, graph, classes, adj, out


def _stage_seed(args, config):
    return args.seed if args.seed is not None else config.seeds[0]


def cmd_prepare_splits(args):
    config, graph, classes, _, out = _load_context(args)
    seed = _stage_seed(args, config)
    splits = make_splits(graph, classes, seed, val_per_class=config.val_per_class,
                         test_id=config.test_id, test_ood=config.test_ood)
    save_splits(out / "splits.json", splits)
    print(f"splits written: {len(splits.val_nodes)} val, {len(splits.test_nodes)} test, "
          f"{len(splits.candidate_nodes)} candidate")


def cmd_annotate(args):
    config, graph, classes, _, out = _load_context(args)
    seed = _stage_seed(args, config)
    splits = load_splits(out / "splits.json")
    if config.mode == "llm_good_f":
        nodes = splits.candidate_nodes
    else:
        nodes = pick_annotation_nodes(splits.candidate_nodes, config.llm_budget,
                                      derive_seed(seed, _S_LLM_PICK))
    cache = AnnotationCache(config.cache_path) if config.cache_path else None
    ann = _annotate_candidates(config, graph, classes, splits, seed, nodes, cache)
    (out / "annotation_set.json").write_text(
        json.dumps(ann.to_dict(), sort_keys=True, indent=1) + "\n")
    print(f"annotated {len(ann.entries)} nodes ({ann.source}), "
          f"{len(ann.failures)} failures")


def cmd_train_filter(args):
    config, graph, classes, adj, out = _load_context(args)
    seed = _stage_seed(args, config)
    splits = load_splits(out / "splits.json")
    ann = AnnotationSet.from_dict(json.loads((out / "annotation_set.json").read_text()))
    from .pipeline import _S_FILTER_TRAIN

    cfg = replace(config.filter_train, seed=derive_seed(seed, _S_FILTER_TRAIN))
    result = train_filter(graph.features, adj, ann, graph.labels, classes, splits,
                          cfg, config.unknown_weights)
    save_checkpoint(out / "filter.ckpt", result.model,
                    meta={"unknown_weight": result.unknown_weight})
    kept = filter_candidates(result.acts.logits, splits.candidate_nodes,
                             classes.num_id)
    (out / "filter.json").write_text(json.dumps({
        "unknown_weight": result.unknown_weight,
        "sweep_scores": result.sweep_scores,
        "kept_candidates": [int(n) for n in kept.node_ids],
    }, sort_keys=True, indent=1) + "\n")
    print(f"filter trained (unknown weight {result.unknown_weight}); "
          f"kept {len(kept.node_ids)} of {len(splits.candidate_nodes)} candidates")


def cmd_select(args):
    config, graph, classes, adj, out = _load_context(args)
    seed = _stage_seed(args, config)
    splits = load_splits(out / "splits.json")
    budget = config.resolve_human_budget(classes.num_id)

    filter_result = None
    if (out / "filter.ckpt").exists():
        model, _ = load_checkpoint(out / "filter.ckpt")
        acts = forward(model, adj, graph.features)
        filter_result = FilterResult(model=model, acts=acts, unknown_weight=0.0,
                                     sweep_scores={})
        pool = np.asarray(json.loads((out / "filter.json").read_text())["kept_candidates"],
                          dtype=np.int64)
    else:
        ann = AnnotationSet.from_dict(
            json.loads((out / "annotation_set.json").read_text()))
        pool = np.asarray(sorted(ann.id_labeled(classes)), dtype=np.int64)

    selection = _select_from_pool(config, pool, budget, seed, filter_result, adj,
                                  graph.features)
    save_selection(out / "selection.json", selection, seed=seed)
    print(f"selected {len(selection.selected)} nodes via {selection.strategy}")


def cmd_oracle_label(args):
    config, graph, classes, _, out = _load_context(args)
    seed = _stage_seed(args, config)
    selection, _, _ = load_selection(out / "selection.json")
    ledger = BudgetLedger(human_total=config.resolve_human_budget(classes.num_id),
                          llm_total=0)
    oracle = oracle_label(selection, graph, classes, ledger)
    save_selection(out / "selection.json", selection, oracle=oracle, seed=seed)
    print(f"labeled {len(oracle.labels)} ID nodes, revealed "
          f"{len(oracle.revealed_ood)} OOD (proportion {oracle.id_proportion})")


def cmd_train_classifier(args):
    config, graph, classes, adj, out = _load_context(args)
    seed = _stage_seed(args, config)
    splits = load_splits(out / "splits.json")
    _, oracle, _ = load_selection(out / "selection.json")
    ann = None
    if config.mode == "llm_good_combined":
        ann = AnnotationSet.from_dict(
            json.loads((out / "annotation_set.json").read_text()))
    merge_mode = "combined" if config.mode == "llm_good_combined" else "human_only"
    merged = merge_labels(oracle, ann, classes, merge_mode)
    model, _, _ = _train_classifier(graph.features, adj, merged.train_set, splits,
                                    classes, graph.labels, config, seed)
    save_checkpoint(out / "classifier.ckpt", model,
                    meta={"train_size": len(merged.train_set)})
    print(f"classifier trained on {len(merged.train_set)} labels "
          f"({merged.conflict_count} conflicts)")


def cmd_score(args):
    config, graph, classes, adj, out = _load_context(args)
    model, _ = load_checkpoint(out / "classifier.ckpt")
    acts = forward(model, adj, graph.features)
    scores = compute_detector(config.detector, acts.logits, adj)
    write_scores_tsv(out / "scores.tsv", np.arange(graph.num_nodes), scores)
    print(f"wrote {config.detector} scores for {graph.num_nodes} nodes")


def cmd_evaluate(args):
    config, graph, classes, adj, out = _load_context(args)
    seed = _stage_seed(args, config)
    splits = load_splits(out / "splits.json")
    model, _ = load_checkpoint(out / "classifier.ckpt")
    acts = forward(model, adj, graph.features)
    _, oracle, _ = load_selection(out / "selection.json")
    prop = oracle.id_proportion if oracle else None
    report = _evaluate(acts.logits, adj, graph, classes, splits, config.detector,
                       prop, seed)
    (out / "report.json").write_text(
        json.dumps({"per_seed": [report.to_dict()]}, sort_keys=True, indent=1) + "\n")
    print(json.dumps(report.to_dict(), indent=1))


def cmd_run(args):
    config = parse_config(args.config)
    if args.out_dir:
        config = replace(config, out_dir=args.out_dir)
    result = run_pipeline(config)
    path = emit_report(result, config.out_dir)
    if result.aggregate:
        m, s = result.aggregate.means, result.aggregate.stds
        print(f"id_acc {format_percent(m['id_acc'], s['id_acc'])}  "
              f"auroc {format_percent(m['auroc'], s['auroc'])}  "
              f"aupr {format_percent(m['aupr'], s['aupr'])}  "
              f"fpr@95 {format_percent(m['fpr_at_95'], s['fpr_at_95'])}")
    for failure in result.failures:
        print(f"seed {failure['seed']} failed: {failure['error']}: "
              f"{failure['message']}", file=sys.stderr)
    print(f"report: {path}")


def cmd_study_upper_bound(args):
    config = parse_config(args.config)
    if args.out_dir:
        config = replace(config, out_dir=args.out_dir)
    counts = [int(c) for c in args.counts.split(",") if c.strip()]
    study = run_upper_bound_study(config, counts)
    path = emit_study(study, config.out_dir)
    print(f"study: {path}")


def cmd_report(args):
    rows = []
    for path in args.inputs:
        doc = json.loads(Path(path).read_text())
        agg = doc.get("aggregate")
        if not agg:
            continue
        rows.append((doc.get("mode", Path(path).stem), agg["means"], agg["stds"]))
    headers = ["mode", "ID ACC", "AUROC", "AUPR", "FPR@95"]
    lines = ["| " + " | ".join(headers) + " |",
             "|" + "|".join(["---"] * len(headers)) + "|"]
    for mode, means, stds in rows:
        cells = [mode]
        for key in ("id_acc", "auroc", "aupr", "fpr_at_95"):
            cells.append("n/a" if means.get(key) is None
                         else format_percent(means[key], stds[key]))
        lines.append("| " + " | ".join(cells) + " |")
    table = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(table)
    print(table)


def build_parser():
    parser = argparse.ArgumentParser(prog="graphood")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, needs_config=True):
        p = sub.add_parser(name)
        if needs_config:
            p.add_argument("--config", required=True)
            p.add_argument("--seed", type=int, default=None)
            p.add_argument("--out-dir", default=None)
        p.set_defaults(fn=fn)
        return p

    add("prepare-splits", cmd_prepare_splits)
    add("annotate", cmd_annotate)
    add("train-filter", cmd_train_filter)
    add("select", cmd_select)
    add("oracle-label", cmd_oracle_label)
    add("train-classifier", cmd_train_classifier)
    add("score", cmd_score)
    add("evaluate", cmd_evaluate)
    add("run", cmd_run)
    study = add("study-upper-bound", cmd_study_upper_bound)
    study.add_argument("--counts", required=True,
                       help="comma-separated label counts")
    rep = sub.add_parser("report")
    rep.add_argument("--inputs", nargs="+", required=True)
    rep.add_argument("--out", default=None)
    rep.set_defaults(fn=cmd_report)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.fn(args)
    except GraphOodError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
