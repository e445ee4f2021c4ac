import json

import numpy as np
import pytest

from graphood.bundle import save_bundle
from graphood.cli import main
from graphood.config import ExperimentConfig, emit_config
from graphood.gcn import TrainConfig
from graphood.synthetic import make_sbm_graph


@pytest.fixture(scope="module")
def bundle_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("bundle")
    graph, classes = make_sbm_graph(0, with_texts=True)
    save_bundle(path, graph, classes, "sbm-fixture")
    return path


@pytest.fixture()
def config_path(tmp_path, bundle_dir):
    fast = TrainConfig(epochs=50, model_selection="last_epoch")
    cfg = ExperimentConfig(
        dataset_path=str(bundle_dir), out_dir=str(tmp_path / "run"),
        seeds=(0,), llm_budget=60, test_id=100, test_ood=100,
        filter_train=fast, classifier_train=fast,
    )
    path = tmp_path / "exp.cfg"
    emit_config(cfg, path)
    return path


def test_stage_chain(config_path, tmp_path, capsys):
    for command in ("prepare-splits", "annotate", "train-filter", "select",
                    "oracle-label", "train-classifier", "score", "evaluate"):
        assert main([command, "--config", str(config_path)]) == 0

    run = tmp_path / "run"
    for name in ("splits.json", "annotation_set.json", "filter.ckpt",
                 "filter.json", "selection.json", "classifier.ckpt",
                 "scores.tsv", "report.json"):
        assert (run / name).exists(), name

    selection = json.loads((run / "selection.json").read_text())
    assert selection["budget"] == 40
    assert len(selection["selected"]) == 40
    assert selection["id_proportion"] is not None

    report = json.loads((run / "report.json").read_text())
    assert 0.0 <= report["per_seed"][0]["id_acc"] <= 1.0

    scores_lines = (run / "scores.tsv").read_text().splitlines()
    assert len(scores_lines) == 600


def test_run_command_deterministic(config_path, tmp_path):
    out = str(tmp_path / "r1")
    assert main(["run", "--config", str(config_path), "--out-dir", out]) == 0
    first = (tmp_path / "r1" / "report.json").read_bytes()
    assert main(["run", "--config", str(config_path), "--out-dir", out]) == 0
    assert (tmp_path / "r1" / "report.json").read_bytes() == first
    assert (tmp_path / "r1" / "experiment.json").exists()
    assert (tmp_path / "r1" / "report.md").exists()


def test_study_upper_bound_command(config_path, tmp_path):
    out = tmp_path / "study"
    assert main(["study-upper-bound", "--config", str(config_path),
                 "--out-dir", str(out), "--counts", "0,20"]) == 0
    doc = json.loads((out / "study.json").read_text())
    assert len(doc["noisy"]) == 2
    assert (out / "study.tsv").read_text().startswith("curve\tcount")


def test_report_consolidation(config_path, tmp_path, capsys):
    r1 = tmp_path / "r1"
    main(["run", "--config", str(config_path), "--out-dir", str(r1)])
    out = tmp_path / "table.md"
    assert main(["report", "--inputs", str(r1 / "report.json"),
                 "--out", str(out)]) == 0
    text = out.read_text()
    assert "llm_good" in text and "ID ACC" in text


def test_bad_config_returns_error(tmp_path, capsys):
    path = tmp_path / "bad.cfg"
    path.write_text("[experiment]\nmode = nonsense\n")
    assert main(["run", "--config", str(path)]) == 1
    assert "error:" in capsys.readouterr().err
