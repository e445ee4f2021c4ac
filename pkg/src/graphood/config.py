"""Experiment configuration: dataclass, validation, and the config file format.

The config file is INI-style: ``[section]`` headers with ``key = value``
lines.  Lists are comma-separated, optional keys are simply omitted.  The
full grammar is documented in the README; :func:`emit_config` writes the
canonical form and ``parse_config(emit_config(c)) == c`` holds exactly.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import ConfigError
from .gcn import TrainConfig

MODES = (
    "llm_good", "llm_good_f", "llm_good_combined",
    "baseline_msp", "baseline_entropy", "baseline_energy",
    "baseline_uncertainty", "baseline_featprop",
)
SELECTIONS = ("random", "uncertainty", "kmedoids", "kmedoids_featprop")
DETECTORS = ("msp", "entropy", "energy", "energy_prop")
ANNOTATORS = ("oracle", "mock", "remote")
PROMPT_KINDS = ("short", "long")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: str = "llm_good"
    dataset_path: str | None = None
    out_dir: str = "runs/latest"
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    human_budget: int | None = None       # absolute; exclusive with per-K form
    human_budget_per_k: int | None = 10   # budget = this * K
    llm_budget: int = 200
    selection: str = "random"
    detector: str = "energy"
    unknown_weights: tuple[float, ...] = (0.05, 0.1, 0.2, 0.3, 0.5)
    kmedoids_fixed_clusters: int | None = None
    # split sizes
    val_per_class: int = 10
    test_id: int = 500
    test_ood: int = 500
    # annotator
    annotator: str = "oracle"
    prompt_kind: str = "long"
    object_word: str = "paper"
    model_name: str = "gpt-4o-mini"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    cache_path: str | None = None
    mock_epsilon: float = 0.0
    mock_seed: int | None = None          # None: derived from the run seed
    max_in_flight: int = 8
    max_retries: int = 3
    # training
    filter_train: TrainConfig = field(default_factory=TrainConfig)
    classifier_train: TrainConfig = field(default_factory=TrainConfig)

    def resolve_human_budget(self, k):
        if self.human_budget is not None:
            return self.human_budget
        return self.human_budget_per_k * k


def validate_config(config):
    """Check field domains and cross-field consistency; raises ConfigError."""
    def check(cond, path, reason):
        if not cond:
            raise ConfigError(path, reason)

    check(config.mode in MODES, "experiment.mode",
          f"{config.mode!r} not one of {list(MODES)}")
    check(config.selection in SELECTIONS, "experiment.selection",
          f"{config.selection!r} not one of {list(SELECTIONS)}")
    check(config.detector in DETECTORS, "experiment.detector",
          f"{config.detector!r} not one of {list(DETECTORS)}")
    check(config.annotator in ANNOTATORS, "annotator.kind",
          f"{config.annotator!r} not one of {list(ANNOTATORS)}")
    check(config.prompt_kind in PROMPT_KINDS, "annotator.prompt",
          f"{config.prompt_kind!r} not one of {list(PROMPT_KINDS)}")
    check(len(config.seeds) > 0, "experiment.seeds", "need at least one seed")

    both = config.human_budget is not None and config.human_budget_per_k is not None
    neither = config.human_budget is None and config.human_budget_per_k is None
    check(not both, "experiment.human_budget",
          "set either human_budget or human_budget_per_k, not both")
    check(not neither, "experiment.human_budget",
          "one of human_budget / human_budget_per_k is required")
    if config.human_budget is not None:
        check(config.human_budget >= 0, "experiment.human_budget", "must be >= 0")
    if config.human_budget_per_k is not None:
        check(config.human_budget_per_k >= 0, "experiment.human_budget_per_k",
              "must be >= 0")
    check(config.llm_budget >= 0, "experiment.llm_budget", "must be >= 0")
    if config.mode == "llm_good_combined":
        check(config.llm_budget > 0, "experiment.llm_budget",
              "combined mode needs llm_budget > 0")
    if config.mode == "llm_good_f":
        check(config.selection != "uncertainty", "experiment.selection",
              "llm_good_f has no filter model, uncertainty selection unavailable")
    check(all(w > 0 for w in config.unknown_weights), "experiment.unknown_weights",
          "weights must be > 0")
    check(len(config.unknown_weights) > 0, "experiment.unknown_weights",
          "need at least one weight")
    if config.kmedoids_fixed_clusters is not None:
        check(config.kmedoids_fixed_clusters > 0,
              "experiment.kmedoids_fixed_clusters", "must be > 0")
    check(config.val_per_class > 0, "splits.val_per_class", "must be > 0")
    check(config.test_id > 0, "splits.test_id", "must be > 0")
    check(config.test_ood > 0, "splits.test_ood", "must be > 0")
    check(0.0 <= config.mock_epsilon <= 1.0, "annotator.mock_epsilon",
          "must be in [0, 1]")
    check(config.max_in_flight >= 1, "annotator.max_in_flight", "must be >= 1")
    check(config.max_retries >= 0, "annotator.max_retries", "must be >= 0")
    for name, tc in (("filter_train", config.filter_train),
                     ("classifier_train", config.classifier_train)):
        check(tc.learning_rate > 0, f"{name}.learning_rate", "must be > 0")
        check(0.0 <= tc.dropout_p < 1.0, f"{name}.dropout", "must be in [0, 1)")
        check(tc.epochs >= 0, f"{name}.epochs", "must be >= 0")
        check(tc.hidden_dim >= 1, f"{name}.hidden_dim", "must be >= 1")
    return config


def _parse_int_list(raw):
    return tuple(int(x.strip()) for x in raw.split(",") if x.strip())


def _parse_float_list(raw):
    return tuple(float(x.strip()) for x in raw.split(",") if x.strip())


def _train_config_from_section(section):
    return TrainConfig(
        learning_rate=section.getfloat("learning_rate", 0.01),
        weight_decay=section.getfloat("weight_decay", 5e-4),
        dropout_p=section.getfloat("dropout", 0.5),
        epochs=section.getint("epochs", 200),
        hidden_dim=section.getint("hidden_dim", 32),
        model_selection=section.get("model_selection", "best_val"),
    )


def parse_config(path_or_text, from_text=False):
    """Read a config document into an :class:`ExperimentConfig` (validated)."""
    parser = configparser.ConfigParser()
    try:
        if from_text:
            parser.read_string(path_or_text)
        else:
            text = Path(path_or_text).read_text()
            parser.read_string(text)
    except (OSError, configparser.Error) as exc:
        raise ConfigError(str(path_or_text), f"unreadable config: {exc}") from exc

    exp = parser["experiment"] if parser.has_section("experiment") else {}
    spl = parser["splits"] if parser.has_section("splits") else {}
    ann = parser["annotator"] if parser.has_section("annotator") else {}

    def get(section, key, default=None):
        return section.get(key, default) if hasattr(section, "get") else default

    defaults = ExperimentConfig()
    try:
        human_budget = get(exp, "human_budget")
        human_budget_per_k = get(exp, "human_budget_per_k")
        if human_budget is None and human_budget_per_k is None:
            human_budget_per_k = defaults.human_budget_per_k
        config = ExperimentConfig(
            mode=get(exp, "mode", defaults.mode),
            dataset_path=get(exp, "dataset"),
            out_dir=get(exp, "out_dir", defaults.out_dir),
            seeds=_parse_int_list(get(exp, "seeds", "0, 1, 2, 3, 4")),
            human_budget=None if human_budget is None else int(human_budget),
            human_budget_per_k=(None if human_budget_per_k is None
                                else int(human_budget_per_k)),
            llm_budget=int(get(exp, "llm_budget", defaults.llm_budget)),
            selection=get(exp, "selection", defaults.selection),
            detector=get(exp, "detector", defaults.detector),
            unknown_weights=_parse_float_list(
                get(exp, "unknown_weights", "0.05, 0.1, 0.2, 0.3, 0.5")),
            kmedoids_fixed_clusters=(
                None if get(exp, "kmedoids_fixed_clusters") is None
                else int(get(exp, "kmedoids_fixed_clusters"))),
            val_per_class=int(get(spl, "val_per_class", defaults.val_per_class)),
            test_id=int(get(spl, "test_id", defaults.test_id)),
            test_ood=int(get(spl, "test_ood", defaults.test_ood)),
            annotator=get(ann, "kind", defaults.annotator),
            prompt_kind=get(ann, "prompt", defaults.prompt_kind),
            object_word=get(ann, "object_word", defaults.object_word),
            model_name=get(ann, "model", defaults.model_name),
            endpoint=get(ann, "endpoint", defaults.endpoint),
            cache_path=get(ann, "cache"),
            mock_epsilon=float(get(ann, "mock_epsilon", defaults.mock_epsilon)),
            mock_seed=(None if get(ann, "mock_seed") is None
                       else int(get(ann, "mock_seed"))),
            max_in_flight=int(get(ann, "max_in_flight", defaults.max_in_flight)),
            max_retries=int(get(ann, "max_retries", defaults.max_retries)),
            filter_train=(_train_config_from_section(parser["filter_train"])
                          if parser.has_section("filter_train") else TrainConfig()),
            classifier_train=(_train_config_from_section(parser["classifier_train"])
                              if parser.has_section("classifier_train")
                              else TrainConfig()),
        )
    except ValueError as exc:
        raise ConfigError(str(path_or_text), f"bad value: {exc}") from exc
    return validate_config(config)


def _format_value(value):
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


def emit_config(config, path=None):
    """Write the canonical config document; returns the text."""
    parser = configparser.ConfigParser()
    exp = {
        "mode": config.mode,
        "out_dir": config.out_dir,
        "seeds": _format_value(config.seeds),
        "llm_budget": config.llm_budget,
        "selection": config.selection,
        "detector": config.detector,
        "unknown_weights": _format_value(config.unknown_weights),
    }
    if config.dataset_path is not None:
        exp["dataset"] = config.dataset_path
    if config.human_budget is not None:
        exp["human_budget"] = config.human_budget
    if config.human_budget_per_k is not None:
        exp["human_budget_per_k"] = config.human_budget_per_k
    if config.kmedoids_fixed_clusters is not None:
        exp["kmedoids_fixed_clusters"] = config.kmedoids_fixed_clusters
    parser["experiment"] = {k: str(v) for k, v in exp.items()}

    parser["splits"] = {
        "val_per_class": str(config.val_per_class),
        "test_id": str(config.test_id),
        "test_ood": str(config.test_ood),
    }

    ann = {
        "kind": config.annotator,
        "prompt": config.prompt_kind,
        "object_word": config.object_word,
        "model": config.model_name,
        "endpoint": config.endpoint,
        "mock_epsilon": config.mock_epsilon,
        "max_in_flight": config.max_in_flight,
        "max_retries": config.max_retries,
    }
    if config.cache_path is not None:
        ann["cache"] = config.cache_path
    if config.mock_seed is not None:
        ann["mock_seed"] = config.mock_seed
    parser["annotator"] = {k: str(v) for k, v in ann.items()}

    for name, tc in (("filter_train", config.filter_train),
                     ("classifier_train", config.classifier_train)):
        parser[name] = {
            "learning_rate": str(tc.learning_rate),
            "weight_decay": str(tc.weight_decay),
            "dropout": str(tc.dropout_p),
            "epochs": str(tc.epochs),
            "hidden_dim": str(tc.hidden_dim),
            "model_selection": tc.model_selection,
        }

    buf = io.StringIO()
    parser.write(buf)
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def with_overrides(config, **kwargs):
    """Copy-and-replace helper that re-validates."""
    return validate_config(replace(config, **kwargs))
