"""Zero-shot open-world annotation of graph nodes.

Three annotator backends share one interface: a remote chat-completion
endpoint, a seeded mock with a configurable confusion matrix, and a
ground-truth oracle (a perfect annotator).  Responses map into the K+1
alphabet: the K ID classes in their split order, plus ``K`` for unknown.

Remote responses are cached to ``annotations.jsonl`` keyed by a hash of
(model, template kind, rendered prompt), so replaying a committed cache
reproduces the same annotation set without network access.  The API token
comes from the ``GOOD_API_KEY`` environment variable; without it the client
runs cache-only and a miss is a hard error.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import requests

from .errors import CacheMiss, EmptySet, MissingText, ShapeMismatch, UnknownModelPrice

API_KEY_ENV = "GOOD_API_KEY"

_SHORT_TEMPLATE = """\
As a research scientist, your task is to analyze and classify {object}s based \
on their main topics, meanings, background, and methods. Please first read the \
content of the {object} carefully. Then, identify the {object}'s key focus. \
Finally, match the content to one of the given categories.

There are the following categories:
[{categories}]

Given the current possible categories, determine if it belongs to one of them. \
If so, specify that category; otherwise, say "none".

{text}
"""

_LONG_TEMPLATE = """\
You are an expert text classification assistant specializing in identifying \
whether a given {object} belongs to the predefined in-distribution categories \
or is out-of-distribution (OOD).

A {object} is considered as out-of-distribution (OOD) if it does NOT belong to \
any of the in-distribution category(ies) listed below.

Your task is, given the content of the {object} below, to determine whether it \
is an out-of-distribution (OOD) {object}. If it is an OOD {object}, answer \
"none". If it is not an OOD {object}, determine which in-distribution category \
below it belongs to. Provide a brief explanation of your reasoning and assign \
a confidence score between 0 and 1 for your justification.

In-distribution Categories:
{category_items}

If you are uncertain whether the {object} significantly aligns with any of the \
in-distribution category(ies), assume that it does NOT align with them, which \
means it is an out-of-distribution {object}.

The description of the {object} that you need to identify is as follows:
{text}
"""


@dataclass(frozen=True)
class PromptTemplate:
    kind: str = "long"  # "short" or "long"
    object_word: str = "paper"

    def __post_init__(self):
        if self.kind not in ("short", "long"):
            raise ShapeMismatch(f"unknown prompt kind {self.kind!r}")


def render_prompt(template, classes, node_text):
    """Fill a template with the ID category names and the node text."""
    names = classes.id_names()
    if template.kind == "short":
        return _SHORT_TEMPLATE.format(
            object=template.object_word,
            categories=", ".join(names),
            text=node_text,
        )
    items = "\n".join(f"- {n}" for n in names)
    return _LONG_TEMPLATE.format(
        object=template.object_word,
        category_items=items,
        text=node_text,
    )


@dataclass(frozen=True)
class LabelOutcome:
    label: int                # 0..K-1 ID, K unknown
    parsed_cleanly: bool
    raw_response: str
    confidence: float | None = None


_CONFIDENCE_RE = re.compile(
    r"confidence(?:\s*score)?\s*(?:of|is|[:=])?\s*([01](?:\.\d+)?)",
    re.IGNORECASE,
)


def _extract_confidence(raw):
    matches = _CONFIDENCE_RE.findall(raw)
    if not matches:
        return None
    value = float(matches[-1])
    return value if 0.0 <= value <= 1.0 else None


def parse_response(raw, classes):
    """Map a raw reply into the K+1 alphabet.

    Ladder: trimmed equality with "none", exact class-name equality, unique
    substring containment of exactly one ID class name, otherwise unknown
    with ``parsed_cleanly=False``.  Total: never raises.
    """
    unknown = classes.unknown_label
    confidence = _extract_confidence(raw)
    cleaned = raw.strip().strip("\"'`").rstrip(".").strip()
    low = cleaned.casefold()

    if low == "none":
        return LabelOutcome(unknown, True, raw, confidence)

    names = classes.id_names()
    for pos, name in enumerate(names):
        if low == name.casefold():
            return LabelOutcome(pos, True, raw, confidence)

    haystack = raw.casefold()
    contained = [pos for pos, name in enumerate(names) if name.casefold() in haystack]
    if len(contained) == 1:
        return LabelOutcome(contained[0], True, raw, confidence)

    return LabelOutcome(unknown, False, raw, confidence)


@dataclass(frozen=True)
class RemoteChat:
    """Generic chat-completion endpoint: one user message, temperature 0."""

    endpoint: str
    model_name: str
    max_in_flight: int = 8
    max_retries: int = 3
    timeout: float = 60.0
    backoff_base: float = 1.0


@dataclass(frozen=True, eq=False)
class MockConfusion:
    """Emission matrix, one row per true full-class index, K+1 columns."""

    matrix: np.ndarray
    seed: int = 0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ShapeMismatch("confusion matrix must be 2-D")
        if np.any(m < 0) or not np.allclose(m.sum(axis=1), 1.0, atol=1e-9):
            raise ShapeMismatch("confusion matrix rows must be stochastic")
        object.__setattr__(self, "matrix", m)


@dataclass(frozen=True)
class OracleGroundTruth:
    """Perfect annotator: true ID class for ID nodes, unknown for OOD."""


def uniform_confusion_matrix(classes, epsilon):
    """Oracle behavior with probability 1-eps, uniform over K+1 otherwise."""
    if not 0.0 <= epsilon <= 1.0:
        raise ShapeMismatch("epsilon must be in [0, 1]")
    k = classes.num_id
    rows = np.full((classes.num_classes, k + 1), epsilon / (k + 1))
    for c in range(classes.num_classes):
        target = classes.id_position(c) if classes.is_id(c) else k
        rows[c, target] += 1.0 - epsilon
    return rows


@dataclass
class AnnotationSet:
    """Per-node label outcomes plus token accounting."""

    entries: dict
    source: str                      # "llm" | "mock" | "oracle"
    prompt_kind: str | None = None
    model_name: str | None = None
    prompt_tokens: int = 0
    completion_tokens: int = 0
    failures: tuple[int, ...] = ()

    def labels(self):
        return {node: out.label for node, out in self.entries.items()}

    def id_labeled(self, classes):
        """Nodes the annotator placed in an ID class (label < K)."""
        k = classes.num_id
        return {n: o.label for n, o in self.entries.items() if o.label < k}

    def to_dict(self):
        return {
            "source": self.source,
            "prompt_kind": self.prompt_kind,
            "model_name": self.model_name,
            "prompt_tokens": self.prompt_tokens,
            "completion_tokens": self.completion_tokens,
            "failures": list(self.failures),
            "entries": {
                str(n): {
                    "label": o.label,
                    "parsed_cleanly": o.parsed_cleanly,
                    "raw_response": o.raw_response,
                    "confidence": o.confidence,
                }
                for n, o in sorted(self.entries.items())
            },
        }

    @classmethod
    def from_dict(cls, doc):
        entries = {
            int(n): LabelOutcome(
                int(o["label"]), bool(o["parsed_cleanly"]),
                o["raw_response"], o.get("confidence"),
            )
            for n, o in doc["entries"].items()
        }
        return cls(
            entries=entries,
            source=doc["source"],
            prompt_kind=doc.get("prompt_kind"),
            model_name=doc.get("model_name"),
            prompt_tokens=int(doc.get("prompt_tokens", 0)),
            completion_tokens=int(doc.get("completion_tokens", 0)),
            failures=tuple(doc.get("failures", ())),
        )


def prompt_hash(model_name, kind, prompt):
    h = hashlib.sha256()
    for part in (model_name, kind, prompt):
        h.update(part.encode())
        h.update(b"\x00")
    return h.hexdigest()


class AnnotationCache:
    """Append-only JSONL store of raw responses, keyed by prompt hash.

    Appends are serialized under a lock and written as single lines, so
    concurrent workers never interleave partial records.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._records = {}
        if self.path.exists():
            for line in self.path.read_text().splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self._records[rec["prompt_hash"]] = rec

    def get(self, key):
        return self._records.get(key)

    def put(self, record):
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            self._records[record["prompt_hash"]] = record
            with open(self.path, "a") as fh:
                fh.write(line + "\n")


def _truth_outcome(node, graph, classes):
    c = int(graph.labels[node])
    if classes.is_id(c):
        pos = classes.id_position(c)
        return pos, classes.class_names[c]
    return classes.unknown_label, "none"


def _chat_request(spec, prompt, api_key):
    headers = {"Content-Type": "application/json"}
    if api_key:
        headers["Authorization"] = f"Bearer {api_key}"
    payload = {
        "model": spec.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": 0,
    }
    resp = requests.post(spec.endpoint, json=payload, headers=headers,
                         timeout=spec.timeout)
    resp.raise_for_status()
    data = resp.json()
    raw = data["choices"][0]["message"]["content"]
    usage = data.get("usage", {})
    return raw, int(usage.get("prompt_tokens", 0)), int(usage.get("completion_tokens", 0))


def _request_with_retries(spec, prompt, api_key):
    last = None
    for attempt in range(spec.max_retries + 1):
        try:
            return _chat_request(spec, prompt, api_key)
        except Exception as exc:  # noqa: BLE001 - every failure is retryable here
            last = exc
            if attempt < spec.max_retries:
                delay = spec.backoff_base * (2 ** attempt)
                time.sleep(delay * (1.0 + 0.25 * random.random()))
    raise last


def annotate(nodes, graph, classes, spec, template=None, cache=None, api_key=None):
    """Annotate the given nodes with the configured backend.

    Returns an :class:`AnnotationSet`; for the remote backend, nodes whose
    requests exhausted their retries are listed in ``failures`` and omitted
    from ``entries``.
    """
    nodes = [int(n) for n in nodes]

    if isinstance(spec, OracleGroundTruth):
        entries = {}
        for node in nodes:
            label, raw = _truth_outcome(node, graph, classes)
            entries[node] = LabelOutcome(label, True, raw)
        return AnnotationSet(entries, "oracle")

    if isinstance(spec, MockConfusion):
        if spec.matrix.shape != (classes.num_classes, classes.num_id + 1):
            raise ShapeMismatch(
                f"confusion matrix must be {classes.num_classes} x {classes.num_id + 1}"
            )
        rng = np.random.default_rng(spec.seed)
        k = classes.num_id
        entries = {}
        for node in nodes:
            row = spec.matrix[int(graph.labels[node])]
            label = int(rng.choice(k + 1, p=row))
            if label < k:
                raw = classes.class_names[classes.id_class_indices[label]]
            else:
                raw = "none"
            entries[node] = LabelOutcome(label, True, raw)
        return AnnotationSet(entries, "mock")

    if isinstance(spec, RemoteChat):
        if template is None:
            template = PromptTemplate()
        if graph.texts is None:
            raise MissingText(nodes)
        missing = [n for n in nodes if not graph.texts[n]]
        if missing:
            raise MissingText(missing)
        if api_key is None:
            api_key = os.environ.get(API_KEY_ENV)

        prompts = {n: render_prompt(template, classes, graph.texts[n]) for n in nodes}
        hashes = {n: prompt_hash(spec.model_name, template.kind, prompts[n]) for n in nodes}

        raw_by_node = {}
        pt_total = 0
        ct_total = 0
        misses = []
        for n in nodes:
            rec = cache.get(hashes[n]) if cache is not None else None
            if rec is not None:
                raw_by_node[n] = rec["raw_response"]
                pt_total += int(rec.get("prompt_tokens", 0))
                ct_total += int(rec.get("completion_tokens", 0))
            else:
                misses.append(n)

        if misses and api_key is None:
            raise CacheMiss(
                f"{API_KEY_ENV} not set and {len(misses)} prompts missing from cache"
            )

        failures = []
        if misses:
            def fetch(node):
                return node, _request_with_retries(spec, prompts[node], api_key)

            with ThreadPoolExecutor(max_workers=max(1, spec.max_in_flight)) as pool:
                futures = [pool.submit(fetch, n) for n in misses]
                for fut in futures:
                    try:
                        node, (raw, pt, ct) = fut.result()
                    except Exception:  # noqa: BLE001
                        continue
                    # persist before parsing so a parser bug never loses data
                    if cache is not None:
                        cache.put({
                            "node_id": node,
                            "prompt_hash": hashes[node],
                            "model_name": spec.model_name,
                            "raw_response": raw,
                            "prompt_tokens": pt,
                            "completion_tokens": ct,
                            "timestamp": time.time(),
                        })
                    raw_by_node[node] = raw
                    pt_total += pt
                    ct_total += ct
            failures = [n for n in misses if n not in raw_by_node]

        entries = {n: parse_response(raw_by_node[n], classes)
                   for n in nodes if n in raw_by_node}
        return AnnotationSet(
            entries, "llm",
            prompt_kind=template.kind,
            model_name=spec.model_name,
            prompt_tokens=pt_total,
            completion_tokens=ct_total,
            failures=tuple(failures),
        )

    raise ShapeMismatch(f"unknown annotator spec {type(spec).__name__}")


def pick_annotation_nodes(candidate_nodes, m, seed):
    """Uniform random draw of annotation targets from the candidate pool."""
    pool = np.sort(np.asarray(candidate_nodes, dtype=np.int64))
    m = min(int(m), len(pool))
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(pool, size=m, replace=False))


def predicted_ood_proportion(annotation_set, classes):
    """Fraction of entries the annotator sent to the unknown class."""
    if not annotation_set.entries:
        raise EmptySet("annotation set is empty")
    unknown = classes.unknown_label
    values = [1.0 if o.label == unknown else 0.0 for o in annotation_set.entries.values()]
    return float(np.mean(values))


@dataclass(frozen=True)
class CostReport:
    model_name: str
    prompt_tokens: int
    completion_tokens: int
    prompt_cost: float
    completion_cost: float

    @property
    def total(self):
        return self.prompt_cost + self.completion_cost


def load_price_table(path):
    """``prices.json``: model name -> [input price, output price] per token."""
    doc = json.loads(Path(path).read_text())
    return {name: (float(p[0]), float(p[1])) for name, p in doc.items()}


def cost_report(annotation_set, price_table):
    model = annotation_set.model_name
    if model not in price_table:
        raise UnknownModelPrice(model)
    p_in, p_out = price_table[model]
    return CostReport(
        model_name=model,
        prompt_tokens=annotation_set.prompt_tokens,
        completion_tokens=annotation_set.completion_tokens,
        prompt_cost=annotation_set.prompt_tokens * p_in,
        completion_cost=annotation_set.completion_tokens * p_out,
    )
