"""Orchestration: fetch raw data, embed texts, emit the bundle."""

import tarfile
import tempfile
from pathlib import Path

import requests

from .bundle_writer import write_bundle
from .embed import resolve_encoder
from .ingest import ingest
from .registry import dataset_source


class DownloadFailure(Exception):
    pass


def download_raw(source, raw_dir):
    """Fetch the registered archives into ``raw_dir`` (network required)."""
    raw_dir = Path(raw_dir)
    raw_dir.mkdir(parents=True, exist_ok=True)
    for url in source.urls:
        try:
            resp = requests.get(url, timeout=120)
            resp.raise_for_status()
        except Exception as exc:  # noqa: BLE001
            raise DownloadFailure(f"could not fetch {url}: {exc}") from exc
        name = url.rsplit("/", 1)[-1]
        target = raw_dir / name
        target.write_bytes(resp.content)
        if name.endswith((".tgz", ".tar.gz")):
            with tarfile.open(target) as tar:
                tar.extractall(raw_dir)
            # flatten a single top-level directory if the archive has one
            entries = [p for p in raw_dir.iterdir() if p.is_dir()]
            for entry in entries:
                for child in entry.iterdir():
                    child.rename(raw_dir / child.name)
    return raw_dir


def prepare(dataset_name, out_dir, embedding_model_id, raw_dir=None):
    """Produce a bundle directory; returns its manifest.

    ``raw_dir`` may point at already-downloaded raw files; otherwise the
    registered archives are fetched into a temporary directory first.
    Deterministic for a given encoder and raw data: re-running yields
    identical checksums.
    """
    source = dataset_source(dataset_name)
    if raw_dir is None:
        raw_dir = download_raw(source, Path(tempfile.mkdtemp(prefix="raw-")))
    raw = ingest(raw_dir, source)

    if raw.texts is not None:
        encoder = resolve_encoder(embedding_model_id)
        features = encoder.encode(raw.texts)
        features_source = "embedded"
        model_used = embedding_model_id
    else:
        features = raw.features
        features_source = "upstream"
        model_used = None

    return write_bundle(out_dir, source, raw.labels, raw.edges, features,
                        raw.texts, model_used, features_source)
