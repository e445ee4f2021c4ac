"""One-shot bundle builder for text-attributed citation/wiki graphs."""

from .bundle_writer import BundleManifest, canonical_edges, write_bundle
from .embed import DEFAULT_MODEL, EmbeddingUnavailable, resolve_encoder
from .ingest import MissingTexts, RawDataset, SchemaMismatch, ingest
from .prepare import DownloadFailure, download_raw, prepare
from .registry import UnknownDataset, dataset_source

__version__ = "0.1.0"
