"""Sentence-embedding backends.

The model identifier picks the backend: ``stub:<dim>`` is a deterministic
hashing encoder for offline runs and tests; anything else loads a
sentence-transformers checkpoint of that name. Outputs are raw (not
L2-normalized) float32 matrices, and the identifier is recorded in the
bundle manifest rather than hard-wired anywhere.
"""

import hashlib

import numpy as np

DEFAULT_MODEL = "sentence-transformers/all-MiniLM-L6-v2"


class EmbeddingUnavailable(Exception):
    pass


class StubHashEncoder:
    """Deterministic text encoder: token hashes scattered into a fixed dim."""

    def __init__(self, dim):
        self.dim = int(dim)

    def encode(self, texts):
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for row, text in enumerate(texts):
            for token in text.split():
                digest = hashlib.sha256(token.lower().encode()).digest()
                slot = int.from_bytes(digest[:4], "little") % self.dim
                sign = 1.0 if digest[4] % 2 == 0 else -1.0
                out[row, slot] += sign
        return out


class SentenceTransformerEncoder:
    def __init__(self, model_id):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise EmbeddingUnavailable(
                "sentence-transformers is not installed; install the "
                "'embeddings' extra or use a stub:<dim> model id"
            ) from exc
        self.model = SentenceTransformer(model_id)

    def encode(self, texts):
        return np.asarray(
            self.model.encode(list(texts), convert_to_numpy=True,
                              normalize_embeddings=False),
            dtype=np.float32)


def resolve_encoder(model_id):
    if model_id.startswith("stub:"):
        return StubHashEncoder(int(model_id.split(":", 1)[1]))
    return SentenceTransformerEncoder(model_id)
