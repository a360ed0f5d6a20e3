"""Embedding providers and cosine similarity.

A provider maps text to a fixed-dimension vector. Three implementations:
a deterministic hashing embedder (tests and synthetic experiments), a remote
JSON-over-HTTP service, and a slot for local-model adapters.
"""

import hashlib
from typing import Protocol

import numpy as np
import requests

from queryboost.tokenizer import tokenize


def cosine_sim(u: np.ndarray, v: np.ndarray) -> float:
    """u.v / (|u||v|), in [-1, 1]. Errors on zero vectors or dim mismatch."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for zero vector")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))


def truncate_text(text: str, max_tokens: int | None) -> str:
    """Keep the first max_tokens whitespace-separated words (tail-first cut)."""
    if max_tokens is None:
        return text
    words = text.split()
    if len(words) <= max_tokens:
        return text
    return " ".join(words[:max_tokens])


class EmbeddingProvider(Protocol):
    dimension: int
    max_input_tokens: int | None

    def embed(self, text: str) -> np.ndarray: ...

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]: ...


class HashingEmbedder:
    """Deterministic bag-of-tokens embedder: hash tokens into d buckets, L2-normalize.

    Same (seed, text) always yields the same vector; token-disjoint texts are
    orthogonal unless buckets collide. Used in tests and synthetic runs.
    """

    def __init__(self, dimension: int = 64, seed: int = 0,
                 max_input_tokens: int | None = None):
        if dimension < 8:
            raise ValueError(f"dimension must be >= 8, got {dimension}")
        self.dimension = dimension
        self.seed = seed
        self.max_input_tokens = max_input_tokens

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"),
                                 key=self.seed.to_bytes(8, "little"),
                                 digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dimension

    def embed(self, text: str) -> np.ndarray:
        tokens = tokenize(truncate_text(text, self.max_input_tokens))
        if not tokens:
            raise ValueError("cannot embed text with no tokens")
        vec = np.zeros(self.dimension, dtype=np.float64)
        for token in tokens:
            vec[self._bucket(token)] += 1.0
        return vec / np.linalg.norm(vec)

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return [self.embed(t) for t in texts]


class RemoteEmbedder:
    """JSON-over-HTTP embedding service: {"input": [texts]} -> {"embeddings": [[...]]}.

    Outputs are order-preserving; inputs are truncated client-side and sent in
    batches of ``batch_size``.
    """

    def __init__(self, endpoint: str, dimension: int,
                 max_input_tokens: int | None = 512, batch_size: int = 32,
                 timeout: float = 30.0, session: requests.Session | None = None):
        self.endpoint = endpoint
        self.dimension = dimension
        self.max_input_tokens = max_input_tokens
        self.batch_size = batch_size
        self.timeout = timeout
        self._session = session or requests.Session()

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        vectors: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            batch = [truncate_text(t, self.max_input_tokens)
                     for t in texts[start:start + self.batch_size]]
            resp = self._session.post(self.endpoint, json={"input": batch},
                                      timeout=self.timeout)
            resp.raise_for_status()
            embeddings = resp.json()["embeddings"]
            if len(embeddings) != len(batch):
                raise ValueError(
                    f"embedding service returned {len(embeddings)} vectors "
                    f"for {len(batch)} inputs")
            for emb in embeddings:
                vec = np.asarray(emb, dtype=np.float64)
                if vec.shape != (self.dimension,):
                    raise ValueError(
                        f"expected dimension {self.dimension}, got {vec.shape}")
                vectors.append(vec)
        return vectors
