"""Query-reference integration strategies and dense reranking of BM25 candidates.

Three ways to fold pseudo-references into the query embedding:

- concat: embed the query concatenated with all references (order-sensitive,
  bounded by the provider's input window; the query goes first so it always
  survives truncation).
- mean_pool: average the query embedding with each reference embedding.
- contex_pool: average the embeddings of each (query + reference) pair.
"""

from dataclasses import dataclass, field

import numpy as np

from queryboost.corpus import Document
from queryboost.embedding import EmbeddingProvider, cosine_sim
from queryboost.generation import ReferenceSet

STRATEGIES = ("concat", "mean_pool", "contex_pool")


def embed_concat(provider: EmbeddingProvider, query: str,
                 refs: ReferenceSet) -> np.ndarray:
    """Embed the space-joined concatenation of query and all references."""
    return provider.embed(" ".join([query, *refs.references]))


def embed_mean_pool(provider: EmbeddingProvider, query: str,
                    refs: ReferenceSet) -> np.ndarray:
    """(f(q) + sum_i f(r_i)) / (n + 1), componentwise."""
    vectors = provider.embed_batch([query, *refs.references])
    return np.mean(vectors, axis=0)


def embed_contex_pool(provider: EmbeddingProvider, query: str,
                      refs: ReferenceSet) -> np.ndarray:
    """Mean over references of f(query + reference); permutation-invariant."""
    vectors = provider.embed_batch([f"{query} {r}" for r in refs.references])
    return np.mean(vectors, axis=0)


def embed_query(provider: EmbeddingProvider, query: str,
                refs: ReferenceSet | None, strategy: str) -> np.ndarray:
    """Dispatch on strategy; with no references, falls back to the raw query."""
    if refs is None or not refs.references:
        return provider.embed(query)
    if strategy == "concat":
        return embed_concat(provider, query, refs)
    if strategy == "mean_pool":
        return embed_mean_pool(provider, query, refs)
    if strategy == "contex_pool":
        return embed_contex_pool(provider, query, refs)
    raise ValueError(f"unknown integration strategy: {strategy!r}")


@dataclass
class DocumentEmbeddingCache:
    """Per-run cache of document embeddings, keyed by doc_id."""

    provider: EmbeddingProvider
    _cache: dict[str, np.ndarray] = field(default_factory=dict)

    def embed_doc(self, doc: Document) -> np.ndarray:
        vec = self._cache.get(doc.doc_id)
        if vec is None:
            try:
                vec = self.provider.embed(doc.indexed_text("title_plus_text"))
            except Exception as exc:
                raise RuntimeError(f"embedding failed for doc {doc.doc_id!r}: {exc}") from exc
            self._cache[doc.doc_id] = vec
        return vec


def rerank(provider: EmbeddingProvider, query_embedding: np.ndarray,
           candidates: list[Document],
           doc_cache: DocumentEmbeddingCache | None = None) -> list[tuple[str, float]]:
    """Sort candidates by cosine similarity to the query embedding.

    Ties broken by ascending doc_id; the output is a permutation of the input.
    """
    if not candidates:
        raise ValueError("candidates must be non-empty")
    cache = doc_cache or DocumentEmbeddingCache(provider)
    scored = [(doc.doc_id, cosine_sim(query_embedding, cache.embed_doc(doc)))
              for doc in candidates]
    scored.sort(key=lambda ds: (-ds[1], ds[0]))
    return scored
