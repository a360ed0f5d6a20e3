"""BM25 scoring and construction of the expanded sparse query.

The expanded query repeats the original query a number of times (adaptive in
the total pseudo-reference length, or a fixed repetition count) and appends
every reference's tokens, so query terms keep proportional weight against the
much longer references.
"""

import math
from collections import Counter
from dataclasses import dataclass

from queryboost.corpus import InvertedIndex
from queryboost.tokenizer import tokenize


@dataclass(frozen=True)
class BM25Params:
    k1: float = 0.9
    b: float = 0.4

    def __post_init__(self):
        if self.k1 < 0:
            raise ValueError(f"k1 must be >= 0, got {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b must be in [0, 1], got {self.b}")


@dataclass(frozen=True)
class ReweightConfig:
    """Query repetition strategy: adaptive(beta) or constant(t).

    Exactly one of ``beta`` / ``t`` is set. ``lambda_min`` floors the adaptive
    repetition count so the query is never absent from its own expansion.
    """

    beta: float | None = 4.0
    t: int | None = None
    lambda_min: int = 1

    def __post_init__(self):
        if (self.beta is None) == (self.t is None):
            raise ValueError("exactly one of beta (adaptive) or t (constant) must be set")
        if self.beta is not None and self.beta <= 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if self.t is not None and self.t < 0:
            raise ValueError(f"t must be >= 0, got {self.t}")

    @classmethod
    def adaptive(cls, beta: float = 4.0, lambda_min: int = 1) -> "ReweightConfig":
        return cls(beta=beta, t=None, lambda_min=lambda_min)

    @classmethod
    def constant(cls, t: int) -> "ReweightConfig":
        return cls(beta=None, t=t)


@dataclass(frozen=True)
class SparseQuery:
    """Token multiset of the expanded query, with its provenance."""

    tokens: tuple[str, ...]
    query_repeats: int
    num_references: int

    def counts(self) -> Counter:
        return Counter(self.tokens)


def idf(index: InvertedIndex, term: str) -> float:
    """ln(1 + (N - df + 0.5) / (df + 0.5)); non-negative for every df <= N."""
    n = index.num_docs
    df = index.df.get(term, 0)
    return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def bm25_score(index: InvertedIndex, params: BM25Params,
               query_tokens, doc_id: str) -> float:
    """BM25 score of one document against a query token multiset.

    A token appearing m times in the query contributes m identical summands.
    """
    if doc_id not in index:
        raise KeyError(f"unknown doc_id: {doc_id!r}")
    dl = index.stats.doc_length[doc_id]
    avgdl = index.avgdl
    norm = 1.0 - params.b + (params.b * dl / avgdl if avgdl > 0 else 0.0)

    score = 0.0
    for term, q_count in Counter(query_tokens).items():
        plist = index.postings.get(term)
        if not plist:
            continue
        tf = next((tf for d, tf in plist if d == doc_id), 0)
        if tf == 0:
            continue
        score += q_count * idf(index, term) * tf * (params.k1 + 1.0) / (
            tf + params.k1 * norm)
    return score


def bm25_search(index: InvertedIndex, params: BM25Params,
                query: SparseQuery, top_k: int) -> list[tuple[str, float]]:
    """Top-k documents with positive BM25 score, ties broken by ascending doc_id.

    Accumulates per-document scores over the postings of each distinct query
    term; equivalent to scoring every document exhaustively.
    """
    if top_k < 1:
        raise ValueError(f"top_k must be >= 1, got {top_k}")
    avgdl = index.avgdl
    b, k1 = params.b, params.k1

    scores: dict[str, float] = {}
    for term, q_count in query.counts().items():
        plist = index.postings.get(term)
        if not plist:
            continue
        term_idf = idf(index, term)
        for doc_id, tf in plist:
            dl = index.stats.doc_length[doc_id]
            norm = 1.0 - b + (b * dl / avgdl if avgdl > 0 else 0.0)
            contrib = q_count * term_idf * tf * (k1 + 1.0) / (tf + k1 * norm)
            scores[doc_id] = scores.get(doc_id, 0.0) + contrib

    ranked = sorted(((d, s) for d, s in scores.items() if s > 0.0),
                    key=lambda ds: (-ds[1], ds[0]))
    return ranked[:top_k]


def compute_lambda(references, query: str, beta: float, lambda_min: int = 1) -> int:
    """Adaptive query repetition count: floor(sum(len(r)) / (len(q) * beta))."""
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    q_len = len(tokenize(query))
    if q_len == 0:
        raise ValueError("query tokenizes to zero tokens; repetition count undefined")
    total_ref_len = sum(len(tokenize(r)) for r in references)
    return max(lambda_min, math.floor(total_ref_len / (q_len * beta)))


def build_sparse_query(query: str, references, config: ReweightConfig) -> SparseQuery:
    """Expand a query: repeat it, then append every reference's tokens."""
    references = list(references)
    if config.beta is not None:
        if not references:
            raise ValueError("adaptive reweighting requires at least one reference")
        repeats = compute_lambda(references, query, config.beta, config.lambda_min)
    else:
        repeats = config.t

    tokens: list[str] = []
    q_tokens = tokenize(query)
    for _ in range(repeats):
        tokens.extend(q_tokens)
    for ref in references:
        tokens.extend(tokenize(ref))
    return SparseQuery(tokens=tuple(tokens), query_repeats=repeats,
                       num_references=len(references))
