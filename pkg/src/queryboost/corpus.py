"""Corpus ingestion and an immutable inverted index with BM25 statistics."""

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from queryboost.tokenizer import tokenize

FIELD_POLICIES = ("text_only", "title_plus_text")


@dataclass(frozen=True)
class Document:
    """One corpus passage; the unit that retrieval scores."""

    doc_id: str
    title: str
    text: str

    def indexed_text(self, field_policy: str = "title_plus_text") -> str:
        if field_policy == "title_plus_text" and self.title:
            return f"{self.title} {self.text}"
        return self.text


@dataclass(frozen=True)
class CorpusStats:
    num_docs: int
    avgdl: float
    doc_length: dict[str, int] = field(default_factory=dict)


class InvertedIndex:
    """Immutable term -> postings map plus the corpus statistics BM25 needs.

    Postings are lists of (doc_id, tf) sorted by doc_id. Built once by
    ``build_index``; safe for unlimited concurrent readers afterwards.
    """

    def __init__(self, postings: dict[str, list[tuple[str, int]]],
                 df: dict[str, int], stats: CorpusStats, field_policy: str):
        self.postings = postings
        self.df = df
        self.stats = stats
        self.field_policy = field_policy

    @property
    def num_docs(self) -> int:
        return self.stats.num_docs

    @property
    def avgdl(self) -> float:
        return self.stats.avgdl

    def doc_ids(self) -> list[str]:
        return list(self.stats.doc_length)

    def __contains__(self, doc_id: str) -> bool:
        return doc_id in self.stats.doc_length


def build_index(docs, field_policy: str = "title_plus_text") -> InvertedIndex:
    """Build an inverted index over the chosen field of each document."""
    if field_policy not in FIELD_POLICIES:
        raise ValueError(f"unknown field_policy: {field_policy!r}")

    postings: dict[str, list[tuple[str, int]]] = {}
    doc_length: dict[str, int] = {}
    total_len = 0

    for doc in docs:
        if doc.doc_id in doc_length:
            raise ValueError(f"duplicate doc_id: {doc.doc_id!r}")
        tokens = tokenize(doc.indexed_text(field_policy))
        doc_length[doc.doc_id] = len(tokens)
        total_len += len(tokens)
        for term, tf in Counter(tokens).items():
            postings.setdefault(term, []).append((doc.doc_id, tf))

    for plist in postings.values():
        plist.sort(key=lambda entry: entry[0])
    df = {term: len(plist) for term, plist in postings.items()}

    n = len(doc_length)
    stats = CorpusStats(num_docs=n, avgdl=total_len / n if n else 0.0,
                        doc_length=doc_length)
    return InvertedIndex(postings, df, stats, field_policy)


def load_corpus_jsonl(path) -> list[Document]:
    """Load a JSONL corpus with keys ``_id``, ``title`` (optional), ``text``."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON: {exc}") from exc
            if "_id" not in obj or "text" not in obj:
                raise ValueError(f"{path}:{lineno}: missing required key '_id' or 'text'")
            docs.append(Document(doc_id=str(obj["_id"]),
                                 title=str(obj.get("title", "") or ""),
                                 text=str(obj["text"])))
    return docs


def save_index(index: InvertedIndex, path) -> None:
    """Persist an index as a single JSON artifact (round-trips exactly)."""
    payload = {
        "field_policy": index.field_policy,
        "num_docs": index.stats.num_docs,
        "avgdl": index.stats.avgdl,
        "doc_length": index.stats.doc_length,
        "postings": {term: [[d, tf] for d, tf in plist]
                     for term, plist in index.postings.items()},
    }
    Path(path).write_text(json.dumps(payload, ensure_ascii=False, sort_keys=True),
                          encoding="utf-8")


def load_index(path) -> InvertedIndex:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    postings = {term: [(d, int(tf)) for d, tf in plist]
                for term, plist in payload["postings"].items()}
    df = {term: len(plist) for term, plist in postings.items()}
    stats = CorpusStats(num_docs=int(payload["num_docs"]),
                        avgdl=float(payload["avgdl"]),
                        doc_length={d: int(n) for d, n in payload["doc_length"].items()})
    return InvertedIndex(postings, df, stats, payload["field_policy"])
