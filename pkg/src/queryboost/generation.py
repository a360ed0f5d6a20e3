"""Pseudo-reference generation via an OpenAI-compatible chat service, with a JSONL cache.

Every generated reference set is persisted before it is returned, so all
downstream stages can run offline and deterministically from the cache.
"""

import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from threading import Lock

import requests

PROMPT_VERSION = "v1"
PROMPT_TEMPLATE = ("Write a passage that provides relevant background knowledge "
                   "to answer the following query: {query}")


class GenerationError(RuntimeError):
    pass


class CacheFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GenerationConfig:
    model_id: str
    n: int = 5
    temperature: float = 1.0
    max_tokens: int = 512
    timeout: float = 60.0
    max_retries: int = 3
    api_key_env: str = "OPENAI_API_KEY"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class ReferenceSet:
    """The pseudo-references generated for one query, plus generation metadata."""

    query_id: str
    query: str
    references: tuple[str, ...]
    model_id: str
    created_at: str = ""
    prompt_version: str = PROMPT_VERSION

    def __post_init__(self):
        if not self.references:
            raise ValueError("references must be non-empty")
        if any(not r for r in self.references):
            raise ValueError("empty reference text not allowed")

    def first(self, j: int) -> "ReferenceSet":
        """Restrict to the first j references (for reference-count ablations)."""
        if not 1 <= j <= len(self.references):
            raise ValueError(f"need 1 <= j <= {len(self.references)}, got {j}")
        return ReferenceSet(self.query_id, self.query, self.references[:j],
                            self.model_id, self.created_at, self.prompt_version)


def render_prompt(query: str) -> str:
    """Instantiate the fixed, versioned generation prompt with the query verbatim."""
    if not query:
        raise ValueError("query must be non-empty")
    return PROMPT_TEMPLATE.format(query=query)


class ReferenceCache:
    """Append-only JSONL cache of reference sets, keyed on (query_id, model_id).

    Reads are concurrent-safe; writes are serialized by a single lock. The
    latest entry for a key wins.
    """

    def __init__(self, path):
        self.path = Path(path)
        self._lock = Lock()
        self._entries: dict[tuple[str, str], ReferenceSet] = {}
        if self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    rs = ReferenceSet(
                        query_id=obj["query_id"], query=obj["query"],
                        references=tuple(obj["references"]), model_id=obj["model"],
                        created_at=obj.get("created_at", ""),
                        prompt_version=obj.get("prompt_version", PROMPT_VERSION))
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise CacheFormatError(
                        f"{self.path}:{lineno}: corrupt cache line: {exc}") from exc
                self._entries[(rs.query_id, rs.model_id)] = rs

    def put(self, rs: ReferenceSet) -> None:
        record = {"query_id": rs.query_id, "query": rs.query, "model": rs.model_id,
                  "prompt_version": rs.prompt_version,
                  "references": list(rs.references), "created_at": rs.created_at}
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            self._entries[(rs.query_id, rs.model_id)] = rs

    def get(self, query_id: str, model_id: str) -> ReferenceSet | None:
        return self._entries.get((query_id, model_id))

    def __len__(self) -> int:
        return len(self._entries)


class ChatCompletionClient:
    """Minimal OpenAI-compatible chat-completions client with retry/backoff."""

    def __init__(self, endpoint: str, api_key_env: str = "OPENAI_API_KEY",
                 session: requests.Session | None = None, backoff_base: float = 0.5):
        self.endpoint = endpoint
        self.api_key_env = api_key_env
        self.backoff_base = backoff_base
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        api_key = os.environ.get(self.api_key_env, "")
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        return headers

    def complete(self, prompt: str, cfg: GenerationConfig, n: int) -> list[str]:
        """Request n completions for one prompt; retries transport and 5xx errors."""
        payload = {
            "model": cfg.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": cfg.temperature,
            "max_tokens": cfg.max_tokens,
            "n": n,
        }
        last_error: Exception | None = None
        for attempt in range(cfg.max_retries + 1):
            if attempt:
                time.sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._session.post(self.endpoint, json=payload,
                                          headers=self._headers(),
                                          timeout=cfg.timeout)
                resp.raise_for_status()
                data = resp.json()
                return [choice["message"]["content"]
                        for choice in data["choices"]]
            except (requests.RequestException, KeyError, ValueError) as exc:
                last_error = exc
        raise GenerationError(
            f"chat completion failed after {cfg.max_retries + 1} attempts: {last_error}")


def generate_references(client: ChatCompletionClient, cache: ReferenceCache,
                        query_id: str, query: str,
                        cfg: GenerationConfig) -> ReferenceSet:
    """Generate n pseudo-references for one query and persist them before returning.

    Empty completions are retried with single-sample calls; a reference still
    empty after retries is an error naming the query.
    """
    prompt = render_prompt(query)
    completions = [c.strip() for c in client.complete(prompt, cfg, cfg.n)]

    for _ in range(cfg.max_retries):
        if all(completions):
            break
        for i, text in enumerate(completions):
            if not text:
                completions[i] = client.complete(prompt, cfg, 1)[0].strip()
    if not all(completions) or len(completions) != cfg.n:
        raise GenerationError(
            f"query {query_id!r}: got {sum(1 for c in completions if c)}/{cfg.n} "
            "non-empty references")

    rs = ReferenceSet(query_id=query_id, query=query,
                      references=tuple(completions), model_id=cfg.model_id,
                      created_at=datetime.now(timezone.utc).isoformat())
    cache.put(rs)
    return rs


def generate_for_queries(client: ChatCompletionClient, cache: ReferenceCache,
                         queries: list[tuple[str, str]], cfg: GenerationConfig,
                         jobs: int = 4, skip_cached: bool = True) -> list[ReferenceSet]:
    """Generate references for many queries with bounded in-flight requests."""
    results: dict[str, ReferenceSet] = {}
    pending = []
    for query_id, query in queries:
        cached = cache.get(query_id, cfg.model_id) if skip_cached else None
        if cached is not None and len(cached.references) >= cfg.n:
            results[query_id] = cached
        else:
            pending.append((query_id, query))

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        futures = {pool.submit(generate_references, client, cache, qid, q, cfg): qid
                   for qid, q in pending}
        for future, qid in futures.items():
            results[qid] = future.result()

    return [results[qid] for qid, _ in queries]
