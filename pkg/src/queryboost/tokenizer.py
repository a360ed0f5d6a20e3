"""Deterministic tokenizer shared by indexing, query reweighting, and analysis.

Lowercase, split on any non-alphanumeric codepoint, drop empties. No stemming
and no stopword removal: the query-repetition math is defined over raw token
counts, so the token stream must be reproducible everywhere.
"""

import re

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split text into lowercase alphanumeric tokens."""
    return _TOKEN_RE.findall(text.lower())


def token_count(text: str) -> int:
    """Token length of a text under the shared tokenizer."""
    return len(tokenize(text))
