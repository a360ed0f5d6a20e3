"""Query expansion with LLM-generated pseudo-references for sparse and dense retrieval."""

__version__ = "0.1.0"
