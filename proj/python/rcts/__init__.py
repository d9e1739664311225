"""Retrieval re-ranking with Monte Carlo tree search."""

from ._rcts import (
    GenerationError,
    Index,
    KbError,
    KnowledgeBase,
    MockBackend,
    RctsError,
    RetrievalError,
    SearchError,
    build_multiple_choice,
    build_reasoning,
    evaluate,
    maxsim,
    parse_answer,
    rerank,
)

__all__ = [
    "GenerationError",
    "Index",
    "KbError",
    "KnowledgeBase",
    "MockBackend",
    "RctsError",
    "RetrievalError",
    "SearchError",
    "build_multiple_choice",
    "build_reasoning",
    "evaluate",
    "maxsim",
    "parse_answer",
    "rerank",
]
