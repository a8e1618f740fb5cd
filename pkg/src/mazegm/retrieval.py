"""Rule-sentence store and top-k retrieval by max-pooled cosine similarity."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

EmbedFn = Callable[[Sequence[str]], Sequence[Sequence[float]]]


class RetrievalError(ValueError):
    pass


@dataclass(frozen=True)
class RuleStore:
    """Immutable rule sentences with their embedding matrix (one column each)."""

    sentences: tuple[str, ...]
    vectors: np.ndarray  # shape (dim, R)

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] != len(self.sentences):
            raise RetrievalError(
                f"vector matrix {self.vectors.shape} does not match "
                f"{len(self.sentences)} sentences"
            )
        norms = np.linalg.norm(self.vectors, axis=0)
        if np.any(norms == 0):
            raise RetrievalError("rule vectors must be non-zero")
        self.vectors.setflags(write=False)

    def __len__(self) -> int:
        return len(self.sentences)


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked (sentence id, score) pairs, best first; ties go to the lower id."""

    ranked: tuple[tuple[int, float], ...]
    clamped: bool = False  # k exceeded the store size and was reduced

    @property
    def ids(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.ranked)


def load_rule_store(sentences: Sequence[str], embed_fn: EmbedFn) -> RuleStore:
    """Embed the rule sentences once; retrieval reuses the cached matrix."""
    sentences = tuple(s.strip() for s in sentences if s.strip())
    if not sentences:
        raise RetrievalError("rule store needs at least one sentence")
    matrix = np.asarray(embed_fn(sentences), dtype=float).T
    return RuleStore(sentences, matrix)


def load_rule_store_from_file(path: str | Path, embed_fn: EmbedFn) -> RuleStore:
    """One rule sentence per line; blank lines ignored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return load_rule_store(lines, embed_fn)


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise RetrievalError(f"dimension mismatch: {a.shape} vs {b.shape}")
    norm_a = np.linalg.norm(a)
    norm_b = np.linalg.norm(b)
    if norm_a == 0 or norm_b == 0:
        raise RetrievalError("cosine of a zero vector is undefined")
    return float(np.dot(a, b) / (norm_a * norm_b))


def top_k_rules(
    store: RuleStore, query_messages: Sequence[str], k: int, embed_fn: EmbedFn
) -> RetrievalResult:
    """Top-k rule sentences by cosine similarity max-pooled over the queries.

    Builds the full rules-by-queries similarity matrix, pools each row with
    max, and returns the k best pooled scores (ascending-id tie-break).
    Asking for more rules than exist returns them all, flagged.
    """
    if k < 1:
        raise RetrievalError(f"k must be at least 1, got {k}")
    if not query_messages:
        raise RetrievalError("at least one query message is required")
    query_vecs = [np.asarray(q, dtype=float) for q in embed_fn(query_messages)]
    if any(q.shape != (store.vectors.shape[0],) for q in query_vecs):
        raise RetrievalError(
            f"query dimension does not match store dimension {store.vectors.shape[0]}"
        )
    # score each pair through the single-pair cosine on contiguous copies, not
    # a matrix product: BLAS routing differs per shape/stride in the last bit,
    # which is enough to flip near-tie rankings between implementations
    rule_vecs = [np.ascontiguousarray(store.vectors[:, i]) for i in range(len(store))]
    pooled = [max(cosine(rv, qv) for qv in query_vecs) for rv in rule_vecs]
    clamped = k > len(store)
    k = min(k, len(store))
    order = sorted(range(len(store)), key=lambda i: (-pooled[i], i))
    ranked = tuple((i, float(pooled[i])) for i in order[:k])
    return RetrievalResult(ranked, clamped=clamped)


def full_injection_k(store: RuleStore) -> int:
    """k that makes top_k_rules return the whole summary (full-injection mode)."""
    return len(store)
