"""Deterministic text embeddings and exact k-nearest-neighbor cosine search.

The reference embedder is vocabulary-indexed term frequency (no hashing), so
disjoint token sets are exactly orthogonal. A learned-embedding backend can
replace it behind the same interface; nothing here requires one.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable, Optional

import numpy as np

from .catalog import iter_jsonl
from .errors import DegenerateQuery, EmptyCorpus

logger = logging.getLogger(__name__)

SOURCE_KINDS = ("article", "transcript", "report", "social")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    text: str
    source_kind: str
    play_ids: tuple[str, ...] = ()
    timestamp: Optional[float] = None  # seconds offset, transcripts only
    entity_tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class Embedding:
    vector: tuple[float, ...]
    dimension: int

    @property
    def degenerate(self) -> bool:
        return all(v == 0.0 for v in self.vector)


@dataclass(frozen=True)
class VectorQuery:
    """Similarity-search payload routed to the vector retrieval agent."""

    text: str
    k: int
    source_kind: Optional[str] = None
    entity_tag: Optional[str] = None


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; the single definition used by index and callers."""
    return float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))


def chunk_from_record(record: dict) -> Chunk:
    return Chunk(
        chunk_id=record["chunk_id"],
        text=record["text"],
        source_kind=record["source_kind"],
        play_ids=tuple(record.get("play_ids", [])),
        timestamp=record.get("timestamp"),
        entity_tags=tuple(record.get("entity_tags", [])),
    )


class Embedder:
    """Term-frequency embeddings over a first-seen-order vocabulary."""

    def __init__(self, vocabulary: list[str]):
        self.vocabulary = list(vocabulary)
        self._index = {token: i for i, token in enumerate(self.vocabulary)}

    @property
    def dimension(self) -> int:
        return len(self.vocabulary)

    def embed(self, text: str) -> Embedding:
        from .text import tokenize

        counts = np.zeros(self.dimension, dtype=np.float64)
        for token in tokenize(text):
            idx = self._index.get(token)
            if idx is not None:
                counts[idx] += 1.0
        norm = float(np.linalg.norm(counts))
        if norm == 0.0:
            return Embedding(vector=tuple(counts.tolist()), dimension=self.dimension)
        unit = counts / norm
        return Embedding(vector=tuple(unit.tolist()), dimension=self.dimension)


def build_embedder(corpus: Iterable[Chunk]) -> Embedder:
    """Vocabulary is every distinct corpus token in first-seen order."""
    from .text import tokenize

    vocabulary: list[str] = []
    seen: set[str] = set()
    empty = True
    for chunk in corpus:
        empty = False
        for token in tokenize(chunk.text):
            if token not in seen:
                seen.add(token)
                vocabulary.append(token)
    if empty:
        raise EmptyCorpus("cannot build an embedder from an empty corpus")
    return Embedder(vocabulary)


class VectorIndex:
    """Exact cosine search; zero-vector chunks are rejected at add time."""

    def __init__(self) -> None:
        self._chunks: list[Chunk] = []
        self._vectors: list[np.ndarray] = []

    def __len__(self) -> int:
        return len(self._chunks)

    def add(self, chunk: Chunk, embedding: Embedding) -> bool:
        if embedding.degenerate:
            logger.warning("chunk %s embeds to the zero vector; skipped", chunk.chunk_id)
            return False
        self._chunks.append(chunk)
        self._vectors.append(np.asarray(embedding.vector, dtype=np.float64))
        return True

    def search(
        self,
        query: Embedding,
        k: int,
        metadata_filter: Optional[Callable[[Chunk], bool]] = None,
    ) -> list[tuple[Chunk, float]]:
        """Top-k chunks by cosine similarity; ties break by chunk_id ascending."""
        if k <= 0:
            raise ValueError("k must be positive")
        if query.degenerate:
            raise DegenerateQuery("query embedding is the zero vector")
        q = np.asarray(query.vector, dtype=np.float64)
        scored: list[tuple[float, str, int]] = []
        for i, (chunk, vector) in enumerate(zip(self._chunks, self._vectors)):
            if metadata_filter is not None and not metadata_filter(chunk):
                continue
            scored.append((cosine(vector, q), chunk.chunk_id, i))
        scored.sort(key=lambda item: (-item[0], item[1]))
        return [(self._chunks[i], sim) for sim, _, i in scored[:k]]


def load_chunks(path: str | Path) -> list[Chunk]:
    return [chunk_from_record(record) for _, record in iter_jsonl(path)]


def kind_filter(source_kind: Optional[str], entity_tag: Optional[str] = None):
    def predicate(chunk: Chunk) -> bool:
        if source_kind is not None and chunk.source_kind != source_kind:
            return False
        if entity_tag is not None and entity_tag not in chunk.entity_tags:
            return False
        return True

    return predicate
