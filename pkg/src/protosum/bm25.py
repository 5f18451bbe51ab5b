"""Okapi BM25 over an inverted index of code or summary tokens."""

from __future__ import annotations

import math
import struct
from bisect import bisect_left
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import TokenizedPair

INDEX_MAGIC = b"EDSIDX1"

DEFAULT_K1 = 1.2
DEFAULT_B = 0.75


class EmptyCorpusError(ValueError):
    """Raised when an index is built over zero documents."""


class UnknownDocError(KeyError):
    """Raised when a document id is not in the index."""


class IndexFormatError(ValueError):
    """Raised when an index file is truncated or malformed."""


@dataclass(frozen=True)
class RetrievalHit:
    doc_id: str
    score: float


class InvertedIndex:
    """Immutable BM25 index over one token field of a corpus.

    Postings lists are kept sorted by document id so scoring, ranking, and
    on-disk layout are all deterministic.
    """

    def __init__(
        self,
        field: str,
        doc_len: dict[str, int],
        postings: dict[str, list[tuple[str, int]]],
        k1: float = DEFAULT_K1,
        b: float = DEFAULT_B,
    ):
        if field not in ("code", "summary"):
            raise ValueError(f"field must be 'code' or 'summary', got {field!r}")
        if not doc_len:
            raise EmptyCorpusError("cannot build an index over an empty corpus")
        self.field = field
        self.doc_len = doc_len
        self.postings = postings
        self.k1 = k1
        self.b = b
        self.n_docs = len(doc_len)
        self.avg_doc_len = sum(doc_len.values()) / self.n_docs

    def idf(self, term: str) -> float:
        """ln((N - n + 0.5) / (n + 0.5) + 1); strictly positive for any df."""
        df = len(self.postings.get(term, ()))
        return math.log((self.n_docs - df + 0.5) / (df + 0.5) + 1.0)

    def _tf(self, term: str, doc_id: str) -> int:
        plist = self.postings.get(term)
        if not plist:
            return 0
        i = bisect_left(plist, (doc_id,))
        if i < len(plist) and plist[i][0] == doc_id:
            return plist[i][1]
        return 0

    def _term_score(self, term: str, tf: int, length: int) -> float:
        norm = self.k1 * (1.0 - self.b + self.b * length / self.avg_doc_len)
        return self.idf(term) * tf * (self.k1 + 1.0) / (tf + norm)

    def score(self, query: Sequence[str], doc_id: str) -> float:
        """BM25 score of one document; additive over query token occurrences."""
        if doc_id not in self.doc_len:
            raise UnknownDocError(doc_id)
        length = self.doc_len[doc_id]
        total = 0.0
        for term in query:
            tf = self._tf(term, doc_id)
            if tf:
                total += self._term_score(term, tf, length)
        return total

    def top_k(
        self, query: Sequence[str], k: int, exclude_id: str | None = None
    ) -> list[RetrievalHit]:
        """Rank documents sharing at least one query term.

        Results are sorted by descending score with ascending-id
        tie-breaking; fewer than ``k`` hits are returned when fewer
        documents match.
        """
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        scores: dict[str, float] = {}
        for term in query:
            plist = self.postings.get(term)
            if not plist:
                continue
            idf = self.idf(term)
            for doc_id, tf in plist:
                length = self.doc_len[doc_id]
                norm = self.k1 * (1.0 - self.b + self.b * length / self.avg_doc_len)
                contrib = idf * tf * (self.k1 + 1.0) / (tf + norm)
                scores[doc_id] = scores.get(doc_id, 0.0) + contrib
        if exclude_id is not None:
            scores.pop(exclude_id, None)
        ranked = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
        return [RetrievalHit(doc_id, score) for doc_id, score in ranked[:k]]

    def save(self, path: str | Path) -> None:
        """Write the versioned binary index format."""
        doc_order = sorted(self.doc_len)
        doc_pos = {doc_id: i for i, doc_id in enumerate(doc_order)}
        out = bytearray()
        out += INDEX_MAGIC
        out += struct.pack("<B", 0 if self.field == "code" else 1)
        out += struct.pack("<dd", self.k1, self.b)
        out += struct.pack("<I", len(doc_order))
        for doc_id in doc_order:
            raw = doc_id.encode("utf-8")
            out += struct.pack("<H", len(raw)) + raw + struct.pack("<I", self.doc_len[doc_id])
        terms = sorted(self.postings)
        out += struct.pack("<I", len(terms))
        for term in terms:
            raw = term.encode("utf-8")
            plist = self.postings[term]
            out += struct.pack("<H", len(raw)) + raw + struct.pack("<I", len(plist))
            prev = 0
            for doc_id, tf in plist:
                pos = doc_pos[doc_id]
                out += struct.pack("<II", pos - prev, tf)
                prev = pos
        Path(path).write_bytes(bytes(out))

    @classmethod
    def load(cls, path: str | Path) -> "InvertedIndex":
        data = Path(path).read_bytes()
        view = memoryview(data)
        offset = 0

        def take(fmt: str):
            nonlocal offset
            size = struct.calcsize(fmt)
            if offset + size > len(view):
                raise IndexFormatError(f"{path}: truncated index file")
            values = struct.unpack_from(fmt, view, offset)
            offset += size
            return values

        def take_str() -> str:
            nonlocal offset
            (length,) = take("<H")
            if offset + length > len(view):
                raise IndexFormatError(f"{path}: truncated index file")
            raw = bytes(view[offset : offset + length])
            offset += length
            return raw.decode("utf-8")

        if bytes(view[:7]) != INDEX_MAGIC:
            raise IndexFormatError(f"{path}: not an index file (bad magic)")
        offset = 7
        (field_code,) = take("<B")
        k1, b = take("<dd")
        (n_docs,) = take("<I")
        doc_order = []
        doc_len: dict[str, int] = {}
        for _ in range(n_docs):
            doc_id = take_str()
            (length,) = take("<I")
            doc_order.append(doc_id)
            doc_len[doc_id] = length
        (n_terms,) = take("<I")
        postings: dict[str, list[tuple[str, int]]] = {}
        for _ in range(n_terms):
            term = take_str()
            (df,) = take("<I")
            plist = []
            pos = 0
            for _ in range(df):
                delta, tf = take("<II")
                pos += delta
                plist.append((doc_order[pos], tf))
            postings[term] = plist
        if offset != len(view):
            raise IndexFormatError(f"{path}: trailing bytes after postings")
        return cls("code" if field_code == 0 else "summary", doc_len, postings, k1=k1, b=b)


def build_index(
    pairs: Iterable[TokenizedPair],
    field: str,
    k1: float = DEFAULT_K1,
    b: float = DEFAULT_B,
) -> InvertedIndex:
    """Build a BM25 index over the code or summary tokens of a corpus."""
    doc_len: dict[str, int] = {}
    postings: dict[str, list[tuple[str, int]]] = {}
    for pair in pairs:
        tokens = pair.code_tokens if field == "code" else pair.summary_tokens
        doc_len[pair.id] = len(tokens)
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        for token, tf in counts.items():
            postings.setdefault(token, []).append((pair.id, tf))
    for plist in postings.values():
        plist.sort()
    return InvertedIndex(field, doc_len, postings, k1=k1, b=b)
