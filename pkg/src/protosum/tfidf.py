"""TF-IDF cosine retrieval and the nearest-neighbor BLEU reranker."""

from __future__ import annotations

import math
from typing import Sequence

from .corpus import DatasetSplit
from .metrics import sentence_bleu


class TfidfRetriever:
    """Sparse TF-IDF vectors over code tokens with cosine ranking.

    Weights are raw term frequency times ln(N / df). Documents sharing no
    term with the query score 0 and are excluded from the ranking; a query
    matching nothing falls back to the first pair by ascending id.
    """

    def __init__(self, split: DatasetSplit):
        if len(split) == 0:
            raise ValueError("cannot build a retriever over an empty split")
        self.split = split
        self.n_docs = len(split)
        df: dict[str, int] = {}
        doc_counts: dict[str, dict[str, int]] = {}
        for pair in split:
            counts: dict[str, int] = {}
            for token in pair.code_tokens:
                counts[token] = counts.get(token, 0) + 1
            doc_counts[pair.id] = counts
            for token in counts:
                df[token] = df.get(token, 0) + 1
        self.idf = {t: math.log(self.n_docs / n) for t, n in df.items()}
        self.doc_vectors: dict[str, dict[str, float]] = {}
        self.doc_norms: dict[str, float] = {}
        for doc_id, counts in doc_counts.items():
            vec = {t: tf * self.idf[t] for t, tf in counts.items()}
            self.doc_vectors[doc_id] = vec
            self.doc_norms[doc_id] = math.sqrt(sum(w * w for w in vec.values()))
        self._first_id = min(p.id for p in split)

    def _query_vector(self, tokens: Sequence[str]) -> dict[str, float]:
        counts: dict[str, int] = {}
        for token in tokens:
            if token in self.idf:
                counts[token] = counts.get(token, 0) + 1
        return {t: tf * self.idf[t] for t, tf in counts.items()}

    def rank(self, code_tokens: Sequence[str], k: int) -> list[tuple[str, float]]:
        """Top-k (doc_id, cosine) pairs, ties broken by ascending id."""
        qvec = self._query_vector(code_tokens)
        qnorm = math.sqrt(sum(w * w for w in qvec.values()))
        sims: dict[str, float] = {}
        if qnorm > 0.0:
            for doc_id, vec in self.doc_vectors.items():
                dnorm = self.doc_norms[doc_id]
                if dnorm == 0.0:
                    continue
                dot = 0.0
                for term, weight in qvec.items():
                    if term in vec:
                        dot += weight * vec[term]
                if dot > 0.0:
                    sims[doc_id] = dot / (qnorm * dnorm)
        if not sims:
            return [(self._first_id, 0.0)]
        ranked = sorted(sims.items(), key=lambda item: (-item[1], item[0]))
        return ranked[:k]

    def retrieve(self, code_tokens: Sequence[str]) -> tuple[str, tuple[str, ...]]:
        """Summary of the cosine-nearest training code."""
        doc_id, _ = self.rank(code_tokens, 1)[0]
        return doc_id, self.split.by_id[doc_id].summary_tokens

    def retrieve_by_bleu(
        self, code_tokens: Sequence[str], k: int = 5
    ) -> tuple[str, tuple[str, ...]]:
        """Among the k cosine-nearest codes, pick the one whose code tokens
        score highest smoothed sentence BLEU-4 against the input code."""
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        candidates = self.rank(code_tokens, k)
        scored = []
        for rank_pos, (doc_id, _) in enumerate(candidates):
            candidate_code = list(self.split.by_id[doc_id].code_tokens)
            bleu = sentence_bleu(candidate_code, list(code_tokens))
            scored.append((-bleu, rank_pos, doc_id))
        scored.sort()
        best_id = scored[0][2]
        return best_id, self.split.by_id[best_id].summary_tokens


def vsm_retrieve(split: DatasetSplit, code_tokens: Sequence[str]) -> tuple[str, tuple[str, ...]]:
    """One-shot TF-IDF cosine retrieval (builds the model on the fly)."""
    return TfidfRetriever(split).retrieve(code_tokens)


def nngen_select(
    split: DatasetSplit, code_tokens: Sequence[str], k: int = 5
) -> tuple[str, tuple[str, ...]]:
    """One-shot nearest-neighbor selection with BLEU reranking."""
    return TfidfRetriever(split).retrieve_by_bleu(code_tokens, k)
