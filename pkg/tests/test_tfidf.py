import math
from collections import Counter

import numpy as np
import pytest

from protosum.corpus import DatasetSplit, TokenizedPair
from protosum.tfidf import TfidfRetriever, nngen_select, vsm_retrieve

from conftest import random_split


def dense_cosine_oracle(split: DatasetSplit, query):
    """Dense TF-IDF cosine over the corpus vocabulary, computed with numpy."""
    vocab = sorted({t for p in split for t in p.code_tokens})
    col = {t: i for i, t in enumerate(vocab)}
    n = len(split)
    df = np.zeros(len(vocab))
    for p in split:
        for t in set(p.code_tokens):
            df[col[t]] += 1
    idf = np.log(n / df)
    mat = np.zeros((n, len(vocab)))
    ids = []
    for row, p in enumerate(split):
        ids.append(p.id)
        for t, c in Counter(p.code_tokens).items():
            mat[row, col[t]] = c * idf[col[t]]
    qvec = np.zeros(len(vocab))
    for t, c in Counter(query).items():
        if t in col:
            qvec[col[t]] = c * idf[col[t]]
    qnorm = np.linalg.norm(qvec)
    sims = {}
    for row in range(n):
        dnorm = np.linalg.norm(mat[row])
        dot = float(mat[row] @ qvec)
        if qnorm > 0 and dnorm > 0 and dot > 0:
            sims[ids[row]] = dot / (qnorm * dnorm)
    return sims


def independent_sentence_bleu4(candidate, reference):
    """Smoothed sentence BLEU-4 written directly from the formula."""
    if not candidate:
        return 0.0
    precisions = []
    for n in range(1, 5):
        cand_grams = Counter(
            tuple(candidate[i : i + n]) for i in range(len(candidate) - n + 1)
        )
        ref_grams = Counter(tuple(reference[i : i + n]) for i in range(len(reference) - n + 1))
        matched = sum(min(c, ref_grams[g]) for g, c in cand_grams.items())
        total = sum(cand_grams.values())
        if n == 1:
            precisions.append(matched / total if total else 0.0)
        else:
            precisions.append((matched + 1) / (total + 1))
    if precisions[0] == 0.0:
        return 0.0
    bp = 1.0 if len(candidate) > len(reference) else math.exp(1 - len(reference) / len(candidate))
    return 100.0 * bp * math.exp(sum(math.log(p) for p in precisions) / 4)


def test_exact_duplicate_has_cosine_one():
    rng = np.random.default_rng(12)
    split = random_split(rng, 20)
    retriever = TfidfRetriever(split)
    target = split.pairs[3]
    ranked = retriever.rank(target.code_tokens, 1)
    assert ranked[0][0] == target.id
    assert ranked[0][1] == pytest.approx(1.0, abs=1e-12)
    _, summary = retriever.retrieve(target.code_tokens)
    assert summary == target.summary_tokens


def test_orthogonal_query_falls_back_to_first_id():
    pairs = [TokenizedPair("q", ("x",), ("sx",)), TokenizedPair("b", ("y",), ("sy",))]
    split = DatasetSplit("train", pairs)
    doc_id, summary = vsm_retrieve(split, ["unseen", "words"])
    assert doc_id == "b"
    assert summary == ("sy",)


def test_vsm_matches_dense_oracle():
    rng = np.random.default_rng(31)
    split = random_split(rng, 50)
    retriever = TfidfRetriever(split)
    for _ in range(25):
        query = [
            split.pairs[rng.integers(50)].code_tokens[0],
            split.pairs[rng.integers(50)].code_tokens[-1],
            "alpha",
        ]
        sims = dense_cosine_oracle(split, query)
        expected_id = min(sims.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        got_id, _ = retriever.retrieve(query)
        assert got_id == expected_id
        ranked = retriever.rank(query, len(sims))
        for doc_id, sim in ranked:
            assert sim == pytest.approx(sims[doc_id], rel=1e-10)


def test_nngen_k1_reduces_to_vsm():
    rng = np.random.default_rng(77)
    split = random_split(rng, 30)
    for _ in range(10):
        query = [split.pairs[rng.integers(30)].code_tokens[0], "tango"]
        assert nngen_select(split, query, k=1) == vsm_retrieve(split, query)


def test_nngen_exact_duplicate_dominates():
    rng = np.random.default_rng(13)
    split = random_split(rng, 25)
    target = split.pairs[10]
    _, summary = nngen_select(split, target.code_tokens, k=5)
    assert summary == target.summary_tokens


def test_nngen_matches_enumerated_oracle():
    rng = np.random.default_rng(99)
    split = random_split(rng, 50)
    retriever = TfidfRetriever(split)
    for _ in range(15):
        query = [
            split.pairs[rng.integers(50)].code_tokens[0],
            split.pairs[rng.integers(50)].code_tokens[1],
        ]
        sims = dense_cosine_oracle(split, query)
        candidates = sorted(sims.items(), key=lambda kv: (-kv[1], kv[0]))[:5] or [
            (min(p.id for p in split), 0.0)
        ]
        best = max(
            enumerate(candidates),
            key=lambda item: (
                independent_sentence_bleu4(list(split.by_id[item[1][0]].code_tokens), query),
                -item[0],
            ),
        )[1][0]
        got_id, _ = retriever.retrieve_by_bleu(query, 5)
        assert got_id == best


def test_rejects_bad_k_and_empty_split():
    rng = np.random.default_rng(1)
    split = random_split(rng, 5)
    with pytest.raises(ValueError):
        TfidfRetriever(split).retrieve_by_bleu(["alpha"], 0)
    with pytest.raises(ValueError):
        TfidfRetriever(DatasetSplit("train", []))
