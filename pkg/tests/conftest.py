"""Shared fixtures: small random and templated corpora."""

from __future__ import annotations

import numpy as np
import pytest

from protosum.corpus import DatasetSplit, TokenizedPair, make_split
from protosum.synthetic import make_synthetic_corpus

WORDS = [
    "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf",
    "hotel", "india", "juliet", "kilo", "lima", "mike", "november",
    "oscar", "papa", "quebec", "romeo", "sierra", "tango",
]


def random_split(rng: np.random.Generator, n_docs: int, vocab=WORDS,
                 min_len: int = 3, max_len: int = 12, name: str = "train") -> DatasetSplit:
    """Random token corpora for retrieval tests; summaries mirror codes."""
    pairs = []
    width = len(str(n_docs - 1))
    for i in range(n_docs):
        code = [vocab[rng.integers(len(vocab))] for _ in range(rng.integers(min_len, max_len + 1))]
        summary = [vocab[rng.integers(len(vocab))] for _ in range(rng.integers(min_len, 9))]
        pairs.append(
            TokenizedPair(id=str(i).zfill(width), code_tokens=tuple(code), summary_tokens=tuple(summary))
        )
    return DatasetSplit(name, pairs)


@pytest.fixture(scope="session")
def small_template_split() -> DatasetSplit:
    """Sixty templated pairs, tokenized; used by pairing and pipeline tests."""
    splits = make_synthetic_corpus(n_train=60, n_valid=10, n_test=10, seed=11,
                                   n_rare=5, rare_train_occurrences=3)
    return make_split("train", splits["train"])
