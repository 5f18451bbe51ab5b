import pytest

from protosum.synthetic import make_synthetic_corpus
from protosum.tokenization import tokenize_code, tokenize_summary


def test_split_sizes_and_determinism():
    a = make_synthetic_corpus(n_train=120, n_valid=10, n_test=12, seed=9,
                              n_rare=6, rare_train_occurrences=3)
    b = make_synthetic_corpus(n_train=120, n_valid=10, n_test=12, seed=9,
                              n_rare=6, rare_train_occurrences=3)
    assert [len(a[k]) for k in ("train", "valid", "test")] == [120, 10, 12]
    assert a == b


def test_summaries_are_unique_across_splits():
    splits = make_synthetic_corpus(n_train=100, n_valid=10, n_test=10, seed=2,
                                   n_rare=5, rare_train_occurrences=2)
    summaries = [p.summary_text for pairs in splits.values() for p in pairs]
    assert len(summaries) == len(set(summaries))


def test_code_carries_summary_fillers():
    """Every content word of the summary also appears in the code tokens."""
    splits = make_synthetic_corpus(n_train=60, n_valid=5, n_test=5, seed=7,
                                   n_rare=4, rare_train_occurrences=2)
    structure = {"the", "a", "an", "to", "this", "method", "is", "if",
                 "sets", "write", "convert", "creates", "returns", "true", "new"}
    for pair in splits["train"] + splits["test"]:
        code = set(tokenize_code(pair.code_text))
        for token in tokenize_summary(pair.summary_text):
            if token not in structure:
                assert token in code, (token, pair.code_text)


def test_lengths_fit_default_limits():
    splits = make_synthetic_corpus(n_train=80, n_valid=5, n_test=5, seed=1,
                                   n_rare=4, rare_train_occurrences=2)
    for pairs in splits.values():
        for pair in pairs:
            assert len(tokenize_summary(pair.summary_text)) <= 15
            assert len(tokenize_code(pair.code_text)) <= 100


def test_rare_budget_validation():
    with pytest.raises(ValueError):
        make_synthetic_corpus(n_train=40, n_rare=20, rare_train_occurrences=5)
