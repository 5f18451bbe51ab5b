"""Input validation helpers for the estimator API."""

from __future__ import annotations

from typing import Sequence


def check_texts(X) -> list[str]:
    """Validate a sequence of non-empty strings and return it as a list."""
    if isinstance(X, str):
        raise TypeError("expected a sequence of strings, got a single string")
    texts = list(X)
    if not texts:
        raise ValueError("expected at least one sample")
    for i, text in enumerate(texts):
        if not isinstance(text, str):
            raise TypeError(f"sample {i} is {type(text).__name__}, expected str")
        if not text.strip():
            raise ValueError(f"sample {i} is empty")
    return texts


def check_text_pairs(X, y) -> tuple[list[str], list[str]]:
    """Validate aligned code and summary string sequences."""
    codes = check_texts(X)
    summaries = check_texts(y)
    if len(codes) != len(summaries):
        raise ValueError(f"X has {len(codes)} samples but y has {len(summaries)}")
    return codes, summaries


def pair_ids(n: int) -> list[str]:
    """Zero-padded ids so lexicographic and numeric order agree."""
    width = len(str(max(n - 1, 0)))
    return [str(i).zfill(width) for i in range(n)]


def check_params(**named: Sequence) -> None:
    """Raise on non-positive values; keyword names show up in the message."""
    for name, value in named.items():
        if value is not None and value <= 0:
            raise ValueError(f"{name} must be positive, got {value}")
