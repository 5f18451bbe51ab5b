"""Code/summary pair records, dataset splits, and line-delimited corpus files."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .tokenization import (
    DEFAULT_MAX_CODE_LEN,
    DEFAULT_MAX_SUMMARY_LEN,
    tokenize_code,
    tokenize_summary,
)


class CorpusFormatError(ValueError):
    """Raised when a corpus file violates the record format."""


@dataclass(frozen=True)
class RawPair:
    """One untokenized code/summary sample."""

    id: str
    code_text: str
    summary_text: str

    def __post_init__(self):
        if not self.id:
            raise CorpusFormatError("pair id must be non-empty")
        if not self.code_text.strip():
            raise CorpusFormatError(f"pair {self.id!r}: code is empty")
        if not self.summary_text.strip():
            raise CorpusFormatError(f"pair {self.id!r}: summary is empty")


@dataclass(frozen=True)
class TokenizedPair:
    """A sample after tokenization and truncation."""

    id: str
    code_tokens: tuple[str, ...]
    summary_tokens: tuple[str, ...]


class DatasetSplit:
    """A named collection of tokenized pairs with unique ids."""

    def __init__(self, name: str, pairs: Sequence[TokenizedPair]):
        self.name = name
        self.pairs: tuple[TokenizedPair, ...] = tuple(pairs)
        self.by_id: dict[str, TokenizedPair] = {}
        for pair in self.pairs:
            if pair.id in self.by_id:
                raise CorpusFormatError(f"duplicate pair id {pair.id!r} in split {name!r}")
            self.by_id[pair.id] = pair

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self):
        return iter(self.pairs)


def tokenize_pair(
    pair: RawPair,
    max_code_len: int = DEFAULT_MAX_CODE_LEN,
    max_summary_len: int = DEFAULT_MAX_SUMMARY_LEN,
) -> TokenizedPair:
    return TokenizedPair(
        id=pair.id,
        code_tokens=tuple(tokenize_code(pair.code_text, max_code_len)),
        summary_tokens=tuple(tokenize_summary(pair.summary_text, max_summary_len)),
    )


def make_split(
    name: str,
    raw_pairs: Iterable[RawPair],
    max_code_len: int = DEFAULT_MAX_CODE_LEN,
    max_summary_len: int = DEFAULT_MAX_SUMMARY_LEN,
) -> DatasetSplit:
    return DatasetSplit(name, [tokenize_pair(p, max_code_len, max_summary_len) for p in raw_pairs])


def load_corpus(path: str | Path) -> list[RawPair]:
    """Read a corpus file: one JSON object per line with id/code/summary."""
    pairs = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                pair = RawPair(
                    id=str(record["id"]),
                    code_text=record["code"],
                    summary_text=record["summary"],
                )
            except KeyError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: missing field {exc}") from exc
            if pair.id in seen:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate id {pair.id!r}")
            seen.add(pair.id)
            pairs.append(pair)
    return pairs


def save_corpus(pairs: Iterable[RawPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for pair in pairs:
            record = {"id": pair.id, "code": pair.code_text, "summary": pair.summary_text}
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_split(
    path: str | Path,
    name: str = "train",
    max_code_len: int = DEFAULT_MAX_CODE_LEN,
    max_summary_len: int = DEFAULT_MAX_SUMMARY_LEN,
) -> DatasetSplit:
    return make_split(name, load_corpus(path), max_code_len, max_summary_len)
