"""Bounded token vocabularies with reserved special ids."""

from __future__ import annotations

from collections import Counter
from pathlib import Path
from typing import Iterable, Sequence

PAD_ID, UNK_ID, BOS_ID, EOS_ID = 0, 1, 2, 3
PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN = "<pad>", "<unk>", "<bos>", "<eos>"
SPECIAL_TOKENS = (PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN)


class Vocabulary:
    """Immutable token <-> id mapping; ids 0-3 are reserved specials."""

    def __init__(self, tokens: Sequence[str]):
        if tuple(tokens[:4]) != SPECIAL_TOKENS:
            raise ValueError(f"vocabulary must start with {SPECIAL_TOKENS}")
        self.id_to_token: tuple[str, ...] = tuple(tokens)
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise ValueError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def encode(self, tokens: Iterable[str], add_bos_eos: bool = False) -> list[int]:
        """Map tokens to ids, replacing unknown tokens with the UNK id."""
        ids = [self.token_to_id.get(t, UNK_ID) for t in tokens]
        if add_bos_eos:
            return [BOS_ID, *ids, EOS_ID]
        return ids

    def decode(self, ids: Iterable[int]) -> list[str]:
        """Map ids back to surface tokens (specials keep their literals)."""
        return [self.id_to_token[i] for i in ids]

    def decode_output(self, ids: Iterable[int]) -> list[str]:
        """Decode generated ids, dropping PAD/BOS/EOS framing tokens."""
        return [self.id_to_token[i] for i in ids if i not in (PAD_ID, BOS_ID, EOS_ID)]

    def save(self, path: str | Path) -> None:
        Path(path).write_text("\n".join(self.id_to_token) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        lines = Path(path).read_text(encoding="utf-8").splitlines()
        return cls(lines)


def build_vocab(corpus: Iterable[Sequence[str]], max_size: int) -> Vocabulary:
    """Build a vocabulary of the ``max_size - 4`` most frequent tokens.

    Frequency ties break lexicographically ascending, so the id assignment
    is a pure function of the corpus contents.
    """
    if max_size < 4:
        raise ValueError(f"max_size must be at least 4, got {max_size}")
    counts: Counter[str] = Counter()
    for tokens in corpus:
        counts.update(tokens)
    kept = sorted(counts, key=lambda t: (-counts[t], t))[: max_size - 4]
    return Vocabulary([*SPECIAL_TOKENS, *kept])
