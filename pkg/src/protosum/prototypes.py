"""Prototype selection: Jaccard filtering and training-instance construction.

Training instances pair each sample with retrieved prototype summaries whose
Jaccard similarity to the target summary falls inside a window, so the model
sees prototypes that are related but not near-duplicates. At evaluation time
the prototype is simply the summary of the most code-similar training pair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .bm25 import InvertedIndex
from .corpus import DatasetSplit

DEFAULT_TOP_K = 20
DEFAULT_J_MIN = 0.3
DEFAULT_J_MAX = 0.7


class EmptyIndexError(ValueError):
    """Raised when prototype retrieval runs against an unusable index."""


def jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    """|A ∩ B| / |A ∪ B| over de-duplicated token sets; two empties give 0."""
    set_a, set_b = set(a), set(b)
    union = set_a | set_b
    if not union:
        return 0.0
    return len(set_a & set_b) / len(union)


@dataclass(frozen=True)
class TrainingInstance:
    """Input code, target summary, similar code, and prototype summary.

    Tokens are kept as strings; id encoding happens at training time once a
    vocabulary exists.
    """

    src_id: str
    proto_id: str
    x: tuple[str, ...]
    y: tuple[str, ...]
    x_prime: tuple[str, ...]
    y_prime: tuple[str, ...]


def build_training_instances(
    split: DatasetSplit,
    index: InvertedIndex,
    top_k: int = DEFAULT_TOP_K,
    j_min: float = DEFAULT_J_MIN,
    j_max: float = DEFAULT_J_MAX,
) -> list[TrainingInstance]:
    """Construct Jaccard-filtered training instances for every pair.

    Each pair queries the index with its own tokens from the index's field
    (summary by default; a code-field index switches the retrieval side),
    excludes itself by id, and keeps candidates whose summary-Jaccard to the
    target lies in [j_min, j_max]. Output order is (pair order, candidate
    rank), so results do not depend on how the work is scheduled.
    """
    instances = []
    for pair in split:
        query = pair.summary_tokens if index.field == "summary" else pair.code_tokens
        hits = index.top_k(query, top_k, exclude_id=pair.id)
        for hit in hits:
            candidate = split.by_id[hit.doc_id]
            similarity = jaccard(pair.summary_tokens, candidate.summary_tokens)
            if j_min <= similarity <= j_max:
                instances.append(
                    TrainingInstance(
                        src_id=pair.id,
                        proto_id=candidate.id,
                        x=pair.code_tokens,
                        y=pair.summary_tokens,
                        x_prime=candidate.code_tokens,
                        y_prime=candidate.summary_tokens,
                    )
                )
    return instances


def retrieve_prototype(
    code_index: InvertedIndex,
    corpus_split: DatasetSplit,
    code_tokens: Sequence[str],
    exclude_id: str | None = None,
) -> tuple[str, tuple[str, ...]]:
    """Return (pair id, summary tokens) of the most code-similar pair.

    When no document shares a term with the query, falls back to the first
    pair by ascending id so generation stays total.
    """
    if len(corpus_split) == 0:
        raise EmptyIndexError("prototype retrieval needs a non-empty corpus")
    hits = code_index.top_k(code_tokens, 1, exclude_id=exclude_id)
    if hits:
        proto_id = hits[0].doc_id
    else:
        candidates = sorted(pid for pid in code_index.doc_len if pid != exclude_id)
        if not candidates:
            raise EmptyIndexError("no retrievable documents in the index")
        proto_id = candidates[0]
    return proto_id, corpus_split.by_id[proto_id].summary_tokens


def build_eval_instances(
    query_split: DatasetSplit,
    train_code_index: InvertedIndex,
    train_split: DatasetSplit,
) -> list[TrainingInstance]:
    """One instance per pair using evaluation-time prototype retrieval.

    The prototype is the top-1 code-similarity hit from the training corpus;
    no Jaccard window applies.
    """
    instances = []
    for pair in query_split:
        proto_id, _ = retrieve_prototype(
            train_code_index, train_split, pair.code_tokens, exclude_id=pair.id
        )
        proto = train_split.by_id[proto_id]
        instances.append(
            TrainingInstance(
                src_id=pair.id,
                proto_id=proto.id,
                x=pair.code_tokens,
                y=pair.summary_tokens,
                x_prime=proto.code_tokens,
                y_prime=proto.summary_tokens,
            )
        )
    return instances


def save_instances(instances: Iterable[TrainingInstance], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for inst in instances:
            record = {
                "src_id": inst.src_id,
                "proto_id": inst.proto_id,
                "x": list(inst.x),
                "y": list(inst.y),
                "x_prime": list(inst.x_prime),
                "y_prime": list(inst.y_prime),
            }
            f.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_instances(path: str | Path) -> list[TrainingInstance]:
    instances = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            instances.append(
                TrainingInstance(
                    src_id=record["src_id"],
                    proto_id=record["proto_id"],
                    x=tuple(record["x"]),
                    y=tuple(record["y"]),
                    x_prime=tuple(record["x_prime"]),
                    y_prime=tuple(record["y_prime"]),
                )
            )
    return instances
