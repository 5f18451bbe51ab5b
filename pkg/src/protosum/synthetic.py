"""Deterministic synthetic corpus of templated code/summary pairs.

Summaries follow a handful of high-frequency patterns ("write X to Y",
"this method sets X", ...) with noun fillers drawn from a common pool plus
a configurable set of rare fillers. Rare fillers appear a few times in the
training split inside short templates and reappear in held-out test pairs
inside long templates, so a test pair's nearest training neighbor usually
shares the pattern but not the rare word. Java-flavored method bodies embed
the same filler tokens, which keeps retrieval and editing signal aligned.
"""

from __future__ import annotations

import numpy as np

from .corpus import RawPair

_COMMON_FILLERS = [
    "buffer", "output stream", "xml file", "client id", "image", "url",
    "data grid", "string value", "message", "header", "byte array", "index",
    "record", "tile map", "logger", "packet", "date", "color", "file",
    "socket", "query", "table", "cache", "token", "event", "handler",
    "session", "value list", "node", "queue", "config", "report", "label",
    "widget", "window", "channel", "cursor", "schema", "payload", "frame",
]

_STATES = ["empty", "valid", "open", "closed", "active", "ready", "dirty", "enabled"]

_CONSONANTS = "bdfgklmnprstvz"
_VOWELS = "aeiou"


def _camel(phrase: str) -> str:
    return "".join(word.capitalize() for word in phrase.split())


def _lower_camel(phrase: str) -> str:
    camel = _camel(phrase)
    return camel[0].lower() + camel[1:]


def _rare_words(count: int, rng: np.random.Generator) -> list[str]:
    """Pronounceable nonce nouns, disjoint from the common filler tokens."""
    taken = {tok for phrase in _COMMON_FILLERS for tok in phrase.split()}
    taken.update(_STATES)
    words: list[str] = []
    while len(words) < count:
        syllables = rng.integers(2, 4)
        word = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syllables)
        )
        if word not in taken:
            taken.add(word)
            words.append(word)
    return words


def _write_pair(pair_id: str, x: str, y: str) -> RawPair:
    # The subject filler appears once (method name); the object filler also
    # names the parameter type, so code retrieval keys on pattern + object.
    return RawPair(
        id=pair_id,
        code_text=(
            f"public void write{_camel(x)}To{_camel(y)}(Source source, {_camel(y)} target) "
            f"{{ target.write(source.getBytes()); target.flush(); }}"
        ),
        summary_text=f"write the {x} to the {y}",
    )


def _convert_pair(pair_id: str, x: str, y: str) -> RawPair:
    return RawPair(
        id=pair_id,
        code_text=(
            f"public {_camel(y)} convert{_camel(x)}To{_camel(y)}(Source input) "
            f"{{ return new {_camel(y)}(input.getValue()); }}"
        ),
        summary_text=f"convert the {x} to the {y}",
    )


def _set_pair(pair_id: str, x: str) -> RawPair:
    return RawPair(
        id=pair_id,
        code_text=(
            f"public void set{_camel(x)}({_camel(x)} value) "
            f"{{ this.{_lower_camel(x)} = value; }}"
        ),
        summary_text=f"this method sets the {x}",
    )


def _check_pair(pair_id: str, x: str, state: str) -> RawPair:
    return RawPair(
        id=pair_id,
        code_text=(
            f"public boolean check{_camel(x)}() "
            f"{{ return this.{_lower_camel(x)}.is{_camel(state)}(); }}"
        ),
        summary_text=f"returns true if the {x} is {state}",
    )


def _create_pair(pair_id: str, x: str) -> RawPair:
    return RawPair(
        id=pair_id,
        code_text=(
            f"public {_camel(x)} create{_camel(x)}() {{ return new {_camel(x)}(); }}"
        ),
        summary_text=f"creates a new {x}",
    )


def make_synthetic_corpus(
    n_train: int = 2000,
    n_valid: int = 100,
    n_test: int = 200,
    seed: int = 0,
    n_rare: int = 100,
    rare_train_occurrences: int = 5,
) -> dict[str, list[RawPair]]:
    """Build train/valid/test splits of templated pairs.

    Training holds common-filler pairs over five templates plus
    ``rare_train_occurrences`` short-template pairs per rare word. Test
    pairs place one rare word into a long template combined with a common
    filler, a combination never seen in training. Everything derives from
    ``seed``.
    """
    if n_rare * rare_train_occurrences > n_train // 2:
        raise ValueError(
            f"{n_rare} rare words x {rare_train_occurrences} occurrences exceeds "
            f"half of n_train={n_train}; shrink n_rare or rare_train_occurrences"
        )
    rng = np.random.default_rng(seed)
    rare = _rare_words(n_rare, rng)

    def pick(pool):
        return pool[rng.integers(len(pool))]

    train: list[RawPair] = []
    seen_summaries: set[str] = set()

    def add_unique(split: list[RawPair], builder, *args) -> bool:
        pair = builder(f"{len(split)}-{builder.__name__.strip('_')}", *args)
        if pair.summary_text in seen_summaries:
            return False
        seen_summaries.add(pair.summary_text)
        split.append(pair)
        return True

    # Rare fillers occupy the subject slot of the two long templates, each
    # paired with a handful of common objects.
    home_objects: dict[str, set[str]] = {word: set() for word in rare}
    for word in rare:
        placed = 0
        while placed < rare_train_occurrences:
            obj = pick(_COMMON_FILLERS)
            builder = _write_pair if rng.random() < 0.5 else _convert_pair
            if add_unique(train, builder, word, obj):
                home_objects[word].add(obj)
                placed += 1

    builders = [
        lambda: add_unique(train, _write_pair, pick(_COMMON_FILLERS), pick(_COMMON_FILLERS)),
        lambda: add_unique(train, _convert_pair, pick(_COMMON_FILLERS), pick(_COMMON_FILLERS)),
        lambda: add_unique(train, _set_pair, pick(_COMMON_FILLERS)),
        lambda: add_unique(train, _check_pair, pick(_COMMON_FILLERS), pick(_STATES)),
        lambda: add_unique(train, _create_pair, pick(_COMMON_FILLERS)),
    ]
    while len(train) < n_train:
        builders[rng.integers(len(builders))]()

    valid: list[RawPair] = []
    while len(valid) < n_valid:
        if rng.random() < 0.5:
            add_unique(valid, _write_pair, pick(_COMMON_FILLERS), pick(_COMMON_FILLERS))
        else:
            add_unique(valid, _convert_pair, pick(_COMMON_FILLERS), pick(_COMMON_FILLERS))

    # Held-out pairs: a rare subject with an object it never appeared with,
    # so the nearest training code shares the pattern and the object but not
    # the rare word.
    test: list[RawPair] = []
    while len(test) < n_test:
        word = rare[rng.integers(len(rare))]
        obj = pick(_COMMON_FILLERS)
        if obj in home_objects[word]:
            continue
        builder = _write_pair if rng.random() < 0.5 else _convert_pair
        add_unique(test, builder, word, obj)

    return {"train": train, "valid": valid, "test": test}
