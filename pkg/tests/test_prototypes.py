import numpy as np
import pytest

from protosum.bm25 import build_index
from protosum.corpus import DatasetSplit, TokenizedPair
from protosum.prototypes import (
    EmptyIndexError,
    build_eval_instances,
    build_training_instances,
    jaccard,
    load_instances,
    retrieve_prototype,
    save_instances,
)

from conftest import random_split
from test_bm25 import brute_force_scores


# ---------------------------------------------------------------------------
# Jaccard


@pytest.mark.parametrize(
    "a,b,expected",
    [
        (["a", "b", "c"], ["a", "b", "c"], 1.0),
        (["a", "b", "c"], ["d", "e"], 0.0),
        (["a", "b", "c"], ["b", "c", "d"], 0.5),
        ([], [], 0.0),
        (["a", "a", "b"], ["a", "b", "b"], 1.0),  # bag duplicates collapse
    ],
)
def test_jaccard_values(a, b, expected):
    assert jaccard(a, b) == pytest.approx(expected)


def test_jaccard_symmetric_and_identity():
    rng = np.random.default_rng(2)
    pool = ["u", "v", "w", "x", "y"]
    for _ in range(100):
        a = [pool[rng.integers(5)] for _ in range(rng.integers(0, 8))]
        b = [pool[rng.integers(5)] for _ in range(rng.integers(0, 8))]
        assert jaccard(a, b) == pytest.approx(jaccard(b, a))
        assert (jaccard(a, b) == 1.0) == (set(a) == set(b) and bool(a))


# ---------------------------------------------------------------------------
# Training-instance construction


def brute_force_instances(split, top_k=20, j_min=0.3, j_max=0.7):
    """Enumerate instances by exhaustive scoring plus direct Jaccard filtering."""
    out = []
    for pair in split:
        scores = brute_force_scores(split, list(pair.summary_tokens), field="summary")
        scores.pop(pair.id, None)
        ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
        for doc_id, _ in ranked:
            candidate = split.by_id[doc_id]
            j = jaccard(pair.summary_tokens, candidate.summary_tokens)
            if j_min <= j <= j_max:
                out.append((pair.id, doc_id))
    return out


def test_instances_match_brute_force(small_template_split):
    split = small_template_split
    index = build_index(split, "summary")
    instances = build_training_instances(split, index)
    assert len(instances) > 0
    assert [(i.src_id, i.proto_id) for i in instances] == brute_force_instances(split)


def test_instances_satisfy_window_and_self_exclusion(small_template_split):
    split = small_template_split
    index = build_index(split, "summary")
    for inst in build_training_instances(split, index):
        assert inst.src_id != inst.proto_id
        assert 0.3 <= jaccard(inst.y, inst.y_prime) <= 0.7
        assert inst.x == split.by_id[inst.src_id].code_tokens
        assert inst.y_prime == split.by_id[inst.proto_id].summary_tokens


def test_near_identical_and_disjoint_candidates_filtered():
    pairs = [
        TokenizedPair("a", ("c",), ("open", "the", "file")),
        TokenizedPair("b", ("c",), ("open", "the", "file")),  # J = 1.0 vs a
        TokenizedPair("c", ("c",), ("totally", "different", "words")),  # J = 0.0 vs a
        TokenizedPair("d", ("c",), ("open", "the", "socket", "now")),  # J = 0.4 vs a
    ]
    split = DatasetSplit("train", pairs)
    index = build_index(split, "summary")
    instances = build_training_instances(split, index)
    partners = {i.proto_id for i in instances if i.src_id == "a"}
    assert partners == {"d"}


def test_code_field_index_switches_query_side(small_template_split):
    split = small_template_split
    index = build_index(split, "code")
    instances = build_training_instances(split, index)
    # The Jaccard window still applies to summaries.
    for inst in instances:
        assert 0.3 <= jaccard(inst.y, inst.y_prime) <= 0.7


# ---------------------------------------------------------------------------
# Prototype retrieval


def test_exact_code_match_wins():
    rng = np.random.default_rng(8)
    split = random_split(rng, 20)
    index = build_index(split, "code")
    target = split.pairs[7]
    proto_id, summary = retrieve_prototype(index, split, target.code_tokens)
    assert proto_id == target.id
    assert summary == target.summary_tokens


def test_tie_break_ascending_id():
    pairs = [
        TokenizedPair("b", ("same", "code"), ("two",)),
        TokenizedPair("a", ("same", "code"), ("one",)),
        TokenizedPair("c", ("other", "words"), ("three",)),
    ]
    split = DatasetSplit("train", pairs)
    index = build_index(split, "code")
    proto_id, _ = retrieve_prototype(index, split, ["same", "code"])
    assert proto_id == "a"


def test_matches_brute_force_nearest_neighbor():
    rng = np.random.default_rng(55)
    split = random_split(rng, 50)
    index = build_index(split, "code")
    for _ in range(20):
        query = [
            split.pairs[rng.integers(50)].code_tokens[0],
            split.pairs[rng.integers(50)].code_tokens[-1],
        ]
        proto_id, _ = retrieve_prototype(index, split, query)
        oracle = brute_force_scores(split, query)
        expected = min(oracle.items(), key=lambda kv: (-kv[1], kv[0]))[0]
        assert proto_id == expected


def test_fallback_when_nothing_matches():
    pairs = [TokenizedPair("m", ("x",), ("sx",)), TokenizedPair("k", ("y",), ("sy",))]
    split = DatasetSplit("train", pairs)
    index = build_index(split, "code")
    proto_id, _ = retrieve_prototype(index, split, ["unseen"])
    assert proto_id == "k"  # first by ascending id
    with pytest.raises(EmptyIndexError):
        retrieve_prototype(index, DatasetSplit("empty", []), ["unseen"])


def test_eval_instances_one_per_pair(small_template_split):
    split = small_template_split
    query = DatasetSplit("valid", split.pairs[:10])
    index = build_index(split, "code")
    instances = build_eval_instances(query, index, split)
    assert len(instances) == 10
    for inst in instances:
        assert inst.src_id != inst.proto_id  # self excluded even within-corpus


def test_instances_file_roundtrip(tmp_path, small_template_split):
    split = small_template_split
    index = build_index(split, "summary")
    instances = build_training_instances(split, index)[:25]
    path = tmp_path / "instances.jsonl"
    save_instances(instances, path)
    assert load_instances(path) == instances
