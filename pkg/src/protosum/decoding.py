"""Beam-search decoding and the retrieve-encode-edit-decode pipeline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .bm25 import InvertedIndex
from .corpus import DatasetSplit
from .model import (
    DecoderState,
    EncoderOutput,
    ModelConfig,
    ModelParameters,
    compute_diff_sets,
    compute_edit_vector_batch,
    decode_step,
    encode_prototype,
    initial_decoder_state,
)
from .prototypes import retrieve_prototype
from .training import Checkpoint
from .vocab import BOS_ID, EOS_ID


@dataclass(frozen=True)
class BeamHypothesis:
    """A partial or finished decode: emitted ids and cumulative log-prob."""

    ids: tuple[int, ...]
    log_prob: float
    state: object | None
    finished: bool


@dataclass(frozen=True)
class DecodedSequence:
    ids: tuple[int, ...]  # emitted tokens, including a trailing EOS if any
    log_prob: float
    score: float  # log_prob / number of emitted tokens

    @property
    def content_ids(self) -> tuple[int, ...]:
        if self.ids and self.ids[-1] == EOS_ID:
            return self.ids[:-1]
        return self.ids


StepFn = Callable[[int, object], tuple[np.ndarray, object]]


def beam_search_core(
    step_fn: StepFn,
    initial_state: object,
    beam_size: int,
    max_len: int,
    bos_id: int = BOS_ID,
    eos_id: int = EOS_ID,
) -> list[DecodedSequence]:
    """Breadth-limited best-first decoding over an arbitrary step function.

    ``step_fn(prev_token_id, state) -> (log_probs, new_state)`` scores the
    next token. Hypotheses that emit EOS are set aside and compete with the
    survivors at the end; final ranking divides each cumulative log-prob by
    the number of emitted tokens. Ties break by parent order then token id,
    so decoding is deterministic and beam size 1 reproduces greedy argmax.
    """
    if beam_size < 1:
        raise ValueError(f"beam_size must be >= 1, got {beam_size}")
    if max_len < 1:
        raise ValueError(f"max_len must be >= 1, got {max_len}")
    live = [BeamHypothesis(ids=(), log_prob=0.0, state=initial_state, finished=False)]
    finished: list[BeamHypothesis] = []
    for _ in range(max_len):
        candidates = []
        for hyp_idx, hyp in enumerate(live):
            prev = hyp.ids[-1] if hyp.ids else bos_id
            log_probs, new_state = step_fn(prev, hyp.state)
            top = np.argsort(-log_probs, kind="stable")[:beam_size]
            for token in top:
                candidates.append(
                    (hyp.log_prob + float(log_probs[token]), hyp_idx, int(token), new_state)
                )
        candidates.sort(key=lambda c: (-c[0], c[1], c[2]))
        next_live = []
        for log_prob, hyp_idx, token, state in candidates[:beam_size]:
            ids = live[hyp_idx].ids + (token,)
            if token == eos_id:
                finished.append(BeamHypothesis(ids, log_prob, None, True))
            else:
                next_live.append(BeamHypothesis(ids, log_prob, state, False))
        live = next_live
        if not live:
            break
    finished.extend(
        BeamHypothesis(hyp.ids, hyp.log_prob, None, True) for hyp in live
    )
    ranked = sorted(
        finished, key=lambda h: (-h.log_prob / len(h.ids), h.ids)
    )
    return [
        DecodedSequence(ids=h.ids, log_prob=h.log_prob, score=h.log_prob / len(h.ids))
        for h in ranked
    ]


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    return z - np.log(np.exp(z).sum())


def make_step_fn(
    enc: EncoderOutput, z: Tensor, params: ModelParameters, config: ModelConfig
) -> tuple[StepFn, DecoderState]:
    """Bind the decoder to a single encoded prototype and edit vector."""

    def step_fn(prev_id: int, state: DecoderState):
        with ad.no_grad():
            new_state, _, logits, _ = decode_step(
                np.asarray([prev_id]), state, z, enc, params, config, train=False
            )
        return _log_softmax(logits.data[0].astype(np.float64)), new_state

    return step_fn, initial_decoder_state(enc, params, config)


def beam_search(
    enc: EncoderOutput,
    z: Tensor,
    params: ModelParameters,
    config: ModelConfig,
    beam_size: int = 10,
    max_len: int = 15,
) -> list[DecodedSequence]:
    """Beam-search the summary decoder for one encoded prototype."""
    step_fn, initial_state = make_step_fn(enc, z, params, config)
    return beam_search_core(step_fn, initial_state, beam_size, max_len)


@dataclass(frozen=True)
class GenerationResult:
    tokens: tuple[str, ...]
    proto_id: str
    score: float
    insertion: tuple[str, ...]
    deletion: tuple[str, ...]
    z_norm: float


def generate(
    code_tokens: Sequence[str],
    code_index: InvertedIndex,
    train_split: DatasetSplit,
    checkpoint: Checkpoint,
    beam_size: int = 10,
    max_len: int | None = None,
    exclude_id: str | None = None,
) -> GenerationResult:
    """Retrieve a prototype, compute the edit vector, and decode a summary."""
    config = checkpoint.model_config
    params = checkpoint.params
    if max_len is None:
        max_len = config.max_summary_len
    proto_id, proto_summary = retrieve_prototype(
        code_index, train_split, code_tokens, exclude_id=exclude_id
    )
    x_prime = train_split.by_id[proto_id].code_tokens
    insertion, deletion = compute_diff_sets(code_tokens, x_prime)
    with ad.no_grad():
        enc = encode_prototype(
            checkpoint.summary_vocab.encode(proto_summary), params, config, train=False
        )
        dt = config.np_dtype
        ins_ids = np.asarray([checkpoint.code_vocab.encode(insertion)], dtype=np.int64)
        del_ids = np.asarray([checkpoint.code_vocab.encode(deletion)], dtype=np.int64)
        z, _, _ = compute_edit_vector_batch(
            ins_ids.reshape(1, -1),
            np.ones((1, len(insertion)), dtype=dt),
            del_ids.reshape(1, -1),
            np.ones((1, len(deletion)), dtype=dt),
            enc.h_final,
            params,
            config,
        )
    best = beam_search(enc, z, params, config, beam_size=beam_size, max_len=max_len)[0]
    tokens = checkpoint.summary_vocab.decode_output(best.ids)
    return GenerationResult(
        tokens=tuple(tokens),
        proto_id=proto_id,
        score=best.score,
        insertion=insertion,
        deletion=deletion,
        z_norm=float(np.linalg.norm(z.data)),
    )
