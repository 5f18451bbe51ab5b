"""The prototype-editing model.

A bidirectional LSTM encodes the retrieved prototype summary. An edit
vector summarizes what changed between the input code and the similar code:
attention-weighted sums of the embeddings of inserted tokens (in the input
but not the similar code) and deleted tokens (vice versa), concatenated and
projected through tanh. The decoder is an attentional LSTM that receives
the edit vector concatenated to every input embedding, so edit information
conditions the whole generation.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .prototypes import TrainingInstance
from .vocab import BOS_ID, EOS_ID, PAD_ID, Vocabulary

NEG_INF = 1e9


class EmptyPrototypeError(ValueError):
    """Raised when the prototype summary has no tokens."""


@dataclass(frozen=True)
class ModelConfig:
    summary_vocab_size: int
    code_vocab_size: int
    summary_embed_dim: int = 300
    code_embed_dim: int = 300
    encoder_hidden: int = 512  # per direction
    decoder_hidden: int = 512
    edit_dim: int = 128
    attn_dim: int | None = None
    max_summary_len: int = 15
    max_code_len: int = 100
    dropout: float = 0.5
    dtype: str = "float32"

    def __post_init__(self):
        for name in (
            "summary_vocab_size",
            "code_vocab_size",
            "summary_embed_dim",
            "code_embed_dim",
            "encoder_hidden",
            "decoder_hidden",
            "edit_dim",
            "max_summary_len",
            "max_code_len",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")

    @property
    def resolved_attn_dim(self) -> int:
        return self.attn_dim if self.attn_dim is not None else self.decoder_hidden

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    @classmethod
    def desk(cls, summary_vocab_size: int, code_vocab_size: int, **overrides) -> "ModelConfig":
        """Small dimensions for CPU-scale experiments."""
        base = dict(
            summary_vocab_size=summary_vocab_size,
            code_vocab_size=code_vocab_size,
            summary_embed_dim=64,
            code_embed_dim=64,
            encoder_hidden=128,
            decoder_hidden=128,
            edit_dim=64,
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return {
            "summary_vocab_size": self.summary_vocab_size,
            "code_vocab_size": self.code_vocab_size,
            "summary_embed_dim": self.summary_embed_dim,
            "code_embed_dim": self.code_embed_dim,
            "encoder_hidden": self.encoder_hidden,
            "decoder_hidden": self.decoder_hidden,
            "edit_dim": self.edit_dim,
            "attn_dim": self.attn_dim,
            "max_summary_len": self.max_summary_len,
            "max_code_len": self.max_code_len,
            "dropout": self.dropout,
            "dtype": self.dtype,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)

    def with_dtype(self, dtype: str) -> "ModelConfig":
        return replace(self, dtype=dtype)


class ModelParameters:
    """All trainable arrays, in a fixed declaration order.

    The order of ``FIELDS`` is the serialization contract for checkpoints.
    """

    FIELDS = (
        "summary_embedding",
        "code_embedding",
        "enc_fwd_w",
        "enc_fwd_b",
        "enc_bwd_w",
        "enc_bwd_b",
        "ins_attn_w",
        "ins_attn_v",
        "del_attn_w",
        "del_attn_v",
        "edit_w",
        "edit_b",
        "dec_init_w",
        "dec_init_b",
        "dec_w",
        "dec_b",
        "dec_attn_w",
        "dec_attn_v",
        "out_w",
        "out_b",
    )

    def __init__(self, config: ModelConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        dt = config.np_dtype
        es, ec = config.summary_embed_dim, config.code_embed_dim
        h, hd = config.encoder_hidden, config.decoder_hidden
        a, z = config.resolved_attn_dim, config.edit_dim
        vs, vc = config.summary_vocab_size, config.code_vocab_size

        def weight(fan_in, fan_out):
            return ad.parameter(ad.glorot_uniform(rng, (fan_in, fan_out), dt))

        def bias(n):
            return ad.parameter(np.zeros(n, dtype=dt))

        self.summary_embedding = ad.parameter(ad.embedding_uniform(rng, (vs, es), dt))
        self.code_embedding = ad.parameter(ad.embedding_uniform(rng, (vc, ec), dt))
        self.enc_fwd_w = weight(es + h, 4 * h)
        self.enc_fwd_b = bias(4 * h)
        self.enc_bwd_w = weight(es + h, 4 * h)
        self.enc_bwd_b = bias(4 * h)
        self.ins_attn_w = weight(ec + 2 * h, a)
        self.ins_attn_v = weight(a, 1)
        self.del_attn_w = weight(ec + 2 * h, a)
        self.del_attn_v = weight(a, 1)
        self.edit_w = weight(2 * ec, z)
        self.edit_b = bias(z)
        self.dec_init_w = weight(2 * h, hd)
        self.dec_init_b = bias(hd)
        self.dec_w = weight(es + z + hd, 4 * hd)
        self.dec_b = bias(4 * hd)
        self.dec_attn_w = weight(2 * h + hd, a)
        self.dec_attn_v = weight(a, 1)
        self.out_w = weight(es + hd + 2 * h, vs)
        self.out_b = bias(vs)

    def ordered(self) -> list[tuple[str, Tensor]]:
        return [(name, getattr(self, name)) for name in self.FIELDS]

    def tensors(self) -> list[Tensor]:
        return [getattr(self, name) for name in self.FIELDS]


@dataclass
class EncoderOutput:
    """Per-position encoder states for a (possibly padded) batch."""

    h_steps: list[Tensor]  # T tensors of shape [B, 2 * encoder_hidden]
    h_final: Tensor  # [B, 2 * encoder_hidden], state at each row's last token
    mask: np.ndarray  # [B, T], 1.0 where a real token sits
    lengths: np.ndarray  # [B]

    @property
    def n_steps(self) -> int:
        return len(self.h_steps)

    def h_seq_array(self) -> np.ndarray:
        """[T, B, 2H] view of the per-position states."""
        return np.stack([t.data for t in self.h_steps], axis=0)


def _zeros(shape, dtype) -> Tensor:
    return Tensor(np.zeros(shape, dtype=dtype))


def _masked_step(new: Tensor, old: Tensor, keep: np.ndarray) -> Tensor:
    # keep is [B, 1]; padded rows carry the previous state through.
    return ad.add(ad.mul(new, keep), ad.mul(old, 1.0 - keep))


def encode_prototype_batch(
    ids: np.ndarray,
    lengths: np.ndarray,
    params: ModelParameters,
    config: ModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> EncoderOutput:
    """Run the bidirectional encoder over padded [B, T] id rows."""
    b, t_max = ids.shape
    dt = config.np_dtype
    h = config.encoder_hidden
    mask = (np.arange(t_max)[None, :] < lengths[:, None]).astype(dt)

    embeds = []
    for t in range(t_max):
        e = ad.embedding(params.summary_embedding, ids[:, t])
        embeds.append(ad.dropout(e, config.dropout, train, rng))

    fwd_states: list[Tensor] = []
    h_t, c_t = _zeros((b, h), dt), _zeros((b, h), dt)
    for t in range(t_max):
        keep = mask[:, t : t + 1]
        h_new, c_new = ad.lstm_cell(embeds[t], h_t, c_t, params.enc_fwd_w, params.enc_fwd_b)
        h_t = _masked_step(h_new, h_t, keep)
        c_t = _masked_step(c_new, c_t, keep)
        fwd_states.append(h_t)
    fwd_final = h_t

    bwd_states: list[Tensor | None] = [None] * t_max
    h_t, c_t = _zeros((b, h), dt), _zeros((b, h), dt)
    for t in range(t_max - 1, -1, -1):
        keep = mask[:, t : t + 1]
        h_new, c_new = ad.lstm_cell(embeds[t], h_t, c_t, params.enc_bwd_w, params.enc_bwd_b)
        h_t = _masked_step(h_new, h_t, keep)
        c_t = _masked_step(c_new, c_t, keep)
        bwd_states[t] = h_t

    h_steps = [ad.concat([fwd_states[t], bwd_states[t]], axis=1) for t in range(t_max)]

    # Backward-direction state at each row's last real token.
    is_last = (np.arange(t_max)[None, :] == lengths[:, None] - 1).astype(dt)
    bwd_at_last = _zeros((b, h), dt)
    for t in range(t_max):
        bwd_at_last = ad.add(bwd_at_last, ad.mul(bwd_states[t], is_last[:, t : t + 1]))
    h_final = ad.concat([fwd_final, bwd_at_last], axis=1)
    return EncoderOutput(h_steps=h_steps, h_final=h_final, mask=mask, lengths=lengths)


def encode_prototype(
    y_prime_ids: Sequence[int],
    params: ModelParameters,
    config: ModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> EncoderOutput:
    """Encode a single prototype; ids are framed with BOS/EOS internally."""
    if len(y_prime_ids) == 0:
        raise EmptyPrototypeError("prototype summary has no tokens")
    framed = np.asarray([[BOS_ID, *y_prime_ids, EOS_ID]], dtype=np.int64)
    lengths = np.asarray([framed.shape[1]], dtype=np.int64)
    return encode_prototype_batch(framed, lengths, params, config, train, rng)


def compute_diff_sets(
    x_tokens: Sequence[str], x_prime_tokens: Sequence[str]
) -> tuple[tuple[str, ...], tuple[str, ...]]:
    """De-duplicated insertion and deletion sets in lexicographic order."""
    x_set, xp_set = set(x_tokens), set(x_prime_tokens)
    return tuple(sorted(x_set - xp_set)), tuple(sorted(xp_set - x_set))


@dataclass
class EditVectorResult:
    insertion: tuple[str, ...]
    deletion: tuple[str, ...]
    alpha: np.ndarray
    beta: np.ndarray
    z: Tensor  # [edit_dim]


def _attended_embedding_sum(
    ids: np.ndarray,
    mask: np.ndarray,
    h_final: Tensor,
    attn_w: Tensor,
    attn_v: Tensor,
    params: ModelParameters,
    config: ModelConfig,
) -> tuple[Tensor, np.ndarray]:
    """Attention-weighted embedding sum over padded [B, L] token-id rows.

    Returns ([B, code_embed_dim], weights [B, L]); fully masked rows yield
    zero vectors and zero weights.
    """
    b, l = ids.shape
    dt = config.np_dtype
    if l == 0:
        return _zeros((b, config.code_embed_dim), dt), np.zeros((b, 0), dtype=dt)
    flat = ad.embedding(params.code_embedding, ids.reshape(-1))
    h_rep = ad.take_rows(h_final, np.repeat(np.arange(b), l))
    scores = ad.matmul(ad.tanh(ad.matmul(ad.concat([flat, h_rep], axis=1), attn_w)), attn_v)
    scores = ad.reshape(scores, (b, l))
    has_any = (mask.sum(axis=1, keepdims=True) > 0).astype(dt)
    weights = ad.mul(ad.softmax(ad.add(scores, (mask - 1.0) * NEG_INF), axis=1), has_any)
    weighted = ad.mul(ad.reshape(flat, (b, l, config.code_embed_dim)), ad.reshape(weights, (b, l, 1)))
    return ad.reduce_sum(weighted, axis=1), weights.data


def compute_edit_vector_batch(
    ins_ids: np.ndarray,
    ins_mask: np.ndarray,
    del_ids: np.ndarray,
    del_mask: np.ndarray,
    h_final: Tensor,
    params: ModelParameters,
    config: ModelConfig,
) -> tuple[Tensor, np.ndarray, np.ndarray]:
    """Edit vectors [B, edit_dim] for padded insertion/deletion id rows."""
    ins_half, alpha = _attended_embedding_sum(
        ins_ids, ins_mask, h_final, params.ins_attn_w, params.ins_attn_v, params, config
    )
    del_half, beta = _attended_embedding_sum(
        del_ids, del_mask, h_final, params.del_attn_w, params.del_attn_v, params, config
    )
    diff = ad.concat([ins_half, del_half], axis=1)
    z = ad.tanh(ad.add(ad.matmul(diff, params.edit_w), params.edit_b))
    return z, alpha, beta


def compute_edit_vector(
    insertion: Sequence[str],
    deletion: Sequence[str],
    h_final: Tensor,
    params: ModelParameters,
    config: ModelConfig,
    code_vocab: Vocabulary,
) -> EditVectorResult:
    """Edit vector for one instance; empty sets contribute zero halves."""
    dt = config.np_dtype
    ins_ids = np.asarray([code_vocab.encode(insertion)], dtype=np.int64)
    del_ids = np.asarray([code_vocab.encode(deletion)], dtype=np.int64)
    ins_mask = np.ones((1, len(insertion)), dtype=dt)
    del_mask = np.ones((1, len(deletion)), dtype=dt)
    z, alpha, beta = compute_edit_vector_batch(
        ins_ids, ins_mask, del_ids, del_mask, h_final, params, config
    )
    return EditVectorResult(
        insertion=tuple(insertion),
        deletion=tuple(deletion),
        alpha=alpha[0],
        beta=beta[0],
        z=ad.reshape(z, (config.edit_dim,)),
    )


@dataclass
class DecoderState:
    h: Tensor
    c: Tensor


def initial_decoder_state(
    enc: EncoderOutput, params: ModelParameters, config: ModelConfig
) -> DecoderState:
    s0 = ad.tanh(ad.add(ad.matmul(enc.h_final, params.dec_init_w), params.dec_init_b))
    b = enc.h_final.shape[0]
    return DecoderState(h=s0, c=_zeros((b, config.decoder_hidden), config.np_dtype))


def decode_step(
    y_prev_ids: np.ndarray,
    state: DecoderState,
    z: Tensor,
    enc: EncoderOutput,
    params: ModelParameters,
    config: ModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[DecoderState, Tensor, Tensor, np.ndarray]:
    """One decoder step over a batch.

    Returns (new state, context [B, 2H], logits [B, V], attention [B, T]).
    """
    b = len(y_prev_ids)
    t_max = enc.n_steps
    dt = config.np_dtype
    y_emb = ad.dropout(
        ad.embedding(params.summary_embedding, np.asarray(y_prev_ids, dtype=np.int64)),
        config.dropout,
        train,
        rng,
    )
    s_new, c_new = ad.lstm_cell(
        ad.concat([y_emb, z], axis=1), state.h, state.c, params.dec_w, params.dec_b
    )
    state = DecoderState(h=s_new, c=c_new)

    # Attention over prototype positions, laid out [T, B] so a single
    # softmax normalizes each column.
    h_flat = ad.concat(enc.h_steps, axis=0)  # [T * B, 2H]
    s_rep = ad.take_rows(s_new, np.tile(np.arange(b), t_max))
    e = ad.matmul(
        ad.tanh(ad.matmul(ad.concat([h_flat, s_rep], axis=1), params.dec_attn_w)),
        params.dec_attn_v,
    )
    e = ad.reshape(e, (t_max, b))
    eta = ad.softmax(ad.add(e, (enc.mask.T - 1.0) * NEG_INF), axis=0)
    h_stack = ad.reshape(h_flat, (t_max, b, 2 * config.encoder_hidden))
    context = ad.reduce_sum(ad.mul(h_stack, ad.reshape(eta, (t_max, b, 1))), axis=0)

    pre_out = ad.dropout(ad.concat([y_emb, s_new, context], axis=1), config.dropout, train, rng)
    logits = ad.add(ad.matmul(pre_out, params.out_w), params.out_b)
    return state, context, logits, eta.data.T.astype(dt)


@dataclass(frozen=True)
class EncodedInstance:
    """A training instance after vocabulary encoding and BOS/EOS framing."""

    y_prime: tuple[int, ...]  # BOS + prototype summary ids + EOS
    y_in: tuple[int, ...]  # BOS + target summary ids
    y_out: tuple[int, ...]  # target summary ids + EOS
    ins_ids: tuple[int, ...]
    del_ids: tuple[int, ...]


def encode_instance(
    instance: TrainingInstance, code_vocab: Vocabulary, summary_vocab: Vocabulary
) -> EncodedInstance:
    insertion, deletion = compute_diff_sets(instance.x, instance.x_prime)
    y_ids = summary_vocab.encode(instance.y)
    return EncodedInstance(
        y_prime=tuple(summary_vocab.encode(instance.y_prime, add_bos_eos=True)),
        y_in=(BOS_ID, *y_ids),
        y_out=(*y_ids, EOS_ID),
        ins_ids=tuple(code_vocab.encode(insertion)),
        del_ids=tuple(code_vocab.encode(deletion)),
    )


def _pad_rows(rows: Sequence[Sequence[int]], dtype) -> tuple[np.ndarray, np.ndarray]:
    width = max((len(r) for r in rows), default=0)
    ids = np.full((len(rows), width), PAD_ID, dtype=np.int64)
    mask = np.zeros((len(rows), width), dtype=dtype)
    for i, row in enumerate(rows):
        ids[i, : len(row)] = row
        mask[i, : len(row)] = 1.0
    return ids, mask


def batch_forward_loss(
    batch: Sequence[EncodedInstance],
    params: ModelParameters,
    config: ModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Teacher-forced loss: mean over instances of each instance's mean
    target-token negative log-likelihood."""
    b = len(batch)
    if b == 0:
        raise ValueError("empty batch")
    dt = config.np_dtype

    proto_ids, _ = _pad_rows([inst.y_prime for inst in batch], dt)
    proto_lengths = np.asarray([len(inst.y_prime) for inst in batch], dtype=np.int64)
    enc = encode_prototype_batch(proto_ids, proto_lengths, params, config, train, rng)

    ins_ids, ins_mask = _pad_rows([inst.ins_ids for inst in batch], dt)
    del_ids, del_mask = _pad_rows([inst.del_ids for inst in batch], dt)
    z, _, _ = compute_edit_vector_batch(
        ins_ids, ins_mask, del_ids, del_mask, enc.h_final, params, config
    )

    y_in, keep = _pad_rows([inst.y_in for inst in batch], dt)
    y_out, _ = _pad_rows([inst.y_out for inst in batch], dt)
    n_tokens = np.asarray([len(inst.y_out) for inst in batch], dtype=dt)

    state = initial_decoder_state(enc, params, config)
    loss = Tensor(np.zeros((), dtype=dt))
    for t in range(y_in.shape[1]):
        state, _, logits, _ = decode_step(y_in[:, t], state, z, enc, params, config, train, rng)
        nll = ad.nll_rows(logits, y_out[:, t])
        weight = keep[:, t] / (n_tokens * b)
        loss = ad.add(loss, ad.reduce_sum(ad.mul(nll, weight)))
    return loss


def forward_loss(
    instance: EncodedInstance,
    params: ModelParameters,
    config: ModelConfig,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> Tensor:
    """Loss of a single instance (mean NLL over its target tokens)."""
    return batch_forward_loss([instance], params, config, train, rng)
