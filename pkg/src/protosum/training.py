"""Training loop: Adam with per-epoch decay, clipping, early stop, checkpoints."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autodiff as ad
from .model import (
    EncodedInstance,
    ModelConfig,
    ModelParameters,
    batch_forward_loss,
    encode_instance,
)
from .optim import Adam, clip_grad_norm, global_grad_norm
from .prototypes import TrainingInstance
from .vocab import Vocabulary

CHECKPOINT_MAGIC = b"EDSCKP1"
CHECKPOINT_VERSION = 1


class EmptyDatasetError(ValueError):
    pass


class VersionMismatchError(ValueError):
    pass


class CorruptFileError(ValueError):
    pass


class NonFiniteLossError(RuntimeError):
    def __init__(self, epoch: int, batch: int, grad_norm: float):
        super().__init__(
            f"non-finite loss at epoch {epoch}, batch {batch} (grad norm {grad_norm})"
        )
        self.epoch = epoch
        self.batch = batch
        self.grad_norm = grad_norm


@dataclass(frozen=True)
class TrainerConfig:
    batch_size: int = 512
    initial_lr: float = 0.001
    lr_decay: float = 0.95
    clip_norm: float = 5.0
    max_epochs: int = 30
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ValueError("batch_size, max_epochs, and patience must be >= 1")
        if not 0.0 < self.lr_decay <= 1.0:
            raise ValueError(f"lr_decay must be in (0, 1], got {self.lr_decay}")

    @classmethod
    def desk(cls, **overrides) -> "TrainerConfig":
        base = dict(batch_size=32)
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return {
            "batch_size": self.batch_size,
            "initial_lr": self.initial_lr,
            "lr_decay": self.lr_decay,
            "clip_norm": self.clip_norm,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TrainerConfig":
        return cls(**d)


class EarlyStopTracker:
    """Stop after ``patience`` consecutive epochs without strict improvement."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best_loss = math.inf
        self.best_epoch: int | None = None
        self.epochs_since_best = 0

    def update(self, epoch: int, loss: float) -> bool:
        if loss < self.best_loss:
            self.best_loss = loss
            self.best_epoch = epoch
            self.epochs_since_best = 0
            return True
        self.epochs_since_best += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.epochs_since_best >= self.patience


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    lr: float
    train_loss: float
    valid_loss: float


@dataclass
class Checkpoint:
    """Everything needed to resume or generate: config, weights, optimizer."""

    model_config: ModelConfig
    params: ModelParameters
    adam_m: list[np.ndarray]
    adam_v: list[np.ndarray]
    adam_t: int
    adam_lr: float
    epoch: int
    best_valid_loss: float
    code_vocab: Vocabulary
    summary_vocab: Vocabulary


@dataclass
class TrainResult:
    checkpoint: Checkpoint
    history: list[EpochLog] = field(default_factory=list)


def _make_batches(
    encoded: list[EncodedInstance], order: np.ndarray, batch_size: int
) -> list[list[EncodedInstance]]:
    # Bucket by target length within the shuffled order to limit padding.
    by_length = sorted(order.tolist(), key=lambda i: len(encoded[i].y_out))
    return [
        [encoded[i] for i in by_length[start : start + batch_size]]
        for start in range(0, len(by_length), batch_size)
    ]


def _mean_loss(
    batches: Sequence[Sequence[EncodedInstance]],
    params: ModelParameters,
    config: ModelConfig,
) -> float:
    total = 0.0
    count = 0
    with ad.no_grad():
        for batch in batches:
            loss = batch_forward_loss(batch, params, config, train=False)
            total += loss.item() * len(batch)
            count += len(batch)
    return total / count


def evaluate_loss(
    instances: Sequence[TrainingInstance],
    checkpoint: Checkpoint,
    batch_size: int = 32,
) -> float:
    """Mean per-instance loss with dropout disabled."""
    encoded = [
        encode_instance(inst, checkpoint.code_vocab, checkpoint.summary_vocab)
        for inst in instances
    ]
    order = np.arange(len(encoded))
    batches = _make_batches(encoded, order, batch_size)
    return _mean_loss(batches, checkpoint.params, checkpoint.model_config)


def train(
    train_instances: Sequence[TrainingInstance],
    valid_instances: Sequence[TrainingInstance],
    model_config: ModelConfig,
    trainer_config: TrainerConfig,
    code_vocab: Vocabulary,
    summary_vocab: Vocabulary,
    progress: Callable[[EpochLog], None] | None = None,
) -> TrainResult:
    """Train to the best-validation checkpoint.

    Each epoch reshuffles from the run seed, decays the learning rate by
    ``lr_decay``, and evaluates the validation loss with dropout disabled;
    training stops at ``max_epochs`` or after ``patience`` non-improving
    epochs, returning the parameters from the best epoch.
    """
    if not train_instances or not valid_instances:
        raise EmptyDatasetError("need non-empty training and validation instance sets")
    encoded_train = [encode_instance(i, code_vocab, summary_vocab) for i in train_instances]
    encoded_valid = [encode_instance(i, code_vocab, summary_vocab) for i in valid_instances]
    valid_batches = _make_batches(
        encoded_valid, np.arange(len(encoded_valid)), trainer_config.batch_size
    )

    params = ModelParameters(model_config, seed=trainer_config.seed)
    tensors = params.tensors()
    adam = Adam(tensors, lr=trainer_config.initial_lr)
    tracker = EarlyStopTracker(trainer_config.patience)
    history: list[EpochLog] = []
    best: dict | None = None

    for epoch in range(1, trainer_config.max_epochs + 1):
        adam.lr = trainer_config.initial_lr * trainer_config.lr_decay ** (epoch - 1)
        rng = np.random.default_rng([trainer_config.seed, epoch])
        order = rng.permutation(len(encoded_train))
        total = 0.0
        for batch_idx, batch in enumerate(
            _make_batches(encoded_train, order, trainer_config.batch_size)
        ):
            ad.zero_grads(tensors)
            loss = batch_forward_loss(batch, params, model_config, train=True, rng=rng)
            loss_value = loss.item()
            ad.backward(loss)
            norm = global_grad_norm(tensors)
            if not (math.isfinite(loss_value) and math.isfinite(norm)):
                raise NonFiniteLossError(epoch, batch_idx, norm)
            clip_grad_norm(tensors, trainer_config.clip_norm)
            adam.step()
            total += loss_value * len(batch)
        train_loss = total / len(encoded_train)
        valid_loss = _mean_loss(valid_batches, params, model_config)
        log = EpochLog(epoch=epoch, lr=adam.lr, train_loss=train_loss, valid_loss=valid_loss)
        history.append(log)
        if progress is not None:
            progress(log)
        if tracker.update(epoch, valid_loss):
            best = {
                "arrays": [t.data.copy() for t in tensors],
                "adam_m": [m.copy() for m in adam.m],
                "adam_v": [v.copy() for v in adam.v],
                "adam_t": adam.t,
                "adam_lr": adam.lr,
                "epoch": epoch,
                "valid_loss": valid_loss,
            }
        if tracker.should_stop:
            break

    assert best is not None
    for tensor, saved in zip(tensors, best["arrays"]):
        tensor.data = saved
    checkpoint = Checkpoint(
        model_config=model_config,
        params=params,
        adam_m=best["adam_m"],
        adam_v=best["adam_v"],
        adam_t=best["adam_t"],
        adam_lr=best["adam_lr"],
        epoch=best["epoch"],
        best_valid_loss=best["valid_loss"],
        code_vocab=code_vocab,
        summary_vocab=summary_vocab,
    )
    return TrainResult(checkpoint=checkpoint, history=history)


# ---------------------------------------------------------------------------
# Checkpoint files
#
# Layout: magic, version, SHA-256 of the remainder, a canonical JSON header
# (config, vocabularies, scalars), then raw little-endian float32 blobs in
# parameter declaration order followed by Adam first and second moments.
# float64 runs quantize to float32 on save.


def _header_blob(checkpoint: Checkpoint) -> bytes:
    header = {
        "model_config": checkpoint.model_config.to_dict(),
        "epoch": checkpoint.epoch,
        "best_valid_loss": checkpoint.best_valid_loss,
        "adam_t": checkpoint.adam_t,
        "adam_lr": checkpoint.adam_lr,
        "code_vocab": list(checkpoint.code_vocab.id_to_token),
        "summary_vocab": list(checkpoint.summary_vocab.id_to_token),
    }
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    header = _header_blob(checkpoint)
    blobs = bytearray()
    arrays = [t.data for t in checkpoint.params.tensors()]
    arrays += checkpoint.adam_m + checkpoint.adam_v
    for array in arrays:
        blobs += array.astype("<f4").tobytes()
    payload = struct.pack("<I", len(header)) + header + bytes(blobs)
    digest = hashlib.sha256(payload).digest()
    Path(path).write_bytes(
        CHECKPOINT_MAGIC + struct.pack("<I", CHECKPOINT_VERSION) + digest + payload
    )


def load_checkpoint(path: str | Path, expected_config: ModelConfig | None = None) -> Checkpoint:
    data = Path(path).read_bytes()
    prefix = len(CHECKPOINT_MAGIC) + 4 + 32
    if len(data) < prefix or data[:7] != CHECKPOINT_MAGIC:
        raise VersionMismatchError(f"{path}: not a checkpoint file")
    (version,) = struct.unpack_from("<I", data, 7)
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    digest = data[11:43]
    payload = data[43:]
    if hashlib.sha256(payload).digest() != digest:
        raise CorruptFileError(f"{path}: checksum mismatch")
    (header_len,) = struct.unpack_from("<I", payload, 0)
    header_end = 4 + header_len
    if header_end > len(payload):
        raise CorruptFileError(f"{path}: truncated header")
    header = json.loads(payload[4:header_end].decode("utf-8"))
    config = ModelConfig.from_dict(header["model_config"])
    if expected_config is not None and expected_config.to_dict() != config.to_dict():
        raise VersionMismatchError(f"{path}: checkpoint config does not match the expected config")

    params = ModelParameters(config, seed=0)
    dtype = config.np_dtype
    offset = header_end
    arrays: list[np.ndarray] = []
    for tensor in params.tensors():
        size = tensor.data.size * 4
        if offset + size > len(payload):
            raise CorruptFileError(f"{path}: truncated parameter blob")
        flat = np.frombuffer(payload, dtype="<f4", count=tensor.data.size, offset=offset)
        arrays.append(flat.reshape(tensor.data.shape).astype(dtype))
        offset += size
    moments: list[np.ndarray] = []
    for tensor in params.tensors() * 2:
        size = tensor.data.size * 4
        if offset + size > len(payload):
            raise CorruptFileError(f"{path}: truncated optimizer blob")
        flat = np.frombuffer(payload, dtype="<f4", count=tensor.data.size, offset=offset)
        moments.append(flat.reshape(tensor.data.shape).astype(dtype))
        offset += size
    if offset != len(payload):
        raise CorruptFileError(f"{path}: trailing bytes")
    for tensor, array in zip(params.tensors(), arrays):
        tensor.data = array
    n = len(arrays)
    return Checkpoint(
        model_config=config,
        params=params,
        adam_m=moments[:n],
        adam_v=moments[n:],
        adam_t=header["adam_t"],
        adam_lr=header["adam_lr"],
        epoch=header["epoch"],
        best_valid_loss=header["best_valid_loss"],
        code_vocab=Vocabulary(header["code_vocab"]),
        summary_vocab=Vocabulary(header["summary_vocab"]),
    )
