"""Reverse-mode automatic differentiation over dense numpy arrays.

Every operation records its inputs on the implicit tape (the graph of
parent links) whenever gradients are enabled and some input requires them.
``backward`` walks that graph once in reverse topological order and
accumulates gradients into ``.grad``; callers zero gradients explicitly
between steps.
"""

from __future__ import annotations

import contextlib
from typing import Callable, Sequence

import numpy as np


class ShapeMismatchError(ValueError):
    pass


class NotScalarError(ValueError):
    pass


class IndexOutOfVocabError(IndexError):
    pass


_grad_enabled = True


@contextlib.contextmanager
def no_grad():
    """Disable graph recording, e.g. for validation and generation."""
    global _grad_enabled
    previous = _grad_enabled
    _grad_enabled = False
    try:
        yield
    finally:
        _grad_enabled = previous


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward")

    def __init__(
        self,
        data,
        requires_grad: bool = False,
        parents: tuple["Tensor", ...] = (),
        backward: Callable[[np.ndarray], None] | None = None,
    ):
        self.data = np.asarray(data)
        self.grad: np.ndarray | None = None
        self.requires_grad = requires_grad
        self._parents = parents
        self._backward = backward

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    def item(self) -> float:
        return float(self.data)

    def accumulate(self, grad: np.ndarray) -> None:
        if self.grad is None:
            self.grad = np.zeros_like(self.data)
        self.grad += grad

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


def parameter(data) -> Tensor:
    return Tensor(np.asarray(data), requires_grad=True)


def _result(data, parents: Sequence[Tensor], backward) -> Tensor:
    if _grad_enabled and any(p.requires_grad for p in parents):
        return Tensor(data, requires_grad=True, parents=tuple(parents), backward=backward)
    return Tensor(data)


def _as_tensor(x, like: Tensor) -> Tensor:
    if isinstance(x, Tensor):
        return x
    return Tensor(np.asarray(x, dtype=like.dtype))


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    """Sum a gradient back down to the shape it was broadcast from."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, size in enumerate(shape):
        if size == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


# ---------------------------------------------------------------------------
# Primitive operations


def matmul(a: Tensor, b: Tensor) -> Tensor:
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeMismatchError(f"matmul of {a.shape} and {b.shape}")
    out_data = a.data @ b.data

    def backward(g: np.ndarray):
        if a.requires_grad:
            a.accumulate(g @ b.data.T)
        if b.requires_grad:
            b.accumulate(a.data.T @ g)

    return _result(out_data, (a, b), backward)


def add(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    try:
        out_data = a.data + b.data
    except ValueError as exc:
        raise ShapeMismatchError(f"add of {a.shape} and {b.shape}") from exc

    def backward(g: np.ndarray):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g, b.shape))

    return _result(out_data, (a, b), backward)


def sub(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    try:
        out_data = a.data - b.data
    except ValueError as exc:
        raise ShapeMismatchError(f"sub of {a.shape} and {b.shape}") from exc

    def backward(g: np.ndarray):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g, a.shape))
        if b.requires_grad:
            b.accumulate(-_unbroadcast(g, b.shape))

    return _result(out_data, (a, b), backward)


def mul(a: Tensor, b) -> Tensor:
    b = _as_tensor(b, a)
    try:
        out_data = a.data * b.data
    except ValueError as exc:
        raise ShapeMismatchError(f"mul of {a.shape} and {b.shape}") from exc

    def backward(g: np.ndarray):
        if a.requires_grad:
            a.accumulate(_unbroadcast(g * b.data, a.shape))
        if b.requires_grad:
            b.accumulate(_unbroadcast(g * a.data, b.shape))

    return _result(out_data, (a, b), backward)


def concat(tensors: Sequence[Tensor], axis: int) -> Tensor:
    out_data = np.concatenate([t.data for t in tensors], axis=axis)
    sizes = [t.shape[axis] for t in tensors]
    offsets = np.cumsum([0, *sizes])

    def backward(g: np.ndarray):
        for t, lo, hi in zip(tensors, offsets[:-1], offsets[1:]):
            if t.requires_grad:
                index = [slice(None)] * g.ndim
                index[axis] = slice(lo, hi)
                t.accumulate(g[tuple(index)])

    return _result(out_data, tuple(tensors), backward)


def narrow(t: Tensor, axis: int, start: int, length: int) -> Tensor:
    index = [slice(None)] * t.data.ndim
    index[axis] = slice(start, start + length)
    index = tuple(index)
    out_data = t.data[index]

    def backward(g: np.ndarray):
        if t.requires_grad:
            full = np.zeros_like(t.data)
            full[index] = g
            t.accumulate(full)

    return _result(out_data, (t,), backward)


def tanh(t: Tensor) -> Tensor:
    out_data = np.tanh(t.data)

    def backward(g: np.ndarray):
        if t.requires_grad:
            t.accumulate(g * (1.0 - out_data * out_data))

    return _result(out_data, (t,), backward)


def sigmoid(t: Tensor) -> Tensor:
    # Stable on both tails: exp of a non-positive argument only.
    x = t.data
    out_data = np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))
    out_data = out_data.astype(t.dtype, copy=False)

    def backward(g: np.ndarray):
        if t.requires_grad:
            t.accumulate(g * out_data * (1.0 - out_data))

    return _result(out_data, (t,), backward)


def softmax(t: Tensor, axis: int = -1) -> Tensor:
    z = t.data - t.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    out_data = e / e.sum(axis=axis, keepdims=True)

    def backward(g: np.ndarray):
        if t.requires_grad:
            inner = (g * out_data).sum(axis=axis, keepdims=True)
            t.accumulate(out_data * (g - inner))

    return _result(out_data, (t,), backward)


def embedding(table: Tensor, ids) -> Tensor:
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IndexOutOfVocabError(
            f"ids outside [0, {table.shape[0]}): min {ids.min()}, max {ids.max()}"
        )
    out_data = table.data[ids]

    def backward(g: np.ndarray):
        if table.requires_grad:
            if table.grad is None:
                table.grad = np.zeros_like(table.data)
            np.add.at(table.grad, ids, g)

    return _result(out_data, (table,), backward)


def take_rows(t: Tensor, indices) -> Tensor:
    """Gather rows of a 2D tensor by integer index (rows may repeat)."""
    indices = np.asarray(indices, dtype=np.int64)
    out_data = t.data[indices]

    def backward(g: np.ndarray):
        if t.requires_grad:
            if t.grad is None:
                t.grad = np.zeros_like(t.data)
            np.add.at(t.grad, indices, g)

    return _result(out_data, (t,), backward)


def reshape(t: Tensor, shape: tuple[int, ...]) -> Tensor:
    out_data = t.data.reshape(shape)

    def backward(g: np.ndarray):
        if t.requires_grad:
            t.accumulate(g.reshape(t.shape))

    return _result(out_data, (t,), backward)


def dropout(t: Tensor, p: float, train: bool, rng: np.random.Generator | None = None) -> Tensor:
    """Inverted dropout: identity when ``p == 0`` or ``train`` is false."""
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    if not train or p == 0.0:
        return t
    if rng is None:
        raise ValueError("training-mode dropout needs an rng")
    mask = (rng.random(t.shape) >= p).astype(t.dtype) / np.asarray(1.0 - p, dtype=t.dtype)

    def backward(g: np.ndarray):
        if t.requires_grad:
            t.accumulate(g * mask)

    return _result(t.data * mask, (t,), backward)


def reduce_sum(t: Tensor, axis: int | None = None, keepdims: bool = False) -> Tensor:
    out_data = t.data.sum(axis=axis, keepdims=keepdims)

    def backward(g: np.ndarray):
        if t.requires_grad:
            if axis is None:
                t.accumulate(np.broadcast_to(g, t.shape).copy())
            else:
                expanded = g if keepdims else np.expand_dims(g, axis)
                t.accumulate(np.broadcast_to(expanded, t.shape).copy())

    return _result(out_data, (t,), backward)


def reduce_mean(t: Tensor, axis: int | None = None) -> Tensor:
    count = t.data.size if axis is None else t.shape[axis]
    return mul(reduce_sum(t, axis=axis), np.asarray(1.0 / count, dtype=t.dtype))


def nll_rows(logits: Tensor, targets) -> Tensor:
    """Per-row negative log-likelihood of the target column, [N, V] -> [N]."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.data.ndim != 2 or targets.shape != (logits.shape[0],):
        raise ShapeMismatchError(f"nll_rows of {logits.shape} with targets {targets.shape}")
    if targets.size and (targets.min() < 0 or targets.max() >= logits.shape[1]):
        raise IndexOutOfVocabError(
            f"targets outside [0, {logits.shape[1]}): min {targets.min()}, max {targets.max()}"
        )
    z = logits.data - logits.data.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(targets.shape[0])
    out_data = lse - z[rows, targets]

    def backward(g: np.ndarray):
        if logits.requires_grad:
            probs = np.exp(z - lse[:, None])
            probs[rows, targets] -= 1.0
            logits.accumulate(probs * g[:, None])

    return _result(out_data, (logits,), backward)


def cross_entropy(logits: Tensor, targets, pad_mask=None) -> Tensor:
    """Mean NLL over non-pad positions of a [T, V] logit matrix.

    ``pad_mask`` marks positions to ignore (True = padding); ``None`` keeps
    every position.
    """
    nll = nll_rows(logits, targets)
    if pad_mask is None:
        return reduce_mean(nll)
    keep = (~np.asarray(pad_mask, dtype=bool)).astype(logits.dtype)
    count = keep.sum()
    if count == 0:
        raise ValueError("cross_entropy over a fully padded sequence")
    return mul(reduce_sum(mul(nll, keep)), np.asarray(1.0 / count, dtype=logits.dtype))


def lstm_cell(
    x: Tensor, h_prev: Tensor, c_prev: Tensor, w: Tensor, b: Tensor
) -> tuple[Tensor, Tensor]:
    """One LSTM step with gate order i, f, g, o in the packed weight matrix.

    ``w`` is [input_dim + hidden, 4 * hidden]; ``b`` is [4 * hidden].
    """
    hidden = h_prev.shape[-1]
    if w.shape != (x.shape[-1] + hidden, 4 * hidden):
        raise ShapeMismatchError(
            f"lstm_cell weights {w.shape} vs input {x.shape} and hidden {h_prev.shape}"
        )
    gates = add(matmul(concat([x, h_prev], axis=1), w), b)
    i = sigmoid(narrow(gates, 1, 0, hidden))
    f = sigmoid(narrow(gates, 1, hidden, hidden))
    g = tanh(narrow(gates, 1, 2 * hidden, hidden))
    o = sigmoid(narrow(gates, 1, 3 * hidden, hidden))
    c = add(mul(f, c_prev), mul(i, g))
    h = mul(o, tanh(c))
    return h, c


# ---------------------------------------------------------------------------
# Backward pass


def backward(loss: Tensor) -> None:
    """Populate ``.grad`` on every reachable tensor that requires gradients.

    Gradients accumulate across calls; the caller resets them between steps.
    """
    if loss.data.size != 1:
        raise NotScalarError(f"backward needs a scalar loss, got shape {loss.shape}")
    topo: list[Tensor] = []
    seen: set[int] = set()
    stack: list[tuple[Tensor, bool]] = [(loss, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            topo.append(node)
            continue
        if id(node) in seen or not node.requires_grad:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node._parents:
            stack.append((parent, False))
    loss.accumulate(np.ones_like(loss.data))
    for node in reversed(topo):
        if node._backward is not None:
            node._backward(node.grad)


def zero_grads(params: Sequence[Tensor]) -> None:
    for p in params:
        p.grad = None


# ---------------------------------------------------------------------------
# Parameter initialization


def glorot_uniform(rng: np.random.Generator, shape: tuple[int, int], dtype) -> np.ndarray:
    fan_in, fan_out = shape
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def embedding_uniform(rng: np.random.Generator, shape: tuple[int, int], dtype) -> np.ndarray:
    return rng.uniform(-0.08, 0.08, size=shape).astype(dtype)
