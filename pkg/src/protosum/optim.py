"""Adam optimizer and global gradient-norm clipping."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .autodiff import Tensor


def global_grad_norm(params: Sequence[Tensor]) -> float:
    total = 0.0
    for p in params:
        if p.grad is not None:
            total += float((p.grad.astype(np.float64) ** 2).sum())
    return math.sqrt(total)


def clip_grad_norm(params: Sequence[Tensor], max_norm: float = 5.0) -> float:
    """Scale all gradients so the global L2 norm is at most ``max_norm``.

    Returns the pre-clip norm.
    """
    norm = global_grad_norm(params)
    if norm > max_norm:
        scale = max_norm / norm
        for p in params:
            if p.grad is not None:
                p.grad *= np.asarray(scale, dtype=p.grad.dtype)
    return norm


class Adam:
    """Bias-corrected Adam; moments live in the parameters' dtype."""

    def __init__(
        self,
        params: Sequence[Tensor],
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.data) for p in self.params]
        self.v = [np.zeros_like(p.data) for p in self.params]

    def step(self) -> None:
        self.t += 1
        bias1 = 1.0 - self.beta1**self.t
        bias2 = 1.0 - self.beta2**self.t
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g
            m_hat = self.m[i] / bias1
            v_hat = self.v[i] / bias2
            p.data -= np.asarray(self.lr, dtype=p.data.dtype) * m_hat / (
                np.sqrt(v_hat) + np.asarray(self.eps, dtype=p.data.dtype)
            )

    def state_arrays(self) -> list[np.ndarray]:
        """Moment arrays in parameter order, first moments then second."""
        return [*self.m, *self.v]

    def load_state(self, arrays: list[np.ndarray], t: int, lr: float) -> None:
        n = len(self.params)
        if len(arrays) != 2 * n:
            raise ValueError(f"expected {2 * n} moment arrays, got {len(arrays)}")
        self.m = [a.copy() for a in arrays[:n]]
        self.v = [a.copy() for a in arrays[n:]]
        self.t = t
        self.lr = lr
