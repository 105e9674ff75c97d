"""Bias-corrected Adam over named parameter collections."""
from __future__ import annotations

import numpy as np

from .layers import Parameter

__all__ = ["Adam"]


class Adam:
    """Standard Adam; frozen parameters keep no moments and are never touched."""

    def __init__(
        self,
        named_params: list[tuple[str, Parameter]],
        lr: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self._params = [(name, p) for name, p in named_params if p.trainable]
        self.m = {name: np.zeros_like(p.value) for name, p in self._params}
        self.v = {name: np.zeros_like(p.value) for name, p in self._params}

    def step(self) -> None:
        """Apply one update using the gradients accumulated on the parameters."""
        self.step_count += 1
        t = self.step_count
        bias1 = 1.0 - self.beta1**t
        bias2 = 1.0 - self.beta2**t
        for name, p in self._params:
            grad = p.grad if p.grad is not None else np.zeros_like(p.value)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            p.value -= self.lr * (m / bias1) / (np.sqrt(v / bias2) + self.eps)

    def moment_entries(self, prefix: str) -> list[tuple[str, np.ndarray]]:
        """Moment tensors named for checkpoint serialization."""
        out = []
        for name, _ in self._params:
            out.append((f"{prefix}.m.{name}", self.m[name]))
            out.append((f"{prefix}.v.{name}", self.v[name]))
        return out

    def load_moments(self, prefix: str, entries: dict[str, np.ndarray]) -> None:
        for name, _ in self._params:
            self.m[name] = entries[f"{prefix}.m.{name}"].astype(np.float64).copy()
            self.v[name] = entries[f"{prefix}.v.{name}"].astype(np.float64).copy()
