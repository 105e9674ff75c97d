"""Patch discriminator: four strided convolutions, global average, sigmoid."""
from __future__ import annotations

import numpy as np

from .layers import Conv2d, GlobalAvgPool, Module, Sigmoid, Softplus

__all__ = ["Discriminator"]


class Discriminator(Module):
    """Scores single-channel patches as real/fake in (0, 1)."""

    def __init__(self, scale: float = 1.0, seed: int = 0):
        super().__init__()
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0xD15C]))
        base = max(2, round(4 * scale))
        widths = [1, base, 2 * base, 4 * base, 4 * base]
        self.convs: list[Conv2d] = []
        self.acts: list[Softplus] = []
        for i in range(4):
            conv = Conv2d(widths[i], widths[i + 1], kernel=3, stride=2, padding=1, rng=rng)
            self.add_child(f"conv{i}", conv)
            self.convs.append(conv)
            self.acts.append(Softplus())
        self.head = self.add_child(
            "head", Conv2d(widths[-1], 1, kernel=1, padding="valid", rng=rng)
        )
        self.gap = GlobalAvgPool()
        self.sigmoid = Sigmoid()

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        """Return one score per batch element."""
        if x.ndim != 4 or x.shape[1] != 1:
            raise ValueError(f"discriminator expects (B, 1, H, W) input, got {x.shape}")
        h = x
        for conv, act in zip(self.convs, self.acts):
            h = act.forward(conv.forward(h, training))
        h = self.head.forward(h, training)
        scores = self.sigmoid.forward(self.gap.forward(h))
        return scores[:, 0]

    def backward(self, grad_scores: np.ndarray) -> np.ndarray:
        dh = self.gap.backward(self.sigmoid.backward(grad_scores[:, None]))
        dh = self.head.backward(dh)
        for conv, act in zip(reversed(self.convs), reversed(self.acts)):
            dh = conv.backward(act.backward(dh))
        return dh
