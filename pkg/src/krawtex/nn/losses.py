"""Training losses: smooth L1, MSE, fixed random feature loss, GAN terms.

Each loss has a value function matching its definition plus a backward
helper returning the gradient with respect to the prediction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .layers import Conv2d, LeakyReLU, AvgPool2, Module

__all__ = [
    "smooth_l1_loss",
    "smooth_l1_backward",
    "mse_loss",
    "mse_backward",
    "FeatureBank",
    "feature_loss",
    "gan_losses",
    "LossWeights",
    "total_loss",
    "SCORE_EPS",
]

SCORE_EPS = 1e-7


def _check_shapes(pred: np.ndarray, target: np.ndarray) -> None:
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")


def smooth_l1_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean of 0.5 l^2 for |l| < 1 else |l| - 0.5, over all elements."""
    _check_shapes(pred, target)
    l = pred - target
    a = np.abs(l)
    return float(np.mean(np.where(a < 1.0, 0.5 * l * l, a - 0.5)))


def smooth_l1_backward(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    l = pred - target
    return np.clip(l, -1.0, 1.0) / l.size


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    _check_shapes(pred, target)
    return float(np.mean((pred - target) ** 2))


def mse_backward(pred: np.ndarray, target: np.ndarray) -> np.ndarray:
    return 2.0 * (pred - target) / pred.size


class FeatureBank(Module):
    """Three fixed pseudo-random convolution stages standing in for a
    pretrained feature extractor.

    Stage weights are drawn once from the recorded seed and never trained.
    The loss sums, over stages, the squared feature difference normalized by
    channels x height x width, averaged over the batch.
    """

    STAGE_WIDTHS = (6, 12, 24)

    def __init__(self, seed: int = 0, weights: dict[str, np.ndarray] | None = None):
        super().__init__()
        self.seed = seed
        rng = None
        if weights is None:
            rng = np.random.default_rng(np.random.SeedSequence([seed, 0xFEA7]))
        in_ch = 1
        self.convs: list[Conv2d] = []
        self.acts: list[LeakyReLU] = []
        self.pools: list[AvgPool2] = []
        for i, width in enumerate(self.STAGE_WIDTHS):
            if weights is not None:
                conv = Conv2d(
                    in_ch, width, kernel=3, padding="same",
                    weight=weights[f"w{i}"], trainable=False,
                )
                conv.b.value = np.asarray(weights[f"b{i}"], dtype=np.float64)
                conv.b.trainable = False
            else:
                conv = Conv2d(in_ch, width, kernel=3, padding="same", rng=rng)
                conv.w.trainable = False
                conv.b.trainable = False
            self.add_child(f"stage{i}", conv)
            self.convs.append(conv)
            self.acts.append(LeakyReLU(0.1))
            self.pools.append(AvgPool2())
            in_ch = width

    def save(self, path) -> None:
        arrays = {}
        for i, conv in enumerate(self.convs):
            arrays[f"w{i}"] = conv.w.value
            arrays[f"b{i}"] = conv.b.value
        np.savez(path, **arrays)

    @classmethod
    def load(cls, path) -> "FeatureBank":
        """Rebuild a bank from an external .npz file; its seed records only
        that the weights did not come from the seeded constructor."""
        with np.load(path) as data:
            weights = {k: data[k] for k in data.files}
        return cls(seed=0, weights=weights)

    def features(self, x: np.ndarray) -> list[np.ndarray]:
        """Post-activation maps of the three stages."""
        feats = []
        h = x
        for i, (conv, act, pool) in enumerate(zip(self.convs, self.acts, self.pools)):
            h = act.forward(conv.forward(h))
            feats.append(h)
            if i < len(self.convs) - 1:
                h = pool.forward(h)
        return feats

    def loss_and_grad(self, pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
        """Feature loss value and its gradient with respect to ``pred``."""
        _check_shapes(pred, target)
        batch = pred.shape[0]
        target_feats = self.features(target)
        # Recompute on pred so every layer cache belongs to the pred pass.
        pred_feats = self.features(pred)
        value = 0.0
        stage_grads = []
        for fp, ft in zip(pred_feats, target_feats):
            norm = fp.shape[1] * fp.shape[2] * fp.shape[3]
            diff = fp - ft
            value += float(np.sum(diff * diff)) / (norm * batch)
            stage_grads.append(2.0 * diff / (norm * batch))
        grad = None
        for i in range(len(self.convs) - 1, -1, -1):
            dh = stage_grads[i] if grad is None else grad + stage_grads[i]
            grad = self.convs[i].backward(self.acts[i].backward(dh))
            if i > 0:
                grad = self.pools[i - 1].backward(grad)
        return value, grad


def feature_loss(pred: np.ndarray, target: np.ndarray, bank: FeatureBank) -> float:
    """Sum over stages of the normalized squared feature difference."""
    value, _ = bank.loss_and_grad(pred, target)
    return value


def gan_losses(d_real: np.ndarray, d_fake: np.ndarray) -> tuple[float, float]:
    """Discriminator minimax loss and the non-saturating generator loss.

    Scores are clamped to [eps, 1-eps] before the logs so the pair is total.
    """
    r = np.clip(np.asarray(d_real, dtype=np.float64), SCORE_EPS, 1.0 - SCORE_EPS)
    f = np.clip(np.asarray(d_fake, dtype=np.float64), SCORE_EPS, 1.0 - SCORE_EPS)
    loss_d = float(-(np.mean(np.log(r)) + np.mean(np.log(1.0 - f))))
    loss_g = float(-np.mean(np.log(f)))
    return loss_d, loss_g


@dataclass(frozen=True)
class LossWeights:
    """Weights of the four generator loss terms."""

    feature: float = 0.5
    smooth_l1: float = 1.0
    mse: float = 0.04
    gan: float = 0.05


def total_loss(
    feature: float, smooth_l1: float, mse: float, gan: float,
    weights: LossWeights = LossWeights(),
) -> float:
    return (
        weights.feature * feature
        + weights.smooth_l1 * smooth_l1
        + weights.mse * mse
        + weights.gan * gan
    )
