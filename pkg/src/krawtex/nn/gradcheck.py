"""Central finite-difference verification of every backward pass.

A check projects the model output onto a fixed random probe so that the
scalar's parameter gradient comes from one backward call; every trainable
parameter entry is then perturbed by +-eps and compared.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discriminator import Discriminator
from .generator import Generator, GeneratorConfig
from .layers import (
    AttentionGate,
    AvgPool2,
    BatchNorm2d,
    Conv2d,
    DenseBlock,
    Module,
    NearestUp2,
    Sigmoid,
    Softplus,
)

__all__ = ["gradient_check", "CheckResult", "run_standard_checks", "LINEAR_TOL", "NONLINEAR_TOL"]

LINEAR_TOL = 1e-6
NONLINEAR_TOL = 1e-4


@dataclass
class CheckResult:
    name: str
    max_rel_err: float
    threshold: float

    @property
    def ok(self) -> bool:
        return self.max_rel_err < self.threshold


def _relative_error(a: float, b: float) -> float:
    """Two-sided relative error with an absolute floor.

    The floor keeps the comparison meaningful for near-zero gradients: the
    central-difference value carries ~1e-11 of roundoff noise, so dividing a
    noise-level difference by a denominator of the same size would report
    O(1) error for a correct gradient.
    """
    denom = abs(a) + abs(b)
    return abs(a - b) / max(denom, 1e-4)


def gradient_check(
    module: Module,
    x: np.ndarray,
    eps: float = 1e-4,
    seed: int = 0,
    training: bool = True,
) -> float:
    """Max relative error between backprop and central differences.

    Frozen parameters are excluded from the sweep. The probe scalar is
    sum(output * R) for a fixed random R, so linear layers are exact up to
    roundoff.
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x9CAD]))
    out = module.forward(x, training=training)
    probe = rng.standard_normal(out.shape)

    module.zero_grads()
    out = module.forward(x, training=training)
    module.backward(probe)
    grads = {
        name: p.grad.copy() if p.grad is not None else np.zeros_like(p.value)
        for name, p in module.named_parameters()
        if p.trainable
    }

    def scalar() -> float:
        return float(np.sum(module.forward(x, training=training) * probe))

    worst = 0.0
    for name, p in module.named_parameters():
        if not p.trainable:
            continue
        flat = p.value.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + eps
            f_plus = scalar()
            flat[i] = keep - eps
            f_minus = scalar()
            flat[i] = keep
            fd = (f_plus - f_minus) / (2.0 * eps)
            worst = max(worst, _relative_error(fd, gflat[i]))
    return worst


def run_standard_checks(
    scale: float = 1.0, size: int = 16, seed: int = 0
) -> list[CheckResult]:
    """Finite-difference checks for every layer kind plus both full models."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x0C8E]))
    results: list[CheckResult] = []

    def check(name: str, module: Module, x: np.ndarray, threshold: float) -> None:
        err = gradient_check(module, x, seed=seed)
        results.append(CheckResult(name=name, max_rel_err=err, threshold=threshold))

    x4 = rng.random((2, 3, size, size)) * 0.8 + 0.1
    check("conv_same", Conv2d(3, 4, kernel=3, padding="same", rng=rng), x4, LINEAR_TOL)
    check(
        "conv_strided",
        Conv2d(3, 4, kernel=3, stride=2, padding=1, rng=rng),
        x4,
        LINEAR_TOL,
    )
    check("batchnorm", BatchNorm2d(3), x4, NONLINEAR_TOL)
    check("dense_block", DenseBlock(3, 2, 5, rng), x4, NONLINEAR_TOL)
    check("attention_gate", AttentionGate(3, rng), x4, NONLINEAR_TOL)

    class _WithParamHead(Module):
        """Wrap a parameter-free layer behind a conv so its backward is swept."""

        def __init__(self, inner: Module, channels: int):
            super().__init__()
            self.conv = self.add_child("conv", Conv2d(channels, channels, 3, rng=rng))
            self.inner = inner

        def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
            return self.inner.forward(self.conv.forward(x, training), training)

        def backward(self, grad_out: np.ndarray) -> np.ndarray:
            return self.conv.backward(self.inner.backward(grad_out))

    check("downsample", _WithParamHead(AvgPool2(), 3), x4, LINEAR_TOL)
    check("upsample", _WithParamHead(NearestUp2(), 3), x4, LINEAR_TOL)
    check("softplus", _WithParamHead(Softplus(), 3), x4, NONLINEAR_TOL)
    check("sigmoid_head", _WithParamHead(Sigmoid(), 3), x4, NONLINEAR_TOL)

    class _GenWrapper(Module):
        """Expose the generator minus its frozen analysis front end."""

        def __init__(self, generator: Generator):
            super().__init__()
            self.add_child("gen", generator)
            self.generator = generator

        def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
            return self.generator.forward(x, training)

        def backward(self, grad_out: np.ndarray) -> np.ndarray:
            return self.generator.backward(grad_out)

    gen = Generator(GeneratorConfig(scale=scale), seed=seed, init="random")
    # Keep the probe image clear of the output clamp: a pixel resting on the
    # [0, 1] boundary flips its clamp state under the +-eps perturbations.
    xg = rng.random((1, 1, size, size)) * 0.6 + 0.2
    check("generator", _GenWrapper(gen), xg, NONLINEAR_TOL)

    class _DiscWrapper(Module):
        def __init__(self, disc: Discriminator):
            super().__init__()
            self.add_child("disc", disc)
            self.disc = disc

        def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
            return self.disc.forward(x, training)[:, None]

        def backward(self, grad_out: np.ndarray) -> np.ndarray:
            return self.disc.backward(grad_out[:, 0])

    disc = Discriminator(scale=scale, seed=seed)
    xd = rng.random((2, 1, size, size)) * 0.8 + 0.1
    check("discriminator", _DiscWrapper(disc), xd, NONLINEAR_TOL)
    return results
