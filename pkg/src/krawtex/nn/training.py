"""Model state, alternating GAN training, and checkpoint (de)serialization.

Each step runs one discriminator update with the generator frozen, then one
generator update with the discriminator frozen. Everything is seeded, so a
fixed seed and data order reproduce checkpoints byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..color import rgb_to_ycbcr
from ..dataio import DatasetManifest, load_image, sample_patches
from ..image import PlanarImage
from .checkpoint import load_checkpoint, save_checkpoint
from .discriminator import Discriminator
from .generator import Generator, GeneratorConfig
from .losses import (
    FeatureBank,
    LossWeights,
    SCORE_EPS,
    gan_losses,
    mse_backward,
    mse_loss,
    smooth_l1_backward,
    smooth_l1_loss,
    total_loss,
)
from .optim import Adam

__all__ = [
    "TrainingError",
    "Tensor4",
    "ModelState",
    "LossRecord",
    "train_step",
    "run_training",
    "LOSS_CSV_HEADER",
]

LOSS_CSV_HEADER = "step,loss_total,loss_l1,loss_mse,loss_feat,loss_g,loss_d"


class TrainingError(RuntimeError):
    """Raised when a non-finite value is detected during training."""


@dataclass
class Tensor4:
    """Batched activation tensor with an optional same-shape gradient."""

    data: np.ndarray
    grad: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 4:
            raise ValueError(f"expected (batch, channels, height, width), got {self.data.shape}")
        if self.grad is not None and self.grad.shape != self.data.shape:
            raise ValueError(
                f"grad shape {self.grad.shape} does not match data {self.data.shape}"
            )
        if not np.all(np.isfinite(self.data)):
            raise TrainingError("non-finite values in tensor data")


@dataclass
class LossRecord:
    step: int
    loss_total: float
    loss_l1: float
    loss_mse: float
    loss_feat: float
    loss_g: float
    loss_d: float

    def csv_row(self) -> str:
        return (
            f"{self.step},{self.loss_total:.17g},{self.loss_l1:.17g},"
            f"{self.loss_mse:.17g},{self.loss_feat:.17g},{self.loss_g:.17g},"
            f"{self.loss_d:.17g}"
        )


@dataclass
class ModelState:
    """Generator + discriminator + optimizer moments + step counter + seed."""

    generator: Generator
    discriminator: Discriminator
    bank: FeatureBank
    adam_g: Adam
    adam_d: Adam
    weights: LossWeights
    lr: float
    seed: int
    step: int = 0

    @classmethod
    def create(
        cls,
        config: GeneratorConfig,
        seed: int = 0,
        lr: float = 0.001,
        weights: LossWeights = LossWeights(),
        bank: FeatureBank | None = None,
    ) -> "ModelState":
        generator = Generator(config, seed=seed)
        discriminator = Discriminator(scale=config.scale, seed=seed)
        bank = bank if bank is not None else FeatureBank(seed=seed)
        return cls(
            generator=generator,
            discriminator=discriminator,
            bank=bank,
            adam_g=Adam(generator.named_parameters(), lr=lr),
            adam_d=Adam(discriminator.named_parameters(), lr=lr),
            weights=weights,
            lr=lr,
            seed=seed,
        )

    def to_entries(self) -> dict[str, np.ndarray]:
        cfg = self.generator.config
        entries: dict[str, np.ndarray] = {
            "config.p": np.array(cfg.p),
            "config.split_point": np.array(float(cfg.split_point)),
            "config.scale": np.array(cfg.scale),
            "config.lr": np.array(self.lr),
            "config.w_feature": np.array(self.weights.feature),
            "config.w_smooth_l1": np.array(self.weights.smooth_l1),
            "config.w_mse": np.array(self.weights.mse),
            "config.w_gan": np.array(self.weights.gan),
            "config.bank_seed": np.array(float(self.bank.seed)),
        }
        for name, p in self.generator.named_parameters():
            entries[f"gen.{name}"] = p.value
        for name, b in self.generator.named_buffers():
            entries[f"buffer.gen.{name}"] = b
        for name, p in self.discriminator.named_parameters():
            entries[f"disc.{name}"] = p.value
        entries.update(self.adam_g.moment_entries("adam_g"))
        entries.update(self.adam_d.moment_entries("adam_d"))
        return entries

    def save(self, path) -> None:
        save_checkpoint(path, self.to_entries(), step=self.step, seed=self.seed)

    @classmethod
    def load(cls, path) -> "ModelState":
        entries, step, seed = load_checkpoint(path)
        config = GeneratorConfig(
            split_point=int(round(float(entries["config.split_point"]))),
            scale=float(entries["config.scale"]),
            p=float(entries["config.p"]),
        )
        weights = LossWeights(
            feature=float(entries["config.w_feature"]),
            smooth_l1=float(entries["config.w_smooth_l1"]),
            mse=float(entries["config.w_mse"]),
            gan=float(entries["config.w_gan"]),
        )
        state = cls.create(
            config,
            seed=seed,
            lr=float(entries["config.lr"]),
            weights=weights,
            bank=FeatureBank(seed=int(round(float(entries["config.bank_seed"])))),
        )
        state.step = step
        for name, p in state.generator.named_parameters():
            p.value = entries[f"gen.{name}"].copy()
        for gname, _ in state.generator.named_buffers():
            state.generator_set_buffer(gname, entries[f"buffer.gen.{gname}"].copy())
        for name, p in state.discriminator.named_parameters():
            p.value = entries[f"disc.{name}"].copy()
        state.adam_g.load_moments("adam_g", entries)
        state.adam_d.load_moments("adam_d", entries)
        state.adam_g.step_count = step
        state.adam_d.step_count = step
        return state

    def generator_set_buffer(self, dotted: str, value: np.ndarray) -> None:
        parts = dotted.split(".")
        module = self.generator
        for part in parts[:-1]:
            module = module._children[part]
        module.set_buffer(parts[-1], value)


def _check_finite(name: str, value: float, step: int) -> None:
    if not np.isfinite(value):
        raise TrainingError(f"step {step}: loss {name} is not finite ({value})")


def train_step(
    state: ModelState, hazy: np.ndarray, clear: np.ndarray
) -> LossRecord:
    """One 1:1 alternation: discriminator update, then generator update."""
    hazy = Tensor4(hazy).data
    clear = Tensor4(clear).data
    batch = hazy.shape[0]
    gen, disc = state.generator, state.discriminator

    fake = gen.forward(hazy, training=True)

    # Discriminator update; the generator output is treated as a constant.
    disc.zero_grads()
    s_real = disc.forward(clear, training=True)
    r = np.clip(s_real, SCORE_EPS, 1.0 - SCORE_EPS)
    disc.backward(-1.0 / (batch * r))
    s_fake = disc.forward(fake, training=True)
    f = np.clip(s_fake, SCORE_EPS, 1.0 - SCORE_EPS)
    disc.backward(1.0 / (batch * (1.0 - f)))
    loss_d, _ = gan_losses(s_real, s_fake)
    state.adam_d.step()

    # Generator update; discriminator weights stay frozen.
    gen.zero_grads()
    disc.zero_grads()
    loss_l1 = smooth_l1_loss(fake, clear)
    loss_mse = mse_loss(fake, clear)
    loss_feat, grad_feat = state.bank.loss_and_grad(fake, clear)
    s_fake2 = disc.forward(fake, training=True)
    _, loss_g = gan_losses(s_real, s_fake2)
    f2 = np.clip(s_fake2, SCORE_EPS, 1.0 - SCORE_EPS)
    grad_gan = disc.backward(-1.0 / (batch * f2))
    w = state.weights
    grad_fake = (
        w.smooth_l1 * smooth_l1_backward(fake, clear)
        + w.mse * mse_backward(fake, clear)
        + w.feature * grad_feat
        + w.gan * grad_gan
    )
    gen.backward(grad_fake)
    disc.zero_grads()  # discard gradients that leaked into the frozen side
    state.adam_g.step()
    state.step += 1

    loss_tot = total_loss(loss_feat, loss_l1, loss_mse, loss_g, w)
    record = LossRecord(
        step=state.step,
        loss_total=loss_tot,
        loss_l1=loss_l1,
        loss_mse=loss_mse,
        loss_feat=loss_feat,
        loss_g=loss_g,
        loss_d=loss_d,
    )
    for name in ("loss_total", "loss_l1", "loss_mse", "loss_feat", "loss_g", "loss_d"):
        _check_finite(name, getattr(record, name), state.step)
    return record


def _pair_patch_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def load_luma_patches(manifest: DatasetManifest) -> list[tuple[np.ndarray, np.ndarray]]:
    """Aligned (hazy_y, clear_y) patches for every manifest pair."""
    patches = []
    for index, (hazy_path, clear_path) in enumerate(manifest.pairs):
        hazy = load_image(hazy_path)
        clear = load_image(clear_path)
        crops = sample_patches(
            hazy,
            clear,
            size=manifest.patch_size,
            count=manifest.patches_per_image,
            seed=_pair_patch_seed(manifest.seed, index),
        )
        for hazy_crop, clear_crop in crops:
            hy = rgb_to_ycbcr(PlanarImage(channels=hazy_crop, colorspace="rgb")).y
            cy = rgb_to_ycbcr(PlanarImage(channels=clear_crop, colorspace="rgb")).y
            patches.append((hy[None, :, :], cy[None, :, :]))
    return patches


def run_training(
    manifest: DatasetManifest,
    state: ModelState,
    epochs: int,
    batch_size: int,
) -> list[LossRecord]:
    """Epoch loop over shuffled patches; returns one record per step."""
    patches = load_luma_patches(manifest)
    if not patches:
        raise ValueError("manifest has no usable pairs")
    order_rng = np.random.default_rng(np.random.SeedSequence([state.seed, 0xDA7A]))
    records: list[LossRecord] = []
    for _ in range(epochs):
        order = order_rng.permutation(len(patches))
        for start in range(0, len(order), batch_size):
            chunk = order[start : start + batch_size]
            hazy = np.stack([patches[i][0] for i in chunk])
            clear = np.stack([patches[i][1] for i in chunk])
            records.append(train_step(state, hazy, clear))
    return records
