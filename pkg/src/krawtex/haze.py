"""Atmospheric-scattering haze synthesis and the dark-channel-prior baseline.

Haze formation: I = R * t + A * (1 - t) with transmission t = exp(-beta * d).
The DCP dehazer estimates t from the dark channel of the airlight-normalized
image and restores R = (I - A) / max(t, t0) + A.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .image import PlanarImage, clamp01

__all__ = [
    "HazeScene",
    "transmission_from_depth",
    "synthesize_haze",
    "dark_channel",
    "estimate_airlight",
    "dcp_dehaze",
    "make_depth",
]

DEPTH_KINDS = ("ramp", "radial", "smooth")


@dataclass
class HazeScene:
    """Clear image + depth map + (beta, airlight) defining one hazy image."""

    clear: PlanarImage
    depth: np.ndarray
    beta: float
    airlight: np.ndarray = field(default_factory=lambda: np.full(3, 0.8))

    def __post_init__(self) -> None:
        if self.clear.colorspace != "rgb":
            raise ValueError("scene needs an rgb clear image")
        self.depth = np.asarray(self.depth, dtype=np.float64)
        if self.depth.shape != self.clear.shape:
            raise ValueError(
                f"depth shape {self.depth.shape} does not match image {self.clear.shape}"
            )
        if np.any(self.depth < 0):
            raise ValueError("depth must be nonnegative")
        if self.beta <= 0:
            raise ValueError(f"beta must be positive, got {self.beta}")
        self.airlight = np.asarray(self.airlight, dtype=np.float64).reshape(3)
        if np.any(self.airlight < 0) or np.any(self.airlight > 1):
            raise ValueError("airlight components must lie in [0, 1]")

    @property
    def transmission(self) -> np.ndarray:
        return transmission_from_depth(self.depth, self.beta)


def transmission_from_depth(depth: np.ndarray, beta: float) -> np.ndarray:
    """t = exp(-beta * depth), in (0, 1], monotone decreasing in depth."""
    depth = np.asarray(depth, dtype=np.float64)
    if np.any(depth < 0):
        raise ValueError("depth must be nonnegative")
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return np.exp(-beta * depth)


def synthesize_haze(scene: HazeScene) -> PlanarImage:
    """Apply the scattering model per channel: I = R t + A (1 - t)."""
    t = scene.transmission[None, :, :]
    airlight = scene.airlight[:, None, None]
    hazy = scene.clear.channels * t + airlight * (1.0 - t)
    return PlanarImage(channels=hazy, colorspace="rgb")


def dark_channel(image: PlanarImage, patch_size: int = 15) -> np.ndarray:
    """Per-pixel channel minimum eroded over a local patch window.

    Windows are truncated at the image border (minimum over in-bounds pixels
    only), which matches replicate-padded erosion.
    """
    if image.num_channels != 3:
        raise ValueError("dark channel needs an rgb image")
    if patch_size < 1 or patch_size % 2 == 0:
        raise ValueError(f"patch_size must be odd and >= 1, got {patch_size}")
    channel_min = image.channels.min(axis=0)
    if patch_size == 1:
        return channel_min
    half = patch_size // 2
    big = np.finfo(np.float64).max
    padded = np.pad(channel_min, half, mode="constant", constant_values=big)
    windows = sliding_window_view(padded, (patch_size, patch_size))
    return windows.min(axis=(2, 3))


def estimate_airlight(image: PlanarImage, dark: np.ndarray) -> np.ndarray:
    """Mean color of the brightest 0.1% of dark-channel pixels.

    At least one pixel is always used; ties resolve to the earliest pixels in
    row-major order so the estimate is deterministic.
    """
    if dark.shape != image.shape:
        raise ValueError(f"dark shape {dark.shape} does not match image {image.shape}")
    flat = dark.reshape(-1)
    count = max(1, int(flat.size * 0.001))
    picked = np.argsort(-flat, kind="stable")[:count]
    pixels = image.channels.reshape(image.num_channels, -1)[:, picked]
    return pixels.mean(axis=1)


def dcp_dehaze(
    image: PlanarImage, t0: float = 0.1, patch_size: int = 15
) -> PlanarImage:
    """Dark-channel-prior dehazer with transmission floor ``t0``."""
    if not 0.0 < t0 < 1.0:
        raise ValueError(f"t0 must lie in (0, 1), got {t0}")
    airlight = estimate_airlight(image, dark_channel(image, patch_size))
    if np.any(airlight <= 0.05):
        raise ValueError(f"degenerate airlight estimate {airlight}")
    normalized = PlanarImage(
        channels=clamp01(image.channels / airlight[:, None, None]), colorspace="rgb"
    )
    t = 1.0 - dark_channel(normalized, patch_size)
    t = np.maximum(t, t0)
    restored = (image.channels - airlight[:, None, None]) / t[None, :, :] + airlight[
        :, None, None
    ]
    return PlanarImage(channels=clamp01(restored), colorspace="rgb")


def make_depth(
    shape: tuple[int, int],
    kind: str = "ramp",
    seed: int = 0,
    smooth_passes: int = 4,
) -> np.ndarray:
    """Synthetic depth map in [0, 1]: vertical ramp, radial bowl, or smoothed noise."""
    h, w = shape
    if kind == "ramp":
        return np.tile(np.linspace(0.0, 1.0, h)[:, None], (1, w))
    if kind == "radial":
        ys = np.linspace(-1.0, 1.0, h)[:, None]
        xs = np.linspace(-1.0, 1.0, w)[None, :]
        r = np.sqrt(ys**2 + xs**2)
        return r / r.max()
    if kind == "smooth":
        rng = np.random.default_rng(seed)
        depth = rng.random((h, w))
        kernel = np.ones(5) / 5.0
        for _ in range(smooth_passes):
            depth = np.apply_along_axis(
                lambda row: np.convolve(row, kernel, mode="same"), 1, depth
            )
            depth = np.apply_along_axis(
                lambda col: np.convolve(col, kernel, mode="same"), 0, depth
            )
        lo, hi = depth.min(), depth.max()
        return (depth - lo) / max(hi - lo, 1e-12)
    raise ValueError(f"unknown depth kind {kind!r}; expected one of {DEPTH_KINDS}")
