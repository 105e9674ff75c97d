"""Planar floating-point image container shared across the toolkit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["PlanarImage", "clamp01"]


def clamp01(values: np.ndarray) -> np.ndarray:
    return np.clip(values, 0.0, 1.0)


@dataclass
class PlanarImage:
    """Stack of same-shape float channels with a declared color space.

    ``channels`` has shape (C, H, W); values are clamped to [0, 1] at module
    boundaries while intermediate math stays unclamped.
    """

    channels: np.ndarray
    colorspace: str = "rgb"

    VALID_SPACES = ("rgb", "ycbcr", "y")

    def __post_init__(self) -> None:
        arr = np.asarray(self.channels, dtype=np.float64)
        if arr.ndim == 2:
            arr = arr[None, :, :]
        if arr.ndim != 3:
            raise ValueError(f"channels must be (C, H, W), got shape {arr.shape}")
        if arr.shape[1] == 0 or arr.shape[2] == 0:
            raise ValueError("image must not be empty")
        if self.colorspace not in self.VALID_SPACES:
            raise ValueError(f"unknown colorspace {self.colorspace!r}")
        if self.colorspace == "rgb" and arr.shape[0] != 3:
            raise ValueError(f"rgb image needs 3 channels, got {arr.shape[0]}")
        if self.colorspace == "y" and arr.shape[0] != 1:
            raise ValueError(f"luma image needs 1 channel, got {arr.shape[0]}")
        self.channels = clamp01(arr)

    @property
    def height(self) -> int:
        return self.channels.shape[1]

    @property
    def width(self) -> int:
        return self.channels.shape[2]

    @property
    def num_channels(self) -> int:
        return self.channels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)
