"""RGB <-> YCbCr conversion (BT.601 full range) and luma plumbing.

Only the luma channel enters the dehazing network; chroma planes are passed
through untouched and recombined at the end.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .image import PlanarImage, clamp01

__all__ = ["YCbCrImage", "rgb_to_ycbcr", "ycbcr_to_rgb"]

# BT.601 full-range (JFIF) coefficients.
_FWD = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_INV = np.array(
    [
        [1.0, 0.0, 1.402],
        [1.0, -0.344136, -0.714136],
        [1.0, 1.772, 0.0],
    ]
)
_OFFSET = np.array([0.0, 0.5, 0.5])


@dataclass
class YCbCrImage:
    """Luma plus offset-centered chroma planes, all in [0, 1]."""

    y: np.ndarray
    cb: np.ndarray
    cr: np.ndarray

    def __post_init__(self) -> None:
        if not (self.y.shape == self.cb.shape == self.cr.shape):
            raise ValueError(
                f"channel shapes differ: {self.y.shape}, {self.cb.shape}, {self.cr.shape}"
            )

    @property
    def shape(self) -> tuple[int, int]:
        return self.y.shape


def rgb_to_ycbcr(image: PlanarImage) -> YCbCrImage:
    """Convert an RGB image to YCbCr; gray inputs map to Cb = Cr = 0.5."""
    if image.colorspace != "rgb" or image.num_channels != 3:
        raise ValueError(
            f"expected a 3-channel rgb image, got {image.num_channels} "
            f"{image.colorspace!r} channels"
        )
    planes = np.einsum("ck,khw->chw", _FWD, image.channels) + _OFFSET[:, None, None]
    return YCbCrImage(y=planes[0], cb=planes[1], cr=planes[2])


def ycbcr_to_rgb(image: YCbCrImage) -> PlanarImage:
    """Invert the BT.601 transform; out-of-gamut values clamp to [0, 1]."""
    stacked = np.stack([image.y, image.cb, image.cr]) - _OFFSET[:, None, None]
    rgb = np.einsum("ck,khw->chw", _INV, stacked)
    return PlanarImage(channels=clamp01(rgb), colorspace="rgb")
