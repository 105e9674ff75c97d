"""End-to-end dehazing: luma through the generator, chroma passed through."""
from __future__ import annotations

import numpy as np

from .color import YCbCrImage, rgb_to_ycbcr, ycbcr_to_rgb
from .image import PlanarImage
from .krawtchouk import BASIS_SIZE
from .nn.generator import Generator

__all__ = ["dehaze_ycbcr", "dehaze_rgb", "pad_for_generator"]

MIN_SIDE = 16


def pad_for_generator(channel: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    """Pad to at least 16 px per side and a multiple of 8, symmetrically
    mirroring the bottom/right edges; returns the padded channel and the
    original shape for cropping."""
    h, w = channel.shape
    if h < BASIS_SIZE or w < BASIS_SIZE:
        raise ValueError(f"image {h}x{w} is too small to dehaze (need >= 8 px per side)")
    th = max(MIN_SIDE, -(-h // BASIS_SIZE) * BASIS_SIZE)
    tw = max(MIN_SIDE, -(-w // BASIS_SIZE) * BASIS_SIZE)
    if (th, tw) == (h, w):
        return channel, (h, w)
    return np.pad(channel, ((0, th - h), (0, tw - w)), mode="symmetric"), (h, w)


def dehaze_ycbcr(image: YCbCrImage, generator: Generator) -> YCbCrImage:
    """Regenerate the luma plane; chroma planes pass through untouched."""
    padded, (h, w) = pad_for_generator(image.y)
    out = generator.forward(padded[None, None, :, :], training=False)[0, 0]
    return YCbCrImage(y=out[:h, :w], cb=image.cb, cr=image.cr)


def dehaze_rgb(image: PlanarImage, generator: Generator) -> PlanarImage:
    """Full pipeline: RGB -> YCbCr -> dehaze luma -> RGB."""
    return ycbcr_to_rgb(dehaze_ycbcr(rgb_to_ycbcr(image), generator))
