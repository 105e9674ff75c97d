"""Shared fixtures: synthetic scenes and on-disk datasets for pipeline tests."""
from __future__ import annotations

import numpy as np
import pytest

from krawtex.haze import HazeScene, synthesize_haze
from krawtex.image import PlanarImage


def smooth_field(rng: np.random.Generator, h: int, w: int, cells: int = 8) -> np.ndarray:
    """Smooth random field in [0, 1] built from upsampled low-res noise."""
    base = rng.random((cells, cells))
    up = np.kron(base, np.ones((max(1, h // cells), max(1, w // cells))))[:h, :w]
    kernel = np.ones(7) / 7.0
    for _ in range(2):
        up = np.apply_along_axis(lambda r: np.convolve(r, kernel, mode="same"), 1, up)
        up = np.apply_along_axis(lambda c: np.convolve(c, kernel, mode="same"), 0, up)
    lo, hi = up.min(), up.max()
    return (up - lo) / max(hi - lo, 1e-9)


def make_clear_image(rng: np.random.Generator, h: int = 64, w: int = 64) -> PlanarImage:
    """Colorful smooth test image with a natural-looking decaying spectrum."""
    channels = np.stack([smooth_field(rng, h, w) for _ in range(3)])
    return PlanarImage(channels=0.08 + 0.84 * channels, colorspace="rgb")


def make_scene(
    rng: np.random.Generator,
    h: int = 64,
    w: int = 64,
    airlight: float = 0.8,
    t_low: float = 0.3,
    t_high: float = 0.7,
) -> HazeScene:
    """Synthetic scene whose transmission spans exactly [t_low, t_high]."""
    clear = make_clear_image(rng, h, w)
    field = smooth_field(rng, h, w)
    depth = -np.log(t_high) + (np.log(t_high) - np.log(t_low)) * field
    return HazeScene(clear=clear, depth=depth, beta=1.0, airlight=np.full(3, airlight))


@pytest.fixture(scope="session")
def scene_pairs():
    """Twenty (hazy, clear) image pairs used by the frequency-domain tests."""
    rng = np.random.default_rng(2024)
    pairs = []
    for _ in range(20):
        scene = make_scene(rng)
        pairs.append((synthesize_haze(scene), scene.clear))
    return pairs
