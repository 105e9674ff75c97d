"""Forward/inverse moment transforms, frequency cubes, and band statistics.

Two transform modes exist. BLOCK splits the channel into non-overlapping 8x8
blocks (reflect-padded to a multiple of 8) and is exactly invertible. SLIDING
is the stride-1 zero-padded correlation with every basis filter, producing
64 same-size maps; it is the analysis layer used at the front of the
dehazing network.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .krawtchouk import BASIS_SIZE, NUM_BANDS, BasisSet, PolynomialMatrix

__all__ = [
    "FrequencyCube",
    "CubeBand",
    "BandStats",
    "forward_moments",
    "inverse_moments",
    "kcl_apply",
    "ikcl_exact",
    "split_cube",
    "merge_cube",
    "band_energy_stats",
    "reflect_pad_to_multiple",
    "SLIDING_PAD",
    "BLOCK_ANCHOR",
]

# Stride-1 "same" padding for the even 8x8 kernel: 3 before, 4 after. The
# window anchored at output position u covers input rows u-3 .. u+4, so the
# block with top-left corner 8i corresponds to sliding position 8i + 3.
SLIDING_PAD = (BASIS_SIZE - 1) // 2, BASIS_SIZE - 1 - (BASIS_SIZE - 1) // 2
BLOCK_ANCHOR = SLIDING_PAD[0]


@dataclass
class FrequencyCube:
    """Stack of 64 per-band coefficient maps in zig-zag order."""

    maps: np.ndarray  # (64, h, w)
    order: tuple[tuple[int, int], ...]
    mode: str  # "block" | "sliding"
    source_shape: tuple[int, int]  # pre-padding (H, W) of the source channel

    def __post_init__(self) -> None:
        if self.maps.ndim != 3 or self.maps.shape[0] != NUM_BANDS:
            raise ValueError(f"cube needs {NUM_BANDS} maps, got shape {self.maps.shape}")
        if self.mode not in ("block", "sliding"):
            raise ValueError(f"unknown cube mode {self.mode!r}")

    @property
    def map_shape(self) -> tuple[int, int]:
        return self.maps.shape[1], self.maps.shape[2]


@dataclass
class CubeBand:
    """Contiguous zig-zag band range split out of a cube."""

    maps: np.ndarray
    band_start: int
    band_stop: int
    order: tuple[tuple[int, int], ...]
    mode: str
    source_shape: tuple[int, int]


def forward_moments(
    block: np.ndarray, m1: PolynomialMatrix, m2: PolynomialMatrix
) -> np.ndarray:
    """Moment matrix Q = M2 . G . M1^T of a square block G.

    M2 contracts the row (first) index of the block, M1 the column index;
    with equal parameters for both the distinction has no effect.
    """
    block = np.asarray(block, dtype=np.float64)
    n2, n1 = m2.size, m1.size
    if block.shape != (n2, n1):
        raise ValueError(f"block shape {block.shape} does not match ({n2}, {n1})")
    return m2.entries @ block @ m1.entries.T


def inverse_moments(
    moments: np.ndarray, m1: PolynomialMatrix, m2: PolynomialMatrix
) -> np.ndarray:
    """Reconstruct the block G = M2^T . Q . M1 from its moment matrix."""
    moments = np.asarray(moments, dtype=np.float64)
    n2, n1 = m2.size, m1.size
    if moments.shape != (n2, n1):
        raise ValueError(f"moment shape {moments.shape} does not match ({n2}, {n1})")
    return m2.entries.T @ moments @ m1.entries


def reflect_pad_to_multiple(channel: np.ndarray, multiple: int) -> np.ndarray:
    """Reflect-pad the bottom/right edges so both dims divide ``multiple``."""
    h, w = channel.shape
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph == 0 and pw == 0:
        return channel
    return np.pad(channel, ((0, ph), (0, pw)), mode="reflect")


def kcl_apply(channel: np.ndarray, basis: BasisSet, mode: str = "sliding") -> FrequencyCube:
    """Project one channel onto all 64 basis filters.

    BLOCK mode emits one coefficient per non-overlapping 8x8 block (maps of
    shape H/8 x W/8 after internal reflect padding); SLIDING mode emits the
    stride-1 zero-padded correlation at every pixel (maps of shape H x W).
    """
    channel = np.asarray(channel, dtype=np.float64)
    if channel.ndim != 2 or channel.size == 0:
        raise ValueError(f"channel must be a non-empty 2-D array, got shape {channel.shape}")
    source_shape = channel.shape
    if mode == "block":
        padded = reflect_pad_to_multiple(channel, BASIS_SIZE)
        windows = sliding_window_view(padded, (BASIS_SIZE, BASIS_SIZE))
        windows = windows[::BASIS_SIZE, ::BASIS_SIZE]
        maps = np.einsum("hwab,kab->khw", windows, basis.filters, optimize=True)
    elif mode == "sliding":
        padded = np.pad(channel, (SLIDING_PAD, SLIDING_PAD))
        windows = sliding_window_view(padded, (BASIS_SIZE, BASIS_SIZE))
        maps = np.einsum("hwab,kab->khw", windows, basis.filters, optimize=True)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return FrequencyCube(
        maps=maps, order=basis.order, mode=mode, source_shape=source_shape
    )


def ikcl_exact(cube: FrequencyCube, basis: BasisSet) -> np.ndarray:
    """Exact inverse of the BLOCK-mode projection, cropped to the source size."""
    if cube.mode != "block":
        raise ValueError(f"exact inverse needs a block-mode cube, got {cube.mode!r}")
    hb, wb = cube.map_shape
    blocks = np.einsum("khw,kab->hawb", cube.maps, basis.filters, optimize=True)
    channel = blocks.reshape(hb * BASIS_SIZE, wb * BASIS_SIZE)
    h, w = cube.source_shape
    return channel[:h, :w]


def split_cube(cube: FrequencyCube, split_point: int) -> tuple[CubeBand, CubeBand]:
    """Split a cube into low bands 0 .. T-1 and high bands T .. 63."""
    if int(split_point) != split_point or not 1 <= split_point <= NUM_BANDS - 1:
        raise ValueError(f"split point must be in [1, {NUM_BANDS - 1}], got {split_point}")
    t = int(split_point)
    low = CubeBand(cube.maps[:t], 0, t, cube.order, cube.mode, cube.source_shape)
    high = CubeBand(cube.maps[t:], t, NUM_BANDS, cube.order, cube.mode, cube.source_shape)
    return low, high


def merge_cube(low: CubeBand, high: CubeBand) -> FrequencyCube:
    """Reassemble a cube from a low/high band pair; exact partition inverse."""
    if low.band_start != 0 or low.band_stop != high.band_start or high.band_stop != NUM_BANDS:
        raise ValueError(
            f"bands [{low.band_start}, {low.band_stop}) + [{high.band_start}, "
            f"{high.band_stop}) do not partition [0, {NUM_BANDS})"
        )
    if low.mode != high.mode or low.source_shape != high.source_shape:
        raise ValueError("band halves disagree on mode or source shape")
    return FrequencyCube(
        maps=np.concatenate([low.maps, high.maps], axis=0),
        order=low.order,
        mode=low.mode,
        source_shape=low.source_shape,
    )


@dataclass
class BandStats:
    """Per-band coefficient statistics of a hazy/clear cube pair."""

    order: tuple[tuple[int, int], ...]
    mean_abs_hazy: np.ndarray
    mean_abs_clear: np.ndarray
    mean_diff: np.ndarray  # signed mean of (clear - hazy)
    mean_abs_diff: np.ndarray

    CSV_HEADER = "band,i,j,mean_abs_hazy,mean_abs_clear,mean_diff"

    def csv_rows(self) -> list[str]:
        rows = []
        for k, (i, j) in enumerate(self.order):
            rows.append(
                f"{k},{i},{j},{self.mean_abs_hazy[k]:.17g},"
                f"{self.mean_abs_clear[k]:.17g},{self.mean_diff[k]:.17g}"
            )
        return rows


def band_energy_stats(hazy: FrequencyCube, clear: FrequencyCube) -> BandStats:
    """Mean absolute coefficients per band plus the clear-minus-hazy deltas."""
    if hazy.mode != clear.mode:
        raise ValueError(f"cube modes differ: {hazy.mode!r} vs {clear.mode!r}")
    if hazy.maps.shape != clear.maps.shape:
        raise ValueError(
            f"cube shapes differ: {hazy.maps.shape} vs {clear.maps.shape}"
        )
    diff = clear.maps - hazy.maps
    return BandStats(
        order=hazy.order,
        mean_abs_hazy=np.abs(hazy.maps).mean(axis=(1, 2)),
        mean_abs_clear=np.abs(clear.maps).mean(axis=(1, 2)),
        mean_diff=diff.mean(axis=(1, 2)),
        mean_abs_diff=np.abs(diff).mean(axis=(1, 2)),
    )
