"""Image file I/O (8-bit PNG and PPM/PGM), dataset manifests, patch sampling."""
from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .image import PlanarImage, clamp01

__all__ = [
    "load_image",
    "save_image",
    "DatasetManifest",
    "load_manifest",
    "sample_patches",
    "patch_coordinates",
]


def _quantize(channels: np.ndarray) -> np.ndarray:
    """Map [0, 1] floats to uint8, rounding halves away from zero."""
    return np.floor(clamp01(channels) * 255.0 + 0.5).astype(np.uint8)


def _read_ppm_token(stream) -> bytes:
    """Next whitespace-delimited token, skipping '#' comment lines."""
    token = b""
    while True:
        ch = stream.read(1)
        if ch == b"":
            raise ValueError("truncated PPM header")
        if ch == b"#":
            while ch not in (b"\n", b""):
                ch = stream.read(1)
            continue
        if ch.isspace():
            if token:
                return token
            continue
        token += ch


def _load_pnm(path: Path) -> PlanarImage:
    with open(path, "rb") as fh:
        magic = _read_ppm_token(fh)
        if magic not in (b"P5", b"P6"):
            raise ValueError(f"unsupported PNM magic {magic!r} in {path}")
        width = int(_read_ppm_token(fh))
        height = int(_read_ppm_token(fh))
        maxval = int(_read_ppm_token(fh))
        if maxval != 255:
            raise ValueError(f"only 8-bit PNM supported, got maxval {maxval} in {path}")
        nch = 3 if magic == b"P6" else 1
        raw = fh.read(width * height * nch)
        if len(raw) != width * height * nch:
            raise ValueError(f"truncated PNM pixel data in {path}")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(height, width, nch)
    channels = pixels.transpose(2, 0, 1).astype(np.float64) / 255.0
    return PlanarImage(channels=channels, colorspace="rgb" if nch == 3 else "y")


def _save_pnm(image: PlanarImage, path: Path) -> None:
    data = _quantize(image.channels)
    nch = data.shape[0]
    if nch == 3:
        magic, body = b"P6", data.transpose(1, 2, 0).tobytes()
    elif nch == 1:
        magic, body = b"P5", data[0].tobytes()
    else:
        raise ValueError(f"cannot write {nch}-channel image as PNM")
    header = b"%s\n%d %d\n255\n" % (magic, image.width, image.height)
    with open(path, "wb") as fh:
        fh.write(header + body)


def load_image(path: str | os.PathLike) -> PlanarImage:
    """Load an 8-bit PNG or PPM/PGM file, scaling values to [0, 1]."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image: {path}")
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pgm", ".pnm"):
        return _load_pnm(path)
    if suffix == ".png":
        with Image.open(path) as img:
            if img.mode not in ("RGB", "L"):
                img = img.convert("RGB" if "A" in img.mode or len(img.getbands()) >= 3 else "L")
            arr = np.asarray(img, dtype=np.uint8)
        if arr.ndim == 2:
            channels = arr[None, :, :].astype(np.float64) / 255.0
            return PlanarImage(channels=channels, colorspace="y")
        channels = arr.transpose(2, 0, 1).astype(np.float64) / 255.0
        return PlanarImage(channels=channels, colorspace="rgb")
    raise ValueError(f"unsupported image format {suffix!r} for {path}")


def save_image(image: PlanarImage, path: str | os.PathLike) -> None:
    """Write an image as 8-bit PNG or PPM/PGM depending on the suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix in (".ppm", ".pgm", ".pnm"):
        _save_pnm(image, path)
        return
    if suffix == ".png":
        data = _quantize(image.channels)
        if data.shape[0] == 3:
            Image.fromarray(data.transpose(1, 2, 0), mode="RGB").save(path)
        elif data.shape[0] == 1:
            Image.fromarray(data[0], mode="L").save(path)
        else:
            raise ValueError(f"cannot write {data.shape[0]}-channel image as PNG")
        return
    raise ValueError(f"unsupported image format {suffix!r} for {path}")


@dataclass
class DatasetManifest:
    """Hazy/clear path pairs plus the sampling configuration."""

    pairs: list[tuple[Path, Path]]
    seed: int = 0
    patch_size: int = 128
    patches_per_image: int = 1


def load_manifest(
    path: str | os.PathLike,
    seed: int = 0,
    patch_size: int = 128,
    patches_per_image: int = 1,
) -> DatasetManifest:
    """Parse a manifest of tab-separated ``hazy<TAB>clear`` lines.

    Blank lines and '#' comments are skipped; every referenced file must
    exist. Relative paths resolve against the manifest's directory.
    """
    path = Path(path)
    base = path.parent
    pairs: list[tuple[Path, Path]] = []
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValueError(f"{path}:{lineno}: expected 'hazy<TAB>clear', got {line!r}")
        hazy = (base / parts[0]).resolve() if not Path(parts[0]).is_absolute() else Path(parts[0])
        clear = (base / parts[1]).resolve() if not Path(parts[1]).is_absolute() else Path(parts[1])
        for p in (hazy, clear):
            if not p.exists():
                raise FileNotFoundError(f"{path}:{lineno}: missing file {p}")
        pairs.append((hazy, clear))
    return DatasetManifest(
        pairs=pairs, seed=seed, patch_size=patch_size, patches_per_image=patches_per_image
    )


def patch_coordinates(
    shape: tuple[int, int], size: int, count: int, rng: np.random.Generator
) -> list[tuple[int, int]]:
    """Draw ``count`` top-left corners for size x size crops inside ``shape``."""
    h, w = shape
    if h < size or w < size:
        raise ValueError(f"image {shape} is smaller than patch size {size}")
    tops = rng.integers(0, h - size + 1, size=count)
    lefts = rng.integers(0, w - size + 1, size=count)
    return list(zip(tops.tolist(), lefts.tolist()))


def sample_patches(
    hazy: PlanarImage,
    clear: PlanarImage,
    size: int,
    count: int,
    seed: int,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Aligned random crops: the same coordinates cut both images.

    Returns (hazy_patch, clear_patch) channel stacks; deterministic under
    ``seed``.
    """
    if hazy.shape != clear.shape:
        raise ValueError(f"pair shapes differ: {hazy.shape} vs {clear.shape}")
    rng = np.random.default_rng(seed)
    coords = patch_coordinates(hazy.shape, size, count, rng)
    out = []
    for top, left in coords:
        out.append(
            (
                hazy.channels[:, top : top + size, left : left + size].copy(),
                clear.channels[:, top : top + size, left : left + size].copy(),
            )
        )
    return out
