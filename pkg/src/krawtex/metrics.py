"""Full-reference image quality metrics: PSNR and single-scale SSIM."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = ["MetricReport", "psnr", "ssim", "PSNR_CAP_DB"]

PSNR_CAP_DB = 100.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


@dataclass
class MetricReport:
    """Per-image scores plus their means, as emitted by the evaluate command."""

    names: list[str]
    psnr_db: list[float]
    ssim: list[float]

    CSV_HEADER = "image,psnr_db,ssim"

    @property
    def mean_psnr(self) -> float:
        return float(np.mean(self.psnr_db))

    @property
    def mean_ssim(self) -> float:
        return float(np.mean(self.ssim))

    def csv_rows(self) -> list[str]:
        rows = [
            f"{name},{p:.17g},{s:.17g}"
            for name, p, s in zip(self.names, self.psnr_db, self.ssim)
        ]
        rows.append(f"MEAN,{self.mean_psnr:.17g},{self.mean_ssim:.17g}")
        return rows


def psnr(pred: np.ndarray, gt: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE) in dB, capped at 100 for (near-)identical inputs."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    mse = np.mean((pred - gt) ** 2)
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(peak**2 / mse))


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    offsets = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(offsets**2) / (2.0 * sigma**2))
    window = np.outer(g, g)
    return window / window.sum()


def ssim(pred: np.ndarray, gt: np.ndarray) -> float:
    """Mean local structural similarity over valid 11x11 Gaussian windows.

    Inputs are single-channel images in [0, 1] (use the luma plane for color
    images); the usual stabilizers k1 = 0.01, k2 = 0.03 at unit dynamic range
    apply.
    """
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {gt.shape}")
    if pred.ndim != 2:
        raise ValueError(f"ssim expects single-channel 2-D inputs, got {pred.shape}")
    if min(pred.shape) < SSIM_WINDOW:
        raise ValueError(
            f"image {pred.shape} is smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} window"
        )
    window = _gaussian_window(SSIM_WINDOW, SSIM_SIGMA)

    def local_mean(img: np.ndarray) -> np.ndarray:
        views = sliding_window_view(img, (SSIM_WINDOW, SSIM_WINDOW))
        return np.einsum("hwab,ab->hw", views, window, optimize=True)

    mu_p = local_mean(pred)
    mu_g = local_mean(gt)
    pp = local_mean(pred * pred) - mu_p**2
    gg = local_mean(gt * gt) - mu_g**2
    pg = local_mean(pred * gt) - mu_p * mu_g
    c1 = SSIM_K1**2
    c2 = SSIM_K2**2
    num = (2.0 * mu_p * mu_g + c1) * (2.0 * pg + c2)
    den = (mu_p**2 + mu_g**2 + c1) * (pp + gg + c2)
    return float(np.mean(num / den))
