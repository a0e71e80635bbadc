"""
Image Quality Metrics
L0, PSNR and SSIM between an original image and its adversarial counterpart
"""
import math
from dataclasses import dataclass
from typing import Any, Dict

import numpy as np
from skimage.metrics import structural_similarity

from src.core.errors import DimensionMismatchError, ImageTooSmallError
from src.core.image import MAX_VALUE, Image, diff_mask

# Canonical SSIM settings: 11x11 Gaussian window, sigma 1.5
SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03
SSIM_MODE = "per-channel"


@dataclass(frozen=True)
class QualityReport:
    """Quality triple of an adversarial image against its original"""
    l0: int
    psnr: float
    ssim: float

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready record; an infinite PSNR is written as the string "inf" """
        return {
            "l0": self.l0,
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": None if math.isnan(self.ssim) else self.ssim,
        }

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "QualityReport":
        ssim_value = record.get("ssim")
        return cls(
            l0=int(record["l0"]),
            psnr=float(record["psnr"]),
            ssim=math.nan if ssim_value is None else float(ssim_value),
        )


def _check_same_shape(a: Image, b: Image) -> None:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"image shapes differ: {a.shape} vs {b.shape}")


def l0_distance(a: Image, b: Image) -> int:
    """Number of pixel locations where any channel was altered"""
    return int(diff_mask(a, b).sum())


def mean_squared_error(a: Image, b: Image) -> float:
    """MSE over all H x W x 3 components"""
    _check_same_shape(a, b)
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    return float(np.mean(diff ** 2))


def psnr(a: Image, b: Image) -> float:
    """Peak signal-to-noise ratio in dB with MAX = 255; +inf for identical images"""
    mse = mean_squared_error(a, b)
    if mse == 0:
        return math.inf
    return 10.0 * math.log10(MAX_VALUE ** 2 / mse)


def ssim(a: Image, b: Image) -> float:
    """Mean SSIM, computed per channel then averaged"""
    _check_same_shape(a, b)
    if a.height < SSIM_WINDOW or a.width < SSIM_WINDOW:
        raise ImageTooSmallError(
            f"SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW} pixels, got {a.height}x{a.width}"
        )
    if a == b:
        return 1.0
    value = structural_similarity(
        a.pixels.astype(np.float64),
        b.pixels.astype(np.float64),
        win_size=SSIM_WINDOW,
        gaussian_weights=True,
        sigma=SSIM_SIGMA,
        use_sample_covariance=False,
        K1=SSIM_K1,
        K2=SSIM_K2,
        data_range=MAX_VALUE,
        channel_axis=2,
    )
    return float(value)


def quality_report(original: Image, adversarial: Image) -> QualityReport:
    """L0/PSNR/SSIM of an adversarial image; SSIM is NaN when the image is below the window size"""
    try:
        similarity = ssim(original, adversarial)
    except ImageTooSmallError:
        similarity = math.nan
    return QualityReport(
        l0=l0_distance(original, adversarial),
        psnr=psnr(original, adversarial),
        ssim=similarity,
    )
