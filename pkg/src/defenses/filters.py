"""
Denoising Filters
3x3 Gaussian and median filters placed in front of a detector
"""
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import ndimage

from src.core.image import Image, clip_channels

DEFAULT_SIZE = 3
DEFAULT_SIGMA = 1.0


class FilterKind(str, Enum):
    GAUSSIAN = "gaussian"
    MEDIAN = "median"


class FilterSpec(BaseModel):
    """Filter choice with its window; sigma only applies to the Gaussian"""
    model_config = ConfigDict(frozen=True)

    kind: FilterKind
    size: int = Field(default=DEFAULT_SIZE, ge=1)
    sigma: float = Field(default=DEFAULT_SIGMA, gt=0)

    @field_validator("size")
    @classmethod
    def _odd_window(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f"filter window must be odd, got {value}")
        return value


def gaussian_kernel(size: int = DEFAULT_SIZE, sigma: float = DEFAULT_SIGMA) -> np.ndarray:
    """Normalized size x size Gaussian weights"""
    offsets = np.arange(size) - size // 2
    g = np.exp(-(offsets.astype(np.float64) ** 2) / (2.0 * sigma ** 2))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def gaussian_filter(image: Image, size: int = DEFAULT_SIZE, sigma: float = DEFAULT_SIGMA) -> Image:
    """Per-channel Gaussian smoothing with border replication, rounded half-up"""
    weights = gaussian_kernel(size, sigma)[..., None]
    smoothed = ndimage.correlate(image.pixels.astype(np.float64), weights, mode="nearest")
    return clip_channels(smoothed)


def median_filter(image: Image, size: int = DEFAULT_SIZE) -> Image:
    """Per-channel median with border replication"""
    filtered = ndimage.median_filter(image.pixels, size=(size, size, 1), mode="nearest")
    return Image(filtered)


def apply_filter(image: Image, spec: FilterSpec) -> Image:
    if spec.kind is FilterKind.GAUSSIAN:
        return gaussian_filter(image, spec.size, spec.sigma)
    return median_filter(image, spec.size)
