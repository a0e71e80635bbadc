"""
Image-Processing Attacks
Single-shot transforms used directly as adversarial images, plus the parameter sweep
"""
import logging
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from numba import njit
from pydantic import BaseModel, ConfigDict, Field

from src.attacks.outcome import AttackOutcome, FailureReason
from src.core.errors import PreconditionNotIllegalError
from src.core.image import CHANNELS, MAX_VALUE, Image, clip_channels, round_half_up
from src.oracle.detectors import DetectorOracle
from src.oracle.verdict import Verdict, is_attack_success

logger = logging.getLogger(__name__)

# Integer luma weights (x1000) so rounding is exact half-up
LUMA_WEIGHTS = (299, 587, 114)
BINARY_THRESHOLD = 128

DEFAULT_SIGMA = 25.0
P_SCHEDULE = [round(0.05 * i, 2) for i in range(1, 11)]
EPSILON_SCHEDULE = [round(0.1 * i, 1) for i in range(1, 9)]


class IpAttackKind(str, Enum):
    GAUSSIAN = "gaussian"
    GRAYSCALE = "gray"
    BINARIZE = "binary"
    SALT_PEPPER = "saltpepper"
    BRIGHTNESS = "bright"


class IpParams(BaseModel):
    """Parameters of the image-processing transforms"""
    model_config = ConfigDict(frozen=True)

    sigma: float = Field(default=DEFAULT_SIGMA, ge=0)
    mu: float = 0.0
    p: float = Field(default=0.05, ge=0, le=1)
    epsilon: float = Field(default=0.1, ge=0, le=1)
    seed: int = 0


def gaussian_noise(image: Image, sigma: float, mu: float, seed: int) -> Image:
    """Add i.i.d. normal noise to every component, then clip"""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    rng = np.random.default_rng(seed)
    noise = rng.normal(loc=mu, scale=sigma, size=image.shape)
    return clip_channels(image.pixels.astype(np.float64) + noise)


def _luma(image: Image) -> np.ndarray:
    rgb = image.pixels.astype(np.int64)
    weighted = rgb[..., 0] * LUMA_WEIGHTS[0] + rgb[..., 1] * LUMA_WEIGHTS[1] + rgb[..., 2] * LUMA_WEIGHTS[2]
    return (weighted + 500) // 1000


def _replicate(gray: np.ndarray) -> Image:
    return Image(np.repeat(gray.astype(np.uint8)[..., None], CHANNELS, axis=2))


def grayscale(image: Image) -> Image:
    """Luma replicated into all three channels"""
    return _replicate(_luma(image))


@njit(cache=True)
def _diffuse_errors(work: np.ndarray) -> np.ndarray:
    """Floyd-Steinberg in place over a float luma plane; pixels visited in row-major order"""
    height, width = work.shape
    for r in range(height):
        for c in range(width):
            old = work[r, c]
            new = MAX_VALUE if old >= BINARY_THRESHOLD else 0
            work[r, c] = new
            err = old - new
            if c + 1 < width:
                work[r, c + 1] += err * 7 / 16
            if r + 1 < height:
                if c > 0:
                    work[r + 1, c - 1] += err * 3 / 16
                work[r + 1, c] += err * 5 / 16
                if c + 1 < width:
                    work[r + 1, c + 1] += err * 1 / 16
    return work


def binarize(image: Image) -> Image:
    """Grayscale followed by Floyd-Steinberg error diffusion to {0, 255}"""
    return _replicate(_diffuse_errors(_luma(image).astype(np.float64)))


def salt_pepper(image: Image, p: float, seed: int) -> Image:
    """Replace each pixel with probability p by black or white, equally likely"""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    selected = rng.random((image.height, image.width)) < p
    white = rng.random((image.height, image.width)) < 0.5
    arr = image.to_array()
    arr[selected & white] = MAX_VALUE
    arr[selected & ~white] = 0
    return Image(arr)


def brightness(image: Image, epsilon: float) -> Image:
    """Add round(epsilon * 255) to every component, then clip"""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
    shift = int(round_half_up(epsilon * MAX_VALUE))
    return Image(np.clip(image.pixels.astype(np.int32) + shift, 0, MAX_VALUE).astype(np.uint8))


def apply_ip_attack(kind: IpAttackKind, image: Image, value: Optional[float], params: IpParams) -> Image:
    """
    Apply one transform at one schedule point.

    `value` is sigma for Gaussian noise, p for salt-and-pepper and epsilon for
    brightness; grayscale and binarize ignore it.
    """
    kind = IpAttackKind(kind)
    if kind is IpAttackKind.GAUSSIAN:
        return gaussian_noise(image, params.sigma if value is None else value, params.mu, params.seed)
    if kind is IpAttackKind.GRAYSCALE:
        return grayscale(image)
    if kind is IpAttackKind.BINARIZE:
        return binarize(image)
    if kind is IpAttackKind.SALT_PEPPER:
        return salt_pepper(image, params.p if value is None else value, params.seed)
    return brightness(image, params.epsilon if value is None else value)


def default_schedule(kind: IpAttackKind, params: Optional[IpParams] = None) -> List[Optional[float]]:
    params = params or IpParams()
    kind = IpAttackKind(kind)
    if kind is IpAttackKind.SALT_PEPPER:
        return list(P_SCHEDULE)
    if kind is IpAttackKind.BRIGHTNESS:
        return list(EPSILON_SCHEDULE)
    if kind is IpAttackKind.GAUSSIAN:
        return [params.sigma]
    return [None]


def ip_sweep(image: Image, oracle: DetectorOracle, original_verdict: Verdict, kind: IpAttackKind,
             schedule: Optional[Sequence[Optional[float]]] = None,
             params: Optional[IpParams] = None) -> AttackOutcome:
    """Query each schedule point in order and stop at the first flip"""
    if not original_verdict.illegal:
        raise PreconditionNotIllegalError("original image is already judged normal")
    kind = IpAttackKind(kind)
    params = params or IpParams()
    points = list(schedule) if schedule is not None else default_schedule(kind, params)

    for index, value in enumerate(points):
        candidate = apply_ip_attack(kind, image, value, params)
        verdict = oracle.classify(candidate)
        if is_attack_success(original_verdict, verdict):
            logger.info("%s flipped the verdict at %s after %d queries", kind.value, value, index + 1)
            return AttackOutcome.success(
                image, candidate, queries=index + 1, rounds=index + 1,
                params={"attack": "ip", "kind": kind.value, "value": value, "seed": params.seed},
            )

    logger.info("%s schedule exhausted after %d queries", kind.value, len(points))
    return AttackOutcome.failure(
        FailureReason.SCHEDULE_EXHAUSTED, queries=len(points), rounds=len(points),
        params={"attack": "ip", "kind": kind.value, "schedule": points, "seed": params.seed},
    )
