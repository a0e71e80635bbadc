"""
Single-Pixel Attack
k-pixel perturbation over a chosen region, with k growing along a schedule
"""
import logging
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.attacks.outcome import AttackOutcome, FailureReason, establish_original
from src.core.image import MAX_VALUE, Image, PixelCoord, coord_arrays, masked_average_rgb
from src.oracle.detectors import DetectorOracle
from src.oracle.verdict import Verdict, is_attack_success
from src.regions.masks import RegionKind, SubjectMask, region_pixels

logger = logging.getLogger(__name__)

DEFAULT_SCHEDULE = [10, 50, 100, 200, 500, 1000, 1500, 2000]


class SpPerturbKind(str, Enum):
    SET_ZERO = "0"
    SET_MAX = "255"
    DOUBLE = "x2"
    AVERAGE = "avg"


class SpConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    region: RegionKind = RegionKind.SUBJECT
    perturb: SpPerturbKind = SpPerturbKind.SET_MAX
    schedule: List[int] = Field(default_factory=lambda: list(DEFAULT_SCHEDULE), min_length=1)

    @field_validator("schedule")
    @classmethod
    def _strictly_increasing(cls, value: List[int]) -> List[int]:
        if value[0] < 0 or any(b <= a for a, b in zip(value, value[1:])):
            raise ValueError("schedule must be non-negative and strictly increasing")
        return value


def perturb_pixels(image: Image, coords: Sequence[PixelCoord], kind: SpPerturbKind,
                   mask: Optional[SubjectMask] = None) -> Image:
    """
    Copy of the image with only the listed pixels changed.

    AVERAGE fills with the mean colour of the subject region and needs a mask.
    """
    kind = SpPerturbKind(kind)
    if not coords:
        return image
    if kind is SpPerturbKind.SET_ZERO:
        return image.with_pixels(coords, (0, 0, 0))
    if kind is SpPerturbKind.SET_MAX:
        return image.with_pixels(coords, (MAX_VALUE, MAX_VALUE, MAX_VALUE))
    if kind is SpPerturbKind.AVERAGE:
        if mask is None:
            raise ValueError("average perturbation needs a subject mask")
        return image.with_pixels(coords, masked_average_rgb(image, mask.bits))

    rows, cols = coord_arrays(coords, image.height, image.width)
    arr = image.pixels.astype(np.int32)
    arr[rows, cols] = np.minimum(arr[rows, cols] * 2, MAX_VALUE)
    return Image(arr.astype(np.uint8))


def _ordering(mask: SubjectMask, region: RegionKind, rng: np.random.Generator) -> List[PixelCoord]:
    coords = region_pixels(mask, region, rng)
    if region is RegionKind.RANDOM:
        return coords
    return [coords[i] for i in rng.permutation(len(coords))]


def sp_attack(image: Image, mask: SubjectMask, region: RegionKind, kind: SpPerturbKind,
              oracle: DetectorOracle, seed: int, schedule: Optional[Sequence[int]] = None,
              original_verdict: Optional[Verdict] = None) -> AttackOutcome:
    """
    Perturb the first k pixels of one seeded ordering of the region for each k.

    Every k starts from a fresh copy of the original, so perturbed sets are
    nested along the schedule.
    """
    config = SpConfig(region=region, perturb=kind, schedule=list(schedule or DEFAULT_SCHEDULE))
    original_verdict, spent = establish_original(oracle, image, original_verdict)

    rng = np.random.default_rng(seed)
    ordering = _ordering(mask, config.region, rng)
    params = {
        "attack": "sp",
        "region": config.region.value,
        "perturb": config.perturb.value,
        "seed": seed,
    }

    queries = spent
    for index, k in enumerate(config.schedule):
        candidate = perturb_pixels(image, ordering[:k], config.perturb, mask)
        verdict = oracle.classify(candidate)
        queries += 1
        if is_attack_success(original_verdict, verdict):
            logger.info("sp %s/%s succeeded at k=%d after %d queries",
                        config.region.value, config.perturb.value, k, queries)
            return AttackOutcome.success(image, candidate, queries=queries, rounds=index + 1,
                                         params={**params, "k": k})

    logger.info("sp %s/%s failed over %d schedule points", config.region.value, config.perturb.value,
                len(config.schedule))
    return AttackOutcome.failure(FailureReason.SCHEDULE_EXHAUSTED, queries=queries,
                                 rounds=len(config.schedule),
                                 params={**params, "schedule": config.schedule})
