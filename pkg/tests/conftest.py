"""Shared fixtures: small deterministic images, masks and oracles"""
from typing import Optional

import numpy as np
import pytest

from src.core.image import Image
from src.oracle.detectors import LedgeredOracle
from src.oracle.verdict import FeedbackKind, Verdict
from src.regions.masks import SubjectMask


class FixedOracle(LedgeredOracle):
    """Returns one canned verdict for every image"""

    def __init__(self, verdict: Verdict, budget: Optional[int] = None):
        super().__init__(budget)
        self.verdict = verdict

    @property
    def kind(self) -> FeedbackKind:
        return self.verdict.kind

    def _predict(self, image: Image) -> Verdict:
        return self.verdict


def block_mask(height: int, width: int, top: int, left: int, rows: int, cols: int) -> SubjectMask:
    bits = np.zeros((height, width), dtype=bool)
    bits[top:top + rows, left:left + cols] = True
    return SubjectMask(bits)


@pytest.fixture
def fixed_oracle():
    return FixedOracle


@pytest.fixture
def random_image():
    def make(height: int, width: int, seed: int = 0, low: int = 0, high: int = 256) -> Image:
        rng = np.random.default_rng(seed)
        return Image(rng.integers(low, high, size=(height, width, 3)).astype(np.uint8))
    return make


@pytest.fixture
def local_search_case():
    """10x10 image that is all subject; no channel reaches 255"""
    rng = np.random.default_rng(7)
    image = Image(rng.integers(0, 201, size=(10, 10, 3)).astype(np.uint8))
    mask = SubjectMask(np.ones((10, 10), dtype=bool))
    return image, mask


@pytest.fixture
def boundary_case():
    """40x40 image, 1000 subject pixels none of which match the background mean"""
    arr = np.empty((40, 40, 3), dtype=np.uint8)
    arr[:25] = (200, 50, 50)
    arr[25:] = (10, 10, 10)
    return Image(arr), block_mask(40, 40, 0, 0, 25, 40)


@pytest.fixture
def region_case():
    """50x50 image with a 10x10 subject block; no pixel is black"""
    arr = np.empty((50, 50, 3), dtype=np.uint8)
    arr[...] = (30, 30, 30)
    arr[20:30, 20:30] = (200, 100, 50)
    return Image(arr), block_mask(50, 50, 20, 20, 10, 10)
