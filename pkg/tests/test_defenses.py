"""Tests for denoising filters and the defensive oracle wrappers"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from src.attacks.image_processing import salt_pepper
from src.core.errors import BudgetExhaustedError
from src.core.image import Image, PixelCoord
from src.defenses.filters import FilterKind, FilterSpec, gaussian_filter, gaussian_kernel, median_filter
from src.defenses.wrappers import (
    Granularity,
    limit_queries,
    ordinal_level,
    round_confidence,
    wrap_with_filter,
)
from src.metrics.quality import psnr
from src.oracle.detectors import make_mean_intensity_mock
from src.oracle.verdict import FeedbackKind, OrdinalLevel, Verdict


def _ramp() -> Image:
    arr = np.zeros((64, 64, 3), dtype=np.uint8)
    arr[...] = (np.arange(64) * 4).astype(np.uint8)[None, :, None]
    return Image(arr)


@pytest.mark.parametrize("kind", list(FilterKind))
def test_filters_keep_constant_images(kind) -> None:
    image = Image.filled(9, 9, (200, 37, 5))
    result = gaussian_filter(image) if kind is FilterKind.GAUSSIAN else median_filter(image)
    assert result == image


def test_gaussian_impulse_response() -> None:
    image = Image.filled(5, 5, (0, 0, 0)).with_pixels([PixelCoord(2, 2)], (255, 255, 255))
    center = 1 / (1 + 2 * math.exp(-0.5)) ** 2
    assert gaussian_kernel()[1, 1] == pytest.approx(center)
    expected = math.floor(255 * center + 0.5)
    assert expected == 52
    assert gaussian_filter(image).pixel(PixelCoord(2, 2)) == (expected,) * 3


def test_median_removes_isolated_impulse() -> None:
    image = Image.filled(5, 5, (100, 100, 100))
    spiked = image.with_pixels([PixelCoord(2, 2)], (255, 255, 255))
    assert median_filter(spiked) == image


def test_median_on_checkerboard_takes_window_majority() -> None:
    rows, cols = np.indices((8, 8))
    board = np.where((rows + cols) % 2 == 0, 255, 0).astype(np.uint8)
    result = median_filter(Image(np.repeat(board[..., None], 3, axis=2)))

    padded = np.pad(board, 1, mode="edge")
    for r in range(8):
        for c in range(8):
            whites = int((padded[r:r + 3, c:c + 3] == 255).sum())
            assert result.pixels[r, c, 0] == (255 if whites >= 5 else 0)


def test_median_restores_sparse_impulses() -> None:
    image = Image.filled(64, 64, (128, 128, 128))
    noisy = salt_pepper(image, 0.05, seed=2)
    restored = median_filter(noisy)
    fixed = np.all(restored.pixels == image.pixels, axis=2).mean()
    assert fixed >= 0.99


@pytest.mark.parametrize("denoise", [median_filter, gaussian_filter], ids=["median", "gaussian"])
@pytest.mark.parametrize("p", [0.01, 0.05])
@pytest.mark.parametrize("clean", [Image.filled(64, 64, (128, 128, 128)), Image.filled(64, 64, (30, 200, 90)),
                                   _ramp()])
def test_filters_improve_psnr_under_impulses(clean, p, denoise) -> None:
    noisy = salt_pepper(clean, p, seed=7)
    assert psnr(denoise(noisy), clean) > psnr(noisy, clean)


def test_filter_window_must_be_odd() -> None:
    with pytest.raises(ValidationError):
        FilterSpec(kind=FilterKind.MEDIAN, size=4)


def test_filter_defeats_impulse_noise_attack() -> None:
    image = Image.filled(64, 64, (200, 200, 200))
    oracle = make_mean_intensity_mock(tau=0.7)
    defended = wrap_with_filter(oracle, FilterKind.MEDIAN)
    assert oracle.classify(image).illegal

    adversarial = salt_pepper(image, 0.4, seed=0)
    assert not oracle.classify(adversarial).illegal
    assert defended.classify(adversarial).illegal
    assert defended.ledger is oracle.ledger
    assert oracle.ledger.used == 3


def test_filter_is_transparent_on_constant_input() -> None:
    oracle = make_mean_intensity_mock(tau=0.5)
    image = Image.filled(8, 8, (150, 150, 150))
    assert wrap_with_filter(oracle, FilterKind.GAUSSIAN).classify(image) == oracle.classify(image)


def test_decimal_rounding(fixed_oracle) -> None:
    probability = round_confidence(fixed_oracle(Verdict("porn", True, FeedbackKind.PROBABILITY, 0.97)),
                                   Granularity.DECIMAL1)
    assert probability.classify(Image.filled(1, 1, (0, 0, 0))).confidence == 1.0

    score = round_confidence(fixed_oracle(Verdict("porn", True, FeedbackKind.SCORE, 87.0)), Granularity.DECIMAL1)
    assert score.classify(Image.filled(1, 1, (0, 0, 0))).confidence == 90.0


def test_ordinal_rounding(fixed_oracle) -> None:
    wrapped = round_confidence(fixed_oracle(Verdict("porn", True, FeedbackKind.PROBABILITY, 0.62)),
                               Granularity.ORDINAL5)
    verdict = wrapped.classify(Image.filled(1, 1, (0, 0, 0)))
    assert wrapped.kind is FeedbackKind.ORDINAL
    assert verdict.level is OrdinalLevel.LIKELY
    assert verdict.illegal


def test_label_only_strips_confidence(fixed_oracle) -> None:
    wrapped = round_confidence(fixed_oracle(Verdict("porn", True, FeedbackKind.PROBABILITY, 0.62)),
                               Granularity.LABEL_ONLY)
    verdict = wrapped.classify(Image.filled(1, 1, (0, 0, 0)))
    assert wrapped.kind is FeedbackKind.BINARY
    assert verdict.confidence is None and verdict.illegal


def test_ordinal_bins_are_monotone() -> None:
    grid = np.linspace(0.0, 1.0, 101)
    levels = [ordinal_level(float(c)) for c in grid]
    assert levels == sorted(levels)
    assert levels[0] is OrdinalLevel.VERY_UNLIKELY
    assert levels[-1] is OrdinalLevel.VERY_LIKELY


def test_rounding_shares_the_ledger(fixed_oracle) -> None:
    inner = fixed_oracle(Verdict("porn", True, FeedbackKind.PROBABILITY, 0.5))
    wrapped = round_confidence(inner, Granularity.DECIMAL1)
    wrapped.classify(Image.filled(1, 1, (0, 0, 0)))
    assert inner.ledger.used == 1


def test_query_limit() -> None:
    limited = limit_queries(make_mean_intensity_mock(0.5), 2)
    image = Image.filled(2, 2, (0, 0, 0))
    limited.classify(image)
    limited.classify(image)
    with pytest.raises(BudgetExhaustedError):
        limited.classify(image)
    with pytest.raises(ValueError):
        limit_queries(make_mean_intensity_mock(0.5), -1)
