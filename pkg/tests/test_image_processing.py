"""Tests for the image-processing transforms and their sweep"""
import numpy as np
import pytest

from src.attacks.image_processing import (
    IpAttackKind,
    IpParams,
    binarize,
    brightness,
    gaussian_noise,
    grayscale,
    ip_sweep,
    salt_pepper,
)
from src.attacks.outcome import FailureReason
from src.core.errors import PreconditionNotIllegalError
from src.core.image import Image, PixelCoord
from src.oracle.detectors import make_mean_intensity_mock


@pytest.fixture
def magenta_patch() -> Image:
    """Mean intensity 0.917; grayscale drops it to 0.853"""
    image = Image.filled(10, 10, (255, 255, 255))
    return image.with_pixels([(r, c) for r in range(5) for c in range(5)], (255, 0, 255))


def test_gaussian_without_spread_is_a_shift() -> None:
    image = Image.filled(4, 4, (250, 100, 0))
    assert gaussian_noise(image, sigma=0, mu=0, seed=1) == image
    shifted = gaussian_noise(image, sigma=0, mu=10, seed=1)
    assert shifted.pixel(PixelCoord(0, 0)) == (255, 110, 10)


def test_gaussian_noise_mean_shift_is_small() -> None:
    image = Image.filled(100, 100, (128, 128, 128))
    noisy = gaussian_noise(image, sigma=25, mu=0, seed=3)
    shift = noisy.pixels.astype(np.float64).mean() - 128
    assert abs(shift) <= 25 * 3 / np.sqrt(image.pixels.size)


def test_gaussian_noise_is_seeded(random_image) -> None:
    image = random_image(16, 16, seed=2)
    assert gaussian_noise(image, 25, 0, seed=9) == gaussian_noise(image, 25, 0, seed=9)
    assert gaussian_noise(image, 25, 0, seed=9) != gaussian_noise(image, 25, 0, seed=10)


def test_grayscale_luma() -> None:
    red = grayscale(Image.filled(1, 1, (255, 0, 0)))
    green = grayscale(Image.filled(1, 1, (0, 255, 0)))
    assert red.pixel(PixelCoord(0, 0)) == (76, 76, 76)
    assert green.pixel(PixelCoord(0, 0)) == (150, 150, 150)
    white = Image.filled(2, 2, (255, 255, 255))
    assert grayscale(white) == white


def test_grayscale_is_idempotent(random_image) -> None:
    once = grayscale(random_image(12, 12, seed=4))
    assert grayscale(once) == once


def test_binarize_extremes_are_fixed() -> None:
    black = Image.filled(6, 6, (0, 0, 0))
    white = Image.filled(6, 6, (255, 255, 255))
    assert binarize(black) == black
    assert binarize(white) == white


def test_binarize_preserves_mean_grey() -> None:
    result = binarize(Image.filled(64, 64, (128, 128, 128)))
    assert set(np.unique(result.pixels).tolist()) <= {0, 255}
    assert abs(result.pixels.mean() - 128) <= 2


def test_binarize_diffuses_error_in_scan_order() -> None:
    result = binarize(Image.filled(2, 2, (100, 100, 100)))
    assert result.pixels[..., 0].tolist() == [[0, 255], [0, 0]]
    assert np.all(result.pixels[..., 1] == result.pixels[..., 0])


def test_binarize_is_idempotent(random_image) -> None:
    once = binarize(random_image(16, 16, seed=8))
    assert binarize(once) == once


def test_salt_pepper_extremes(random_image) -> None:
    image = random_image(20, 20, seed=5)
    assert salt_pepper(image, 0.0, seed=1) == image
    noisy = salt_pepper(image, 1.0, seed=1)
    per_pixel = noisy.pixels.reshape(-1, 3)
    assert all(tuple(px) in {(0, 0, 0), (255, 255, 255)} for px in per_pixel.tolist())


@pytest.mark.parametrize("p", [0.05, 0.1, 0.3])
def test_salt_pepper_fraction_matches_p(p) -> None:
    image = Image.filled(100, 100, (128, 128, 128))
    noisy = salt_pepper(image, p, seed=0)
    altered = np.any(noisy.pixels != image.pixels, axis=2).mean()
    tolerance = 4 * np.sqrt(p * (1 - p) / 10000)
    assert abs(altered - p) <= tolerance


def test_salt_pepper_touches_only_selected_pixels(random_image) -> None:
    image = random_image(30, 30, seed=6)
    noisy = salt_pepper(image, 0.2, seed=11)
    selected = np.random.default_rng(11).random((30, 30)) < 0.2
    changed = np.any(noisy.pixels != image.pixels, axis=2)
    assert not np.any(changed & ~selected)


def test_brightness_shift_and_clip() -> None:
    assert brightness(Image.filled(1, 1, (100, 0, 250)), 0.2).pixel(PixelCoord(0, 0)) == (151, 51, 255)
    assert brightness(Image.filled(1, 1, (200, 200, 200)), 0.5).pixel(PixelCoord(0, 0)) == (255, 255, 255)
    image = Image.filled(2, 2, (7, 8, 9))
    assert brightness(image, 0.0) == image


def test_sweep_succeeds_on_first_point(magenta_patch) -> None:
    oracle = make_mean_intensity_mock(tau=0.9)
    original = oracle.classify(magenta_patch)
    outcome = ip_sweep(magenta_patch, oracle, original, IpAttackKind.GRAYSCALE)
    assert outcome.succeeded
    assert outcome.queries == 1
    assert outcome.quality.l0 == 25


def test_sweep_exhausts_schedule(magenta_patch) -> None:
    oracle = make_mean_intensity_mock(tau=0.9)
    original = oracle.classify(magenta_patch)
    outcome = ip_sweep(magenta_patch, oracle, original, IpAttackKind.BRIGHTNESS)
    assert not outcome.succeeded
    assert outcome.reason is FailureReason.SCHEDULE_EXHAUSTED
    assert outcome.queries == 8
    assert oracle.ledger.used == 1 + 8


def test_sweep_with_explicit_schedule(magenta_patch) -> None:
    oracle = make_mean_intensity_mock(tau=0.9)
    original = oracle.classify(magenta_patch)
    outcome = ip_sweep(magenta_patch, oracle, original, IpAttackKind.SALT_PEPPER,
                       schedule=[0.0, 0.0, 1.0], params=IpParams(seed=4))
    assert outcome.succeeded
    assert outcome.queries == 3
    assert outcome.params["value"] == 1.0


def test_sweep_requires_illegal_original() -> None:
    oracle = make_mean_intensity_mock(tau=0.9)
    dark = Image.filled(4, 4, (0, 0, 0))
    with pytest.raises(PreconditionNotIllegalError):
        ip_sweep(dark, oracle, oracle.classify(dark), IpAttackKind.GRAYSCALE)
