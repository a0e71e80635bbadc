"""Tests for the k-pixel region attack"""
import math
import statistics

import numpy as np
import pytest
from pydantic import ValidationError

from src.attacks.outcome import FailureReason
from src.attacks.single_pixel import SpConfig, SpPerturbKind, perturb_pixels, sp_attack
from src.core.image import Image, PixelCoord, pixel_diff_set
from src.oracle.detectors import make_mask_coverage_mock, make_mean_intensity_mock
from src.regions.masks import RegionKind, SubjectMask


def test_perturb_nothing_is_identity(random_image) -> None:
    image = random_image(5, 5)
    assert perturb_pixels(image, [], SpPerturbKind.SET_ZERO) == image


def test_double_saturates() -> None:
    image = Image.filled(2, 2, (200, 10, 0))
    doubled = perturb_pixels(image, [PixelCoord(0, 1)], SpPerturbKind.DOUBLE)
    assert doubled.pixel(PixelCoord(0, 1)) == (255, 20, 0)
    assert doubled.pixel(PixelCoord(0, 0)) == (200, 10, 0)


def test_set_max_changes_exactly_k_pixels(random_image) -> None:
    image = random_image(10, 10, high=200)
    coords = [PixelCoord(r, r) for r in range(7)]
    assert pixel_diff_set(image, perturb_pixels(image, coords, SpPerturbKind.SET_MAX)) == set(coords)


def test_average_uses_subject_colour(region_case) -> None:
    image, mask = region_case
    filled = perturb_pixels(image, [PixelCoord(0, 0)], SpPerturbKind.AVERAGE, mask)
    assert filled.pixel(PixelCoord(0, 0)) == (200, 100, 50)
    with pytest.raises(ValueError):
        perturb_pixels(image, [PixelCoord(0, 0)], SpPerturbKind.AVERAGE)


def test_random_region_on_bright_image() -> None:
    image = Image.filled(10, 10, (255, 255, 255))
    oracle = make_mean_intensity_mock(tau=0.9)
    original = oracle.classify(image)
    outcome = sp_attack(image, SubjectMask(np.zeros((10, 10), dtype=bool)), RegionKind.RANDOM,
                        SpPerturbKind.SET_ZERO, oracle, seed=0, original_verdict=original)
    assert outcome.succeeded
    assert outcome.params["k"] == 50
    assert outcome.queries == 2
    assert outcome.quality.l0 == 50


def test_subject_region_flips_at_full_coverage(region_case) -> None:
    image, mask = region_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.5)
    outcome = sp_attack(image, mask, RegionKind.SUBJECT, SpPerturbKind.SET_ZERO, oracle, seed=3,
                        original_verdict=oracle.classify(image))
    assert outcome.succeeded
    assert outcome.params["k"] == 100
    assert outcome.queries == 3
    assert pixel_diff_set(image, outcome.adversarial) == set(mask.coords())


def test_original_query_is_counted(region_case) -> None:
    image, mask = region_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.5)
    outcome = sp_attack(image, mask, RegionKind.SUBJECT, SpPerturbKind.SET_ZERO, oracle, seed=3)
    assert outcome.queries == 4
    assert oracle.ledger.used == 4


def test_nonsubject_region_never_flips(region_case) -> None:
    image, mask = region_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.5)
    outcome = sp_attack(image, mask, RegionKind.NONSUBJECT, SpPerturbKind.SET_ZERO, oracle, seed=0,
                        original_verdict=oracle.classify(image))
    assert not outcome.succeeded
    assert outcome.reason is FailureReason.SCHEDULE_EXHAUSTED
    assert outcome.queries == 8


def test_subject_region_beats_random(region_case) -> None:
    image, mask = region_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.5)
    original = oracle.classify(image)

    def k_at_success(region: RegionKind, seed: int) -> float:
        outcome = sp_attack(image, mask, region, SpPerturbKind.SET_ZERO, oracle, seed=seed,
                            original_verdict=original)
        return outcome.params["k"] if outcome.succeeded else math.inf

    subject = [k_at_success(RegionKind.SUBJECT, seed) for seed in range(100)]
    random = [k_at_success(RegionKind.RANDOM, seed) for seed in range(100)]
    assert set(subject) == {100}
    assert statistics.median(random) >= statistics.median(subject)


def test_same_seed_same_adversarial(region_case) -> None:
    image, mask = region_case
    runs = []
    for _ in range(2):
        oracle = make_mask_coverage_mock(image, mask, tau=0.5)
        runs.append(sp_attack(image, mask, RegionKind.RANDOM, SpPerturbKind.SET_ZERO, oracle, seed=12))
    assert runs[0].queries == runs[1].queries
    assert runs[0].adversarial == runs[1].adversarial


def test_schedule_must_increase() -> None:
    with pytest.raises(ValidationError):
        SpConfig(schedule=[10, 10, 50])
    with pytest.raises(ValidationError):
        SpConfig(schedule=[-1, 5])
