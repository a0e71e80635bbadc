"""Tests for the subject-based boundary attack"""
import numpy as np
import pytest

from src.attacks.boundary import SbbConfig, recover, recover_step, sbb, sbb_init
from src.attacks.outcome import FailureReason
from src.core.errors import EmptyRegionError, PreconditionNotIllegalError
from src.core.image import Image, PixelCoord
from src.defenses.wrappers import Granularity, round_confidence
from src.metrics.quality import l0_distance
from src.oracle.detectors import make_mask_coverage_mock
from src.regions.masks import SubjectMask


def test_init_fills_subject_with_background_mean() -> None:
    arr = np.zeros((4, 4, 3), dtype=np.uint8)
    arr[:2] = (90, 20, 10)
    arr[3] = 255
    bits = np.zeros((4, 4), dtype=bool)
    bits[:2] = True
    filled = sbb_init(Image(arr), SubjectMask(bits))
    assert filled.pixel(PixelCoord(0, 0)) == (128, 128, 128)
    assert filled.pixel(PixelCoord(3, 3)) == (255, 255, 255)


def test_init_with_uniform_background(boundary_case) -> None:
    image, mask = boundary_case
    filled = sbb_init(image, mask)
    assert {filled.pixel(c) for c in mask.coords()} == {(10, 10, 10)}
    assert l0_distance(image, filled) == 1000


def test_init_needs_both_regions() -> None:
    image = Image.filled(3, 3, (1, 1, 1))
    with pytest.raises(EmptyRegionError):
        sbb_init(image, SubjectMask(np.zeros((3, 3), dtype=bool)))
    with pytest.raises(EmptyRegionError):
        sbb_init(image, SubjectMask(np.ones((3, 3), dtype=bool)))


def test_recover_step_schedule() -> None:
    assert [recover_step(l0) for l0 in (1000, 800, 620, 458, 313)] == [200, 180, 162, 145, 131]


def test_recover_restores_original_pixels(boundary_case) -> None:
    image, mask = boundary_case
    adv = sbb_init(image, mask)
    partial = recover(200, image, adv, seed=3)
    assert l0_distance(image, partial) == 800
    assert recover(200, image, adv, seed=3) == partial
    assert recover(5000, image, adv, seed=3) == image
    with pytest.raises(ValueError):
        recover(0, image, adv, seed=3)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_recovery_trajectory(boundary_case, seed) -> None:
    image, mask = boundary_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.85)
    outcome = sbb(image, mask, oracle, seed=seed, original_verdict=oracle.classify(image))

    assert outcome.succeeded
    assert [p.l0 for p in outcome.trajectory] == [1000, 800, 620, 458, 313, 182]
    assert outcome.queries == 181
    assert outcome.rounds == 6
    assert outcome.params["recovered_fraction"] == pytest.approx(0.818)
    assert outcome.quality.l0 == 182
    confidences = [p.confidence for p in outcome.trajectory]
    assert confidences == sorted(confidences)


def test_quality_gate(boundary_case) -> None:
    image, mask = boundary_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.5)
    outcome = sbb(image, mask, oracle, seed=0, original_verdict=oracle.classify(image))
    assert not outcome.succeeded
    assert outcome.reason is FailureReason.QUALITY_GATE
    assert outcome.quality.l0 == 620
    assert outcome.queries == 91
    assert outcome.adversarial is not None


def test_initial_perturbation_insufficient(boundary_case) -> None:
    image, mask = boundary_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.0)
    outcome = sbb(image, mask, oracle, original_verdict=oracle.classify(image))
    assert outcome.reason is FailureReason.INITIAL_PERTURBATION_INSUFFICIENT
    assert outcome.queries == 1


def test_label_only_feedback_still_runs(boundary_case) -> None:
    image, mask = boundary_case
    oracle = round_confidence(make_mask_coverage_mock(image, mask, tau=0.85), Granularity.LABEL_ONLY)
    outcome = sbb(image, mask, oracle, seed=0)
    assert outcome.succeeded
    assert outcome.quality.l0 == 182
    assert outcome.queries == 182


def test_requires_illegal_original(boundary_case) -> None:
    image, mask = boundary_case
    oracle = make_mask_coverage_mock(image, mask, tau=0.5)
    with pytest.raises(PreconditionNotIllegalError):
        sbb(sbb_init(image, mask), mask, oracle)


def test_gate_bounds() -> None:
    with pytest.raises(ValueError):
        SbbConfig(gate=0)
