"""
Subject-based Boundary Attack
Start from a fully perturbed subject and greedily restore original pixels while the verdict stays normal
"""
import logging
from typing import List, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.attacks.outcome import AttackOutcome, FailureReason, TrajectoryPoint, establish_original
from src.core.errors import EmptyRegionError
from src.core.image import Image, diff_mask, masked_average_rgb
from src.metrics.quality import l0_distance
from src.oracle.detectors import DetectorOracle
from src.oracle.verdict import Verdict, illegal_confidence, is_attack_success
from src.regions.masks import SubjectMask

logger = logging.getLogger(__name__)

STEP_BASE = 100
STEP_DIVISOR = 10

SeedLike = Union[int, np.random.Generator]


class SbbConfig(BaseModel):
    """Round cap, candidates per round and the minimum recovered fraction"""
    model_config = ConfigDict(frozen=True)

    rounds: int = Field(default=30, ge=1)
    candidates: int = Field(default=30, ge=1)
    gate: float = Field(default=0.8, gt=0, le=1)


def sbb_init(image: Image, mask: SubjectMask) -> Image:
    """Fill every subject pixel with the mean colour of the non-subject region"""
    if mask.subject_size == 0:
        raise EmptyRegionError("subject region is empty")
    if mask.subject_size == mask.height * mask.width:
        raise EmptyRegionError("non-subject region is empty")
    fill = masked_average_rgb(image, ~mask.bits)
    arr = image.to_array()
    arr[mask.bits] = np.asarray(fill, dtype=np.uint8)
    return Image(arr)


def recover_step(l0: int) -> int:
    return l0 // STEP_DIVISOR + STEP_BASE


def recover(step: int, original: Image, adv: Image, seed: SeedLike) -> Image:
    """Restore min(step, |diff|) differing pixels, chosen uniformly without replacement"""
    if step < 1:
        raise ValueError(f"step must be at least 1, got {step}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    changed = np.argwhere(diff_mask(original, adv))
    if len(changed) == 0:
        return adv
    picks = rng.choice(len(changed), size=min(step, len(changed)), replace=False)
    rows, cols = changed[picks, 0], changed[picks, 1]
    arr = adv.to_array()
    arr[rows, cols] = original.pixels[rows, cols]
    return Image(arr)


def sbb(image: Image, mask: SubjectMask, oracle: DetectorOracle, config: Optional[SbbConfig] = None,
        seed: int = 0, original_verdict: Optional[Verdict] = None) -> AttackOutcome:
    """
    Greedy recovery from the fully perturbed subject.

    Candidates of one round all recover from the same parent; among those
    judged normal the one with the lowest illegal confidence is kept. The
    run stops at the first round without a normal candidate.
    """
    config = config or SbbConfig()
    original_verdict, spent = establish_original(oracle, image, original_verdict)
    params = {"attack": "sbb", "seed": seed, **config.model_dump()}

    initial = sbb_init(image, mask)
    verdict = oracle.classify(initial)
    queries = spent + 1
    if not is_attack_success(original_verdict, verdict):
        logger.info("sbb initial perturbation did not flip the verdict")
        return AttackOutcome.failure(FailureReason.INITIAL_PERTURBATION_INSUFFICIENT, queries=queries,
                                     original=image, adversarial=initial, params=params)

    initial_l0 = l0_distance(image, initial)
    trajectory: List[TrajectoryPoint] = [TrajectoryPoint(0, initial_l0, illegal_confidence(verdict))]
    master = np.random.default_rng(seed)
    adv = initial
    rounds = 0
    for round_no in range(1, config.rounds + 1):
        current_l0 = l0_distance(image, adv)
        if current_l0 == 0:
            break
        step = recover_step(current_l0)
        sub_seeds = master.integers(0, np.iinfo(np.int64).max, size=config.candidates)
        rounds = round_no

        best: Optional[Image] = None
        best_confidence = 0.0
        for sub_seed in sub_seeds:
            candidate = recover(step, image, adv, int(sub_seed))
            verdict = oracle.classify(candidate)
            queries += 1
            if not is_attack_success(original_verdict, verdict):
                continue
            confidence = illegal_confidence(verdict)
            if best is None or confidence < best_confidence:
                best, best_confidence = candidate, confidence

        if best is None:
            logger.debug("sbb round %d: no normal candidate at step %d", round_no, step)
            break
        adv = best
        trajectory.append(TrajectoryPoint(round_no, l0_distance(image, adv), best_confidence))
        logger.debug("sbb round %d: l0 %d, confidence %.4f", round_no, trajectory[-1].l0, best_confidence)

    final_l0 = l0_distance(image, adv)
    recovered = 1.0 - final_l0 / initial_l0 if initial_l0 else 1.0
    params["initial_l0"] = initial_l0
    params["recovered_fraction"] = recovered

    if recovered >= config.gate:
        logger.info("sbb recovered %.3f of the subject after %d queries", recovered, queries)
        return AttackOutcome.success(image, adv, queries=queries, rounds=rounds, params=params,
                                     trajectory=trajectory)

    logger.info("sbb recovered only %.3f (< %.2f) after %d queries", recovered, config.gate, queries)
    return AttackOutcome.failure(FailureReason.QUALITY_GATE, queries=queries, rounds=rounds,
                                 original=image, adversarial=adv, params=params, trajectory=trajectory,
                                 detail=f"recovered fraction {recovered:.3f} below gate {config.gate}")
