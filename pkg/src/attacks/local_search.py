"""
Subject-based Local Search Attack
Probe single-pixel changes inside the subject, commit the best few, grow the search area
"""
import logging
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.attacks.outcome import AttackOutcome, FailureReason, establish_original
from src.core.errors import EmptyRegionError, NoNumericConfidenceError
from src.core.image import Image
from src.oracle.detectors import DetectorOracle
from src.oracle.verdict import (
    NUMERIC_KINDS,
    Verdict,
    has_numeric_confidence,
    illegal_confidence,
    is_attack_success,
)
from src.regions.masks import SubjectMask, dilate, sample_pixels

logger = logging.getLogger(__name__)


class SblsConfig(BaseModel):
    """Round cap, dilation radius, perturb value, commits and probes per round"""
    model_config = ConfigDict(frozen=True)

    rounds: int = Field(default=30, ge=1)
    distance: int = Field(default=10, ge=0)
    perturb_value: Literal[0, 255] = 255
    commits: int = Field(default=10, ge=1)
    probes: int = Field(default=50, ge=1)

    @model_validator(mode="after")
    def _commits_within_probes(self) -> "SblsConfig":
        if self.commits > self.probes:
            raise ValueError(f"commits ({self.commits}) cannot exceed probes ({self.probes})")
        return self


def sbls(image: Image, mask: SubjectMask, oracle: DetectorOracle, config: Optional[SblsConfig] = None,
         seed: int = 0, original_verdict: Optional[Verdict] = None) -> AttackOutcome:
    """
    Greedy probe-and-commit search ranked by illegal confidence.

    Probes always perturb the current working image and never mutate it; the
    only mutation per round is the commit of the lowest-confidence probes.
    """
    config = config or SblsConfig()
    if oracle.kind not in NUMERIC_KINDS:
        raise NoNumericConfidenceError(f"local search ranks by confidence, detector returns {oracle.kind.value} feedback")
    original_verdict, spent = establish_original(oracle, image, original_verdict)
    if not has_numeric_confidence(original_verdict):
        raise NoNumericConfidenceError("original verdict carries no confidence")
    if mask.subject_size == 0:
        raise EmptyRegionError("local search needs a non-empty subject region")

    rng = np.random.default_rng(seed)
    value = (config.perturb_value,) * 3
    params = {"attack": "sbls", "seed": seed, **config.model_dump()}

    working = image
    sampling = mask
    queries = spent
    for round_no in range(1, config.rounds + 1):
        probes = sample_pixels(sampling, config.probes, rng)
        confidences = []
        for coord in probes:
            candidate = working.with_pixels([coord], value)
            verdict = oracle.classify(candidate)
            queries += 1
            if is_attack_success(original_verdict, verdict):
                logger.info("sbls probe flipped the verdict in round %d after %d queries", round_no, queries)
                return AttackOutcome.success(image, candidate, queries=queries, rounds=round_no, params=params)
            confidences.append(illegal_confidence(verdict))

        best = np.argsort(np.asarray(confidences), kind="stable")[:config.commits]
        working = working.with_pixels([probes[i] for i in best], value)
        verdict = oracle.classify(working)
        queries += 1
        if is_attack_success(original_verdict, verdict):
            logger.info("sbls commit flipped the verdict in round %d after %d queries", round_no, queries)
            return AttackOutcome.success(image, working, queries=queries, rounds=round_no, params=params)

        logger.debug("sbls round %d: confidence %.4f, %d queries", round_no, illegal_confidence(verdict), queries)
        sampling = dilate(sampling, config.distance)

    logger.info("sbls exhausted %d rounds after %d queries", config.rounds, queries)
    return AttackOutcome.failure(FailureReason.ROUNDS_EXHAUSTED, queries=queries, rounds=config.rounds,
                                 original=image, adversarial=working, params=params)
