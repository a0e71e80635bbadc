"""
Attack Outcomes
Result record shared by every attack and consumed by the harness
"""
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

from src.core.errors import PreconditionNotIllegalError
from src.core.image import Image
from src.metrics.quality import QualityReport, quality_report
from src.oracle.detectors import DetectorOracle
from src.oracle.verdict import Verdict


class AttackStatus(str, Enum):
    SUCCESS = "success"
    FAILURE = "failure"


class FailureReason(str, Enum):
    SCHEDULE_EXHAUSTED = "schedule_exhausted"
    ROUNDS_EXHAUSTED = "rounds_exhausted"
    QUALITY_GATE = "quality_gate"
    INITIAL_PERTURBATION_INSUFFICIENT = "initial_perturbation_insufficient"
    BUDGET_EXHAUSTED = "budget_exhausted"
    ERROR = "error"


@dataclass(frozen=True)
class TrajectoryPoint:
    """State after one accepted SBB round"""
    round: int
    l0: int
    confidence: float

    def to_dict(self) -> Dict[str, Any]:
        return {"round": self.round, "l0": self.l0, "confidence": self.confidence}


@dataclass
class AttackOutcome:
    """
    Result of one attack on one image.

    A success always carries the adversarial image and its quality; a failure
    may still carry the last image (quality gate) and always the queries spent.
    """
    status: AttackStatus
    queries: int
    rounds: int = 0
    adversarial: Optional[Image] = None
    quality: Optional[QualityReport] = None
    reason: Optional[FailureReason] = None
    params: Dict[str, Any] = field(default_factory=dict)
    trajectory: List[TrajectoryPoint] = field(default_factory=list)
    detail: Optional[str] = None

    def __post_init__(self):
        if self.status is AttackStatus.SUCCESS and (self.adversarial is None or self.quality is None):
            raise ValueError("a successful outcome needs an adversarial image and its quality")
        if self.status is AttackStatus.FAILURE and self.reason is None:
            raise ValueError("a failed outcome needs a reason")

    @property
    def succeeded(self) -> bool:
        return self.status is AttackStatus.SUCCESS

    @classmethod
    def success(cls, original: Image, adversarial: Image, queries: int, rounds: int = 0,
                params: Optional[Dict[str, Any]] = None,
                trajectory: Optional[List[TrajectoryPoint]] = None) -> "AttackOutcome":
        return cls(
            status=AttackStatus.SUCCESS,
            queries=queries,
            rounds=rounds,
            adversarial=adversarial,
            quality=quality_report(original, adversarial),
            params=dict(params or {}),
            trajectory=list(trajectory or []),
        )

    @classmethod
    def failure(cls, reason: FailureReason, queries: int, rounds: int = 0,
                original: Optional[Image] = None, adversarial: Optional[Image] = None,
                params: Optional[Dict[str, Any]] = None,
                trajectory: Optional[List[TrajectoryPoint]] = None,
                detail: Optional[str] = None) -> "AttackOutcome":
        quality = None
        if original is not None and adversarial is not None:
            quality = quality_report(original, adversarial)
        return cls(
            status=AttackStatus.FAILURE,
            queries=queries,
            rounds=rounds,
            adversarial=adversarial,
            quality=quality,
            reason=FailureReason(reason),
            params=dict(params or {}),
            trajectory=list(trajectory or []),
            detail=detail,
        )

    def to_record(self) -> Dict[str, Any]:
        """JSON-ready row without the image itself"""
        quality = self.quality.to_dict() if self.quality is not None else {"l0": None, "psnr": None, "ssim": None}
        return {
            "status": self.status.value,
            "reason": self.reason.value if self.reason is not None else None,
            "queries": self.queries,
            "rounds": self.rounds,
            **quality,
            "params": self.params,
            "detail": self.detail,
        }


def establish_original(oracle: DetectorOracle, image: Image,
                       original_verdict: Optional[Verdict] = None) -> Tuple[Verdict, int]:
    """
    Verdict on the unmodified image and the queries spent obtaining it.

    Raises:
        PreconditionNotIllegalError: the detector already judges the image normal
    """
    spent = 0
    if original_verdict is None:
        original_verdict = oracle.classify(image)
        spent = 1
    if not original_verdict.illegal:
        raise PreconditionNotIllegalError(f"original image is judged {original_verdict.label!r}, not illegal")
    return original_verdict, spent
