"""
Detector Verdicts
Feedback granularities, normalized illegal confidence and the attack success rule
"""
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Any, Dict, Optional

from src.core.errors import MissingConfidenceError


class FeedbackKind(str, Enum):
    """Form of the confidence a detector returns"""
    PROBABILITY = "probability"
    SCORE = "score"
    ORDINAL = "ordinal"
    BINARY = "binary"


class OrdinalLevel(IntEnum):
    """Likelihood words; UNKNOWN sits outside the order"""
    UNKNOWN = -1
    VERY_UNLIKELY = 0
    UNLIKELY = 1
    POSSIBLE = 2
    LIKELY = 3
    VERY_LIKELY = 4


# Only these words count as an illegal answer; POSSIBLE is ambiguous
ILLEGAL_LEVELS = frozenset({OrdinalLevel.LIKELY, OrdinalLevel.VERY_LIKELY})
MAX_LEVEL = int(OrdinalLevel.VERY_LIKELY)
SCORE_SCALE = 100.0

NUMERIC_KINDS = frozenset({FeedbackKind.PROBABILITY, FeedbackKind.SCORE})


@dataclass(frozen=True)
class Verdict:
    """One detector answer"""
    label: str
    illegal: bool
    kind: FeedbackKind
    confidence: Optional[float] = None
    level: Optional[OrdinalLevel] = None

    def __post_init__(self):
        if self.confidence is not None:
            upper = SCORE_SCALE if self.kind is FeedbackKind.SCORE else 1.0
            if not 0.0 <= self.confidence <= upper:
                raise ValueError(f"{self.kind.value} confidence {self.confidence} outside [0, {upper}]")

    @classmethod
    def ordinal(cls, label: str, level: OrdinalLevel) -> "Verdict":
        level = OrdinalLevel(level)
        return cls(label=label, illegal=level in ILLEGAL_LEVELS, kind=FeedbackKind.ORDINAL, level=level)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "illegal": self.illegal,
            "kind": self.kind.value,
            "confidence": self.confidence,
            "level": self.level.name if self.level is not None else None,
        }

    @classmethod
    def from_dict(cls, record: Dict[str, Any]) -> "Verdict":
        level = record.get("level")
        return cls(
            label=record["label"],
            illegal=bool(record["illegal"]),
            kind=FeedbackKind(record["kind"]),
            confidence=record.get("confidence"),
            level=OrdinalLevel[level] if level is not None else None,
        )


def has_numeric_confidence(verdict: Verdict) -> bool:
    """True when the verdict carries a probability or score the attacks can rank"""
    return verdict.kind in NUMERIC_KINDS and verdict.confidence is not None


def illegal_confidence(verdict: Verdict) -> float:
    """
    Map any feedback form onto [0, 1].

    Probability as-is, Score / 100, Ordinal level / 4, Binary 1.0 or 0.0.
    """
    if verdict.kind is FeedbackKind.BINARY:
        return 1.0 if verdict.illegal else 0.0
    if verdict.kind is FeedbackKind.ORDINAL:
        if verdict.level is None or verdict.level is OrdinalLevel.UNKNOWN:
            raise MissingConfidenceError("ordinal verdict has no known level")
        return int(verdict.level) / MAX_LEVEL
    if verdict.confidence is None:
        raise MissingConfidenceError(f"{verdict.kind.value} verdict has no confidence")
    if verdict.kind is FeedbackKind.SCORE:
        return verdict.confidence / SCORE_SCALE
    return verdict.confidence


def is_attack_success(original: Verdict, current: Verdict) -> bool:
    """
    Top-1 flip from illegal to normal.

    For word answers only UNLIKELY or below counts; VERY_LIKELY -> LIKELY is not a flip.
    """
    if current.kind is FeedbackKind.ORDINAL:
        level = current.level
        return level is not None and level is not OrdinalLevel.UNKNOWN and level <= OrdinalLevel.UNLIKELY
    return not current.illegal
