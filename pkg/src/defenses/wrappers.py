"""
Defensive Oracle Wrappers
Server-side filtering, confidence coarsening and query limiting around any detector
"""
import math
from enum import Enum
from typing import Union

from src.core.image import Image
from src.defenses.filters import FilterKind, FilterSpec, apply_filter
from src.oracle.detectors import DetectorOracle, MeteredOracle, QueryLedger
from src.oracle.verdict import (
    NUMERIC_KINDS,
    SCORE_SCALE,
    FeedbackKind,
    OrdinalLevel,
    Verdict,
    illegal_confidence,
)

ORDINAL_BINS = 5


class Granularity(str, Enum):
    ORDINAL5 = "ordinal5"
    DECIMAL1 = "dec1"
    LABEL_ONLY = "label"


class FilteredOracle(DetectorOracle):
    """Filters the queried copy only; shares the inner ledger"""

    def __init__(self, inner: DetectorOracle, spec: FilterSpec):
        self.inner = inner
        self.spec = spec

    @property
    def kind(self) -> FeedbackKind:
        return self.inner.kind

    @property
    def ledger(self) -> QueryLedger:
        return self.inner.ledger

    def classify(self, image: Image) -> Verdict:
        return self.inner.classify(apply_filter(image, self.spec))


def _round_half_up(value: float) -> float:
    return math.floor(value + 0.5)


def ordinal_level(confidence: float) -> OrdinalLevel:
    """Uniform bins [0, .2), [.2, .4), [.4, .6), [.6, .8), [.8, 1]"""
    return OrdinalLevel(min(int(confidence * ORDINAL_BINS), int(OrdinalLevel.VERY_LIKELY)))


class RoundedOracle(DetectorOracle):
    """Coarsens the confidence returned by the inner detector"""

    def __init__(self, inner: DetectorOracle, granularity: Granularity):
        self.inner = inner
        self.granularity = Granularity(granularity)

    @property
    def kind(self) -> FeedbackKind:
        if self.granularity is Granularity.LABEL_ONLY:
            return FeedbackKind.BINARY
        if self.granularity is Granularity.ORDINAL5:
            return FeedbackKind.ORDINAL
        return self.inner.kind

    @property
    def ledger(self) -> QueryLedger:
        return self.inner.ledger

    def classify(self, image: Image) -> Verdict:
        return self.coarsen(self.inner.classify(image))

    def coarsen(self, verdict: Verdict) -> Verdict:
        if self.granularity is Granularity.LABEL_ONLY:
            return Verdict(label=verdict.label, illegal=verdict.illegal, kind=FeedbackKind.BINARY)

        if self.granularity is Granularity.ORDINAL5:
            if verdict.kind not in NUMERIC_KINDS:
                return verdict
            return Verdict.ordinal(verdict.label, ordinal_level(illegal_confidence(verdict)))

        if verdict.kind not in NUMERIC_KINDS or verdict.confidence is None:
            return verdict
        if verdict.kind is FeedbackKind.SCORE:
            rounded = _round_half_up(verdict.confidence / 10) * 10
            rounded = min(rounded, SCORE_SCALE)
        else:
            rounded = min(_round_half_up(verdict.confidence * 10) / 10, 1.0)
        return Verdict(label=verdict.label, illegal=verdict.illegal, kind=verdict.kind, confidence=rounded)


def wrap_with_filter(oracle: DetectorOracle, kind: Union[FilterKind, FilterSpec]) -> FilteredOracle:
    spec = kind if isinstance(kind, FilterSpec) else FilterSpec(kind=kind)
    return FilteredOracle(oracle, spec)


def round_confidence(oracle: DetectorOracle, granularity: Granularity) -> RoundedOracle:
    return RoundedOracle(oracle, granularity)


def limit_queries(oracle: DetectorOracle, budget: int) -> MeteredOracle:
    """View of the oracle that raises BudgetExhaustedError after `budget` queries"""
    if budget < 0:
        raise ValueError(f"budget must be non-negative, got {budget}")
    return MeteredOracle(oracle, budget=budget)
