"""
Detector Oracles
Black-box classify interface, atomic query ledger and the deterministic mock detectors
"""
import hashlib
import logging
import threading
from abc import ABC, abstractmethod
from contextlib import contextmanager
from typing import Dict, Iterator, Optional, Tuple

import numpy as np

from src.core.errors import BudgetExhaustedError, DimensionMismatchError, EmptyRegionError
from src.core.image import MAX_VALUE, Image
from src.oracle.verdict import FeedbackKind, Verdict
from src.regions.masks import SubjectMask

logger = logging.getLogger(__name__)

ILLEGAL_LABEL = "illegal"
NORMAL_LABEL = "normal"


class QueryLedger:
    """
    Thread-safe query counter with an optional budget.

    A query is reserved before it is sent and committed only when an answer
    arrives, so `used` never decreases and never passes the budget.
    """

    def __init__(self, budget: Optional[int] = None):
        if budget is not None and budget < 0:
            raise ValueError(f"budget must be non-negative, got {budget}")
        self.budget = budget
        self._used = 0
        self._pending = 0
        self._lock = threading.Lock()

    @property
    def used(self) -> int:
        return self._used

    @contextmanager
    def reserve(self) -> Iterator[None]:
        """Hold one query slot for the duration of a classify call"""
        with self._lock:
            if self.budget is not None and self._used + self._pending >= self.budget:
                raise BudgetExhaustedError(self._used, self.budget)
            self._pending += 1
        try:
            yield
        except BaseException:
            with self._lock:
                self._pending -= 1
            raise
        with self._lock:
            self._pending -= 1
            self._used += 1

    def __repr__(self) -> str:
        return f"QueryLedger(used={self._used}, budget={self.budget})"


class DetectorOracle(ABC):
    """Black-box detector: one image in, one verdict out, every call counted"""

    @property
    @abstractmethod
    def kind(self) -> FeedbackKind:
        """Feedback form of the verdicts this oracle returns"""

    @property
    @abstractmethod
    def ledger(self) -> QueryLedger:
        """Ledger charged by classify"""

    @abstractmethod
    def classify(self, image: Image) -> Verdict:
        """Query the detector once"""


class LedgeredOracle(DetectorOracle):
    """Base for detectors that own their ledger; subclasses implement _predict"""

    def __init__(self, budget: Optional[int] = None):
        self._ledger = QueryLedger(budget)

    @property
    def ledger(self) -> QueryLedger:
        return self._ledger

    def classify(self, image: Image) -> Verdict:
        with self._ledger.reserve():
            return self._predict(image)

    @abstractmethod
    def _predict(self, image: Image) -> Verdict:
        """Answer for one image; called with a query slot held"""


def _probability_verdict(confidence: float, tau: float) -> Verdict:
    illegal = confidence >= tau
    return Verdict(
        label=ILLEGAL_LABEL if illegal else NORMAL_LABEL,
        illegal=illegal,
        kind=FeedbackKind.PROBABILITY,
        confidence=confidence,
    )


def _check_tau(tau: float) -> float:
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return float(tau)


class MaskCoverageOracle(LedgeredOracle):
    """
    Confidence is the fraction of subject pixels still equal to the reference.

    Non-subject pixels never influence the verdict.
    """

    def __init__(self, reference: Image, mask: SubjectMask, tau: float,
                 budget: Optional[int] = None):
        super().__init__(budget)
        if not mask.matches(reference):
            raise DimensionMismatchError(
                f"mask {mask.height}x{mask.width} does not match reference {reference.height}x{reference.width}"
            )
        if mask.subject_size == 0:
            raise EmptyRegionError("mask-coverage detector needs at least one subject pixel")
        self.reference = reference
        self.mask = mask
        self.tau = _check_tau(tau)

    @property
    def kind(self) -> FeedbackKind:
        return FeedbackKind.PROBABILITY

    def coverage(self, image: Image) -> float:
        if image.shape != self.reference.shape:
            raise DimensionMismatchError(f"image {image.shape} does not match reference {self.reference.shape}")
        intact = np.all(image.pixels == self.reference.pixels, axis=2) & self.mask.bits
        return int(intact.sum()) / self.mask.subject_size

    def _predict(self, image: Image) -> Verdict:
        return _probability_verdict(self.coverage(image), self.tau)


class MeanIntensityOracle(LedgeredOracle):
    """Confidence is the mean channel value scaled to [0, 1]"""

    def __init__(self, tau: float, budget: Optional[int] = None):
        super().__init__(budget)
        self.tau = _check_tau(tau)

    @property
    def kind(self) -> FeedbackKind:
        return FeedbackKind.PROBABILITY

    @staticmethod
    def mean_intensity(image: Image) -> float:
        total = int(image.pixels.sum(dtype=np.int64))
        return total / (image.pixels.size * MAX_VALUE)

    def _predict(self, image: Image) -> Verdict:
        return _probability_verdict(self.mean_intensity(image), self.tau)


def make_mask_coverage_mock(reference: Image, mask: SubjectMask, tau: float) -> MaskCoverageOracle:
    """Deterministic detector that only looks at the subject region"""
    return MaskCoverageOracle(reference, mask, tau)


def make_mean_intensity_mock(tau: float) -> MeanIntensityOracle:
    """Deterministic detector driven by overall brightness"""
    return MeanIntensityOracle(tau)


class MeteredOracle(DetectorOracle):
    """
    Per-attack view of a shared oracle.

    Owns a separate ledger (with an optional budget) and still charges the
    inner oracle's ledger, so batch totals and per-row counts both stay exact.
    """

    def __init__(self, inner: DetectorOracle, budget: Optional[int] = None):
        self.inner = inner
        self._ledger = QueryLedger(budget)

    @property
    def kind(self) -> FeedbackKind:
        return self.inner.kind

    @property
    def ledger(self) -> QueryLedger:
        return self._ledger

    def classify(self, image: Image) -> Verdict:
        with self._ledger.reserve():
            return self.inner.classify(image)


class CachedOracle(DetectorOracle):
    """
    Memoizes verdicts by image content.

    Cache hits are not queries and never reach the wrapped oracle, so its
    ledger and budget only see real detector calls.
    """

    def __init__(self, inner: DetectorOracle):
        self.inner = inner
        self._cache: Dict[Tuple[Tuple[int, int, int], str], Verdict] = {}
        self._lock = threading.Lock()
        self.hits = 0

    @property
    def kind(self) -> FeedbackKind:
        return self.inner.kind

    @property
    def ledger(self) -> QueryLedger:
        return self.inner.ledger

    @staticmethod
    def _key(image: Image) -> Tuple[Tuple[int, int, int], str]:
        return image.shape, hashlib.sha256(image.data).hexdigest()

    def classify(self, image: Image) -> Verdict:
        key = self._key(image)
        with self._lock:
            cached = self._cache.get(key)
            if cached is not None:
                self.hits += 1
                return cached
        verdict = self.inner.classify(image)
        with self._lock:
            self._cache[key] = verdict
        return verdict

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()
        logger.debug("verdict cache cleared")
