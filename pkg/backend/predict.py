"""
Mock Detection Service
Brightness-driven stand-in for a cloud moderation detector
"""
import io
import logging
from typing import Any, Dict

from src.core.image import load_png
from src.defenses.wrappers import ordinal_level
from src.oracle.detectors import MeanIntensityOracle
from src.oracle.verdict import SCORE_SCALE

logger = logging.getLogger(__name__)


class DetectionService:
    """
    Answers in every feedback form at once so one server can stand in for
    probability, score, per-category and likelihood-word APIs.
    """

    def __init__(self, tau: float = 0.5, illegal_label: str = "porn", normal_label: str = "normal"):
        self.oracle = MeanIntensityOracle(tau)
        self.illegal_label = illegal_label
        self.normal_label = normal_label

    @property
    def queries(self) -> int:
        return self.oracle.ledger.used

    def detect(self, data: bytes) -> Dict[str, Any]:
        """
        Classify encoded image bytes

        Raises:
            ImageDecodeError: bytes are not a decodable image
        """
        image = load_png(io.BytesIO(data))
        verdict = self.oracle.classify(image)
        label = self.illegal_label if verdict.illegal else self.normal_label
        score = round(verdict.confidence * SCORE_SCALE, 4)
        logger.debug("detect %dx%d -> %s %.4f", image.width, image.height, label, verdict.confidence)
        return {
            "label": label,
            "prob": verdict.confidence,
            "score": score,
            "likelihood": ordinal_level(verdict.confidence).name,
            "categories": [
                {"name": self.illegal_label, "score": score},
                {"name": self.normal_label, "score": round(SCORE_SCALE - score, 4)},
            ],
        }
