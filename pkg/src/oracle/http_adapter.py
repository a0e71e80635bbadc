"""
HTTP Detector Adapter
Sends PNG bytes to a moderation endpoint and maps the JSON answer onto a Verdict
"""
import base64
import io
import json
import logging
import os
import re
import threading
import time
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import requests
from PIL import Image as PILImage
from pydantic import BaseModel, Field, model_validator

from src.core.config import Settings
from src.core.errors import AuthError, MalformedResponseError, TransportError
from src.core.image import Image
from src.oracle.detectors import LedgeredOracle
from src.oracle.verdict import FeedbackKind, OrdinalLevel, Verdict

logger = logging.getLogger(__name__)

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})
AUTH_STATUSES = frozenset({401, 403})

_PATH_TOKEN = re.compile(r"\.([^.\[\]]+)|\[(\d+)\]")


class BodyEncoding(str, Enum):
    BASE64_JSON = "base64_json"
    MULTIPART = "multipart"


class AdapterConfig(BaseModel):
    """
    How to talk to one detector endpoint.

    When `confidence_path` resolves to a list of per-category objects, the
    confidence is the maximum `score_value_key` over entries whose
    `score_label_key` is one of `illegal_labels` (0 when none is listed).
    """

    endpoint: str
    method: str = "POST"
    auth_header_env: Optional[str] = None
    auth_header_name: str = "Authorization"
    auth_prefix: str = "Bearer "
    body_encoding: BodyEncoding = BodyEncoding.BASE64_JSON
    image_field: str = "image"
    label_path: str
    confidence_path: Optional[str] = None
    score_label_key: str = "name"
    score_value_key: str = "score"
    kind: FeedbackKind
    illegal_labels: List[str] = Field(min_length=1)
    qps_limit: Optional[float] = Field(default=None, gt=0)
    timeout_s: Optional[float] = Field(default=None, gt=0)
    max_retries: int = Field(default=2, ge=0)
    backoff_s: float = Field(default=0.5, ge=0)
    cost_per_1000: Optional[float] = Field(default=None, ge=0)

    @model_validator(mode="after")
    def _confidence_path_required(self) -> "AdapterConfig":
        if self.kind is not FeedbackKind.BINARY and not self.confidence_path:
            raise ValueError(f"confidence_path is required for {self.kind.value} feedback")
        return self

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "AdapterConfig":
        with open(path, "r") as f:
            return cls.model_validate(json.load(f))


def resolve_json_path(document: Any, path: str) -> Any:
    """
    Follow a `$.a.b[0]` style path.

    Raises:
        MalformedResponseError: path is invalid or absent from the document
    """
    if not path.startswith("$"):
        raise MalformedResponseError(f"JSON path must start with '$': {path!r}")
    rest = path[1:]
    tokens = list(_PATH_TOKEN.finditer(rest))
    if "".join(m.group(0) for m in tokens) != rest:
        raise MalformedResponseError(f"unsupported JSON path {path!r}")

    node = document
    for match in tokens:
        key, index = match.group(1), match.group(2)
        try:
            node = node[int(index)] if index is not None else node[key]
        except (KeyError, IndexError, TypeError) as exc:
            raise MalformedResponseError(f"response has no value at {path}") from exc
    return node


def encode_png(image: Image) -> bytes:
    buffer = io.BytesIO()
    PILImage.fromarray(np.ascontiguousarray(image.pixels)).save(buffer, format="PNG")
    return buffer.getvalue()


def _parse_level(raw: Any) -> OrdinalLevel:
    if isinstance(raw, bool):
        raise MalformedResponseError(f"unrecognised likelihood {raw!r}")
    if isinstance(raw, (int, float)):
        try:
            return OrdinalLevel(int(raw))
        except ValueError as exc:
            raise MalformedResponseError(f"unrecognised likelihood {raw!r}") from exc
    name = str(raw).strip().upper().replace(" ", "_")
    try:
        return OrdinalLevel[name]
    except KeyError as exc:
        raise MalformedResponseError(f"unrecognised likelihood {raw!r}") from exc


def _as_number(raw: Any, path: str) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
        raise MalformedResponseError(f"value at {path} is not numeric: {raw!r}")
    try:
        return float(raw)
    except ValueError as exc:
        raise MalformedResponseError(f"value at {path} is not numeric: {raw!r}") from exc


class HttpDetectorOracle(LedgeredOracle):
    """
    Detector behind a JSON HTTP API.

    Transport failures and 429/5xx answers are retried up to `max_retries`
    times with exponential backoff; only an answered query is charged.
    """

    def __init__(self, config: AdapterConfig, session: Optional[Any] = None,
                 settings: Optional[Settings] = None, budget: Optional[int] = None):
        super().__init__(budget)
        self.config = config
        self.settings = settings or Settings.from_env()
        self._session = session if session is not None else requests.Session()
        self._illegal = {label.casefold() for label in config.illegal_labels}
        self._pace_lock = threading.Lock()
        self._last_sent: Optional[float] = None
        self._secret: Optional[str] = None
        if config.auth_header_env:
            self._secret = os.getenv(config.auth_header_env)
            if not self._secret:
                raise AuthError(f"environment variable {config.auth_header_env} is not set")

    @property
    def kind(self) -> FeedbackKind:
        return self.config.kind

    @property
    def timeout(self) -> float:
        return self.config.timeout_s or self.settings.http_timeout

    def _headers(self) -> Dict[str, str]:
        if self._secret is None:
            return {}
        return {self.config.auth_header_name: f"{self.config.auth_prefix}{self._secret}"}

    def _body(self, image: Image) -> Dict[str, Any]:
        png = encode_png(image)
        if self.config.body_encoding is BodyEncoding.MULTIPART:
            return {"files": {self.config.image_field: ("image.png", png, "image/png")}}
        return {"json": {self.config.image_field: base64.b64encode(png).decode("ascii")}}

    def _pace(self) -> None:
        if self.config.qps_limit is None:
            return
        interval = 1.0 / self.config.qps_limit
        with self._pace_lock:
            now = time.monotonic()
            if self._last_sent is not None:
                wait = self._last_sent + interval - now
                if wait > 0:
                    time.sleep(wait)
                    now += wait
            self._last_sent = now

    def _send(self, body: Dict[str, Any]):
        last_error: Optional[TransportError] = None
        for attempt in range(self.config.max_retries + 1):
            if attempt:
                delay = self.config.backoff_s * (2 ** (attempt - 1))
                if last_error is not None and last_error.retry_after:
                    delay = max(delay, last_error.retry_after)
                logger.debug("retrying %s in %.2fs (attempt %d)", self.config.endpoint, delay, attempt + 1)
                time.sleep(delay)
            self._pace()
            try:
                response = self._session.request(
                    self.config.method,
                    self.config.endpoint,
                    headers=self._headers(),
                    timeout=self.timeout,
                    **body,
                )
            except requests.RequestException as exc:
                last_error = TransportError(f"request to {self.config.endpoint} failed: {exc}")
                continue

            status = response.status_code
            if status in AUTH_STATUSES:
                raise AuthError(f"detector rejected credentials (HTTP {status})")
            if status in RETRYABLE_STATUSES:
                last_error = TransportError(
                    f"detector answered HTTP {status}",
                    status_code=status,
                    retry_after=_retry_after(response),
                )
                continue
            if status >= 400:
                raise TransportError(f"detector answered HTTP {status}", status_code=status)
            return response

        logger.warning("giving up on %s after %d attempts", self.config.endpoint, self.config.max_retries + 1)
        raise last_error

    def _predict(self, image: Image) -> Verdict:
        response = self._send(self._body(image))
        try:
            payload = response.json()
        except ValueError as exc:
            raise MalformedResponseError("detector answer is not JSON") from exc
        return self.parse_verdict(payload)

    def parse_verdict(self, payload: Any) -> Verdict:
        """Map a decoded JSON answer onto a Verdict"""
        cfg = self.config
        label = str(resolve_json_path(payload, cfg.label_path))
        illegal = label.casefold() in self._illegal

        if cfg.kind is FeedbackKind.BINARY:
            return Verdict(label=label, illegal=illegal, kind=FeedbackKind.BINARY)

        raw = resolve_json_path(payload, cfg.confidence_path)
        if cfg.kind is FeedbackKind.ORDINAL:
            return Verdict.ordinal(label, _parse_level(raw))

        if isinstance(raw, list):
            confidence = self._max_illegal_score(raw)
        else:
            confidence = _as_number(raw, cfg.confidence_path)
        try:
            return Verdict(label=label, illegal=illegal, kind=cfg.kind, confidence=confidence)
        except ValueError as exc:
            raise MalformedResponseError(str(exc)) from exc

    def _max_illegal_score(self, entries: List[Any]) -> float:
        cfg = self.config
        scores = []
        for entry in entries:
            if not isinstance(entry, dict) or cfg.score_label_key not in entry or cfg.score_value_key not in entry:
                raise MalformedResponseError(f"score entry lacks {cfg.score_label_key}/{cfg.score_value_key}")
            if str(entry[cfg.score_label_key]).casefold() in self._illegal:
                scores.append(_as_number(entry[cfg.score_value_key], cfg.confidence_path))
        return max(scores) if scores else 0.0


def _retry_after(response) -> Optional[float]:
    value = response.headers.get("Retry-After")
    if value is None:
        return None
    try:
        return float(value)
    except ValueError:
        return None


def make_http_adapter(config: AdapterConfig, session: Optional[Any] = None,
                      budget: Optional[int] = None) -> HttpDetectorOracle:
    """Oracle for a live detector endpoint"""
    return HttpDetectorOracle(config, session=session, budget=budget)
