"""
Runtime settings for Evader
Values come from the environment, optionally seeded by a .env file
"""
import logging
import os
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, Field

# Load environment variables
load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class Settings(BaseModel):
    """Process-wide settings read from EVADER_* variables"""

    log_level: str = "INFO"
    http_timeout: float = Field(default=10.0, gt=0)
    output_dir: str = "runs"
    mock_token: Optional[str] = None

    @classmethod
    def from_env(cls) -> "Settings":
        """Build settings from the current environment"""
        return cls(
            log_level=os.getenv("EVADER_LOG_LEVEL", "INFO").upper(),
            http_timeout=float(os.getenv("EVADER_HTTP_TIMEOUT", "10")),
            output_dir=os.getenv("EVADER_OUTPUT_DIR", "runs"),
            mock_token=os.getenv("EVADER_MOCK_TOKEN") or None,
        )


def configure_logging(settings: Optional[Settings] = None) -> None:
    """Configure the root logger once; library modules only create loggers"""
    settings = settings or Settings.from_env()
    level = getattr(logging, settings.log_level, logging.INFO)
    logging.basicConfig(level=level, format=LOG_FORMAT)
