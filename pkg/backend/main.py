"""
FastAPI Backend for the mock detector
Local HTTP endpoint speaking the JSON shapes the detector adapter understands
"""
import base64
import binascii
import logging
from typing import Optional

import uvicorn
from fastapi import Depends, FastAPI, HTTPException, Request, status
from fastapi.security import HTTPAuthorizationCredentials, HTTPBearer

from backend.predict import DetectionService
from src import __version__
from src.core.config import Settings, configure_logging
from src.core.errors import ImageDecodeError

logger = logging.getLogger(__name__)

IMAGE_FIELD = "image"

security = HTTPBearer(auto_error=False)


def create_app(settings: Optional[Settings] = None, tau: float = 0.5) -> FastAPI:
    """Build the service; bearer auth is enforced only when a mock token is configured"""
    settings = settings or Settings.from_env()
    service = DetectionService(tau=tau)

    app = FastAPI(
        title="Evader Mock Detector",
        description="Deterministic moderation detector for adapter tests and demos",
        version=__version__,
    )
    app.state.service = service

    async def verify_token(credentials: Optional[HTTPAuthorizationCredentials] = Depends(security)):
        if settings.mock_token is None:
            return
        if credentials is None or credentials.credentials != settings.mock_token:
            raise HTTPException(
                status_code=status.HTTP_401_UNAUTHORIZED,
                detail="Invalid authentication credentials",
                headers={"WWW-Authenticate": "Bearer"},
            )

    @app.get("/health")
    async def health_check():
        return {"status": "healthy", "version": __version__, "queries": service.queries}

    @app.post("/api/v1/detect", dependencies=[Depends(verify_token)])
    async def detect(request: Request):
        """Accepts {"image": <base64 PNG>} or a multipart upload named "image" """
        content_type = request.headers.get("content-type", "")
        if content_type.startswith("multipart/form-data"):
            form = await request.form()
            upload = form.get(IMAGE_FIELD)
            if upload is None or isinstance(upload, str):
                raise HTTPException(status_code=400, detail=f"missing file field {IMAGE_FIELD!r}")
            data = await upload.read()
        else:
            try:
                payload = await request.json()
                data = base64.b64decode(payload[IMAGE_FIELD], validate=True)
            except (ValueError, KeyError, TypeError, binascii.Error):
                raise HTTPException(status_code=400, detail=f"expected JSON with base64 field {IMAGE_FIELD!r}")

        try:
            return service.detect(data)
        except ImageDecodeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    return app


def serve(host: str = "127.0.0.1", port: int = 8000, tau: float = 0.5) -> None:
    settings = Settings.from_env()
    configure_logging(settings)
    uvicorn.run(create_app(settings, tau=tau), host=host, port=port, log_level=settings.log_level.lower())


if __name__ == "__main__":
    serve()
