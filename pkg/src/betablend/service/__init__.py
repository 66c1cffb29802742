"""HTTP layer: FastAPI app plus its request/response schemas."""

from .app import app, create_app

__all__ = ["app", "create_app"]
