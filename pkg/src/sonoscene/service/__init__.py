"""WebSocket/HTTP service: scene editing, parameter snapshots, PCM streaming."""

from .app import create_app

__all__ = ["create_app"]
