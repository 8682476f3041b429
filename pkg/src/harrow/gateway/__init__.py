"""Network boundary: JSON message bridge over websockets plus the CLI."""

from .app import create_app, serve
from .bridge import SCHEMA_VERSION, SERVICES, Bridge, Outbox, error_code

__all__ = ["Bridge", "Outbox", "SCHEMA_VERSION", "SERVICES", "create_app", "error_code", "serve"]
