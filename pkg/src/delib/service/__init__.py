"""HTTP facade, configuration, auth and CLI wiring."""

from .config import ServiceConfig

__all__ = ["ServiceConfig"]
