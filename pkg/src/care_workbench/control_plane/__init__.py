"""Integration surface: shared service layer, HTTP API, and CLI."""

from .service import Workbench

__all__ = ["Workbench"]
