"""Deterministic synthetic scene-text image engine for Traditional Chinese."""

__version__ = "0.1.0"
