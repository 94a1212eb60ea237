"""Shared exception types."""


class GaugekitError(Exception):
    """Base class for every error raised by this package."""


class CapExceededError(GaugekitError):
    """An iteration, cell, or probe budget ran out before completion."""
