"""Filtering and feedback control of a driven two-level atom observed through its emitted field."""

__version__ = "0.1.0"
