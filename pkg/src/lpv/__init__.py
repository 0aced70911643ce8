"""Validate linearization points of lock-based concurrent sets."""

__version__ = "0.1.0"
