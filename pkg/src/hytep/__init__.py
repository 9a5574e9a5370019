"""Transmission expansion planning with hydrogen pipelines as an alternative to new lines."""

__version__ = "0.1.0"
