"""Localized red-tide impact assessment from geo-matched tweets."""

__version__ = "0.1.0"
