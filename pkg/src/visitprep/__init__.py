"""Clinic visit preparation service: guided interview plus grounded generation."""

__version__ = "0.1.0"
