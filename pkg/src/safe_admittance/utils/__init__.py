"""Utilities for safe-admittance."""
