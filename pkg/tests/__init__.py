"""Tests for safe-admittance."""
