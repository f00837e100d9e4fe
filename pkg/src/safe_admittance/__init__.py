"""safe-admittance - switched model-reference admittance control with invariance-based safety."""

__version__ = "0.1.0"
