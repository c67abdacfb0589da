"""Numerical toolkit for operator norms, completely bounded norms, Haagerup
tensor norms, and finite-truncation Schur multipliers."""

__version__ = "0.1.0"
