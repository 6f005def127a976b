"""Rational torsion points hit only by cusps under X_1(N) -> E."""

__version__ = "0.1.0"
