"""Inverse electromagnetic scattering: forward solver, classical inversion and complex CNN cascade."""

__version__ = "1.0.0"
