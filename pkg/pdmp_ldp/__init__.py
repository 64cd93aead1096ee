"""Piecewise-deterministic Markov processes and their large-deviations paths."""

__version__ = "0.1.0"
