"""Barrier option pricing by continuous-time Markov chain approximation."""

__version__ = "0.1.0"
