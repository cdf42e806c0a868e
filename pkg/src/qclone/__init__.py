"""Asymmetric 1→N cloning of qudits: the Q-norm, its dual and the optimal cloners."""

__version__ = "0.1.0"
