"""Structured random measurement ensembles, restricted isometry estimates,
chaos-process complexity parameters and sparse recovery experiments."""

__version__ = "0.1.0"
