"""Discrete wave turbulence toolkit: exact resonances, clusters, dynamics and cascades."""

__version__ = "0.1.0"
