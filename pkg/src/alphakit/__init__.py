"""alphakit: point-in-time cross-sectional equity research engine."""

__version__ = "0.1.0"
