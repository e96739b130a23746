"""Gaussian wave-packet moment dynamics and the spin Hall effect of light."""

__version__ = "0.1.0"
