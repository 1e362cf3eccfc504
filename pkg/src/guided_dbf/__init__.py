"""Guided distributed transmit beamforming: simulation engine and CLI."""

__version__ = "0.1.0"
