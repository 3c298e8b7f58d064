"""Simulation and verification of dissipative (contact) mechanics on SO(3)."""

__version__ = "0.1.0"
