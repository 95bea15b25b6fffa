"""Simulation and verification toolkit for key distribution with the 3x3 tile UPB."""

__version__ = "0.1.0"
