"""Tri-level robust OPF for radial feeders: dispatch, attack, mitigate."""

__version__ = "0.1.0"
