"""Thermo-quantum diffusion of overdamped particles in periodic potentials."""

__version__ = "0.1.0"
