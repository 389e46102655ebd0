"""Cellular sheaves on graphs and sheaf diffusion networks in numpy."""

__version__ = "0.1.0"
