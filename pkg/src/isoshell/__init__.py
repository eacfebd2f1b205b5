"""Infinitesimal isometries and bending energies of thin shells."""
__version__ = "0.1.0"
