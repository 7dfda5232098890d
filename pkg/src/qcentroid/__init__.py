"""Sublabel nearest-centroid classification on a dense statevector simulator."""

__version__ = "0.1.0"
