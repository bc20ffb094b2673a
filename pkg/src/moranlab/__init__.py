"""Frequency-dependent Moran process, exact fixation theory and continuum limits."""

__version__ = "0.1.0"
