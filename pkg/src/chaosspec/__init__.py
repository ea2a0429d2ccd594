"""Wiener-chaos (Fourier) spectra of the random Schrodinger and stochastic heat equations."""

__version__ = "0.1.0"
