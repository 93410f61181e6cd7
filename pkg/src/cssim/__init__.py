"""Chern-Simons-Higgs / Chern-Simons-Dirac simulator on R^{1+2} with exact identity verification."""

__version__ = "0.1.0"
