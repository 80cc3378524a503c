"""Plane-wave ultra-weak variational solver for time-harmonic Maxwell equations in 3D."""

__version__ = "0.1.0"
