"""Paracontrolled calculus toolkit on the flat torus."""

__version__ = "0.1.0"
