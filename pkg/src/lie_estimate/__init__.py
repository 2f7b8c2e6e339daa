"""Matrix Lie group state estimation for floating-base legged systems."""

__version__ = "0.1.0"
