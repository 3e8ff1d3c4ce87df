"""Multi-UAV coverage path planning on an optimized node lattice."""

__version__ = "0.1.0"
