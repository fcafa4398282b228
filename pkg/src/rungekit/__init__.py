"""Power-series Cauchy solutions, half-space and slab null solutions, and
Runge-pair geometry for operators with a single characteristic direction."""

__version__ = "0.1.0"
