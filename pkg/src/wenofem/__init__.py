"""High-order CG/DG finite element solver for hyperbolic conservation laws
with dissipation-based Hermite-WENO stabilization and shock-capturing
quadrature."""

__version__ = "0.1.0"
