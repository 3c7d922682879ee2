"""Spectral invariants Lambda_k(S) and Omega_k(g) of closed Riemannian manifolds."""

__version__ = "0.1.0"
