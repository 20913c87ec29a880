"""Finite-truncation operator models of quantum SU(n) and quantum Stiefel
manifolds, with numerical checks of their relations, K-theory witnesses and
index pairings."""

__version__ = "0.1.0"
