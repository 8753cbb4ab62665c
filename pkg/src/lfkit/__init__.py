"""Arbitrary-precision toolkit for character sums, Kloosterman sums,
Estermann zeta functions and fourth-moment identities of Dirichlet
L-functions."""

__version__ = "0.1.0"
