"""Frobenius series, nested integral representations, and generating-function
identities for the Lame equation in its algebraic (Weierstrass) form."""

__version__ = "0.1.0"
