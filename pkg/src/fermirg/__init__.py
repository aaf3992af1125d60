"""Exact Grassmann calculus for fermionic renormalization group maps."""

from .algebra import GrassmannElement, Signature

__version__ = "0.1.0"

__all__ = ["GrassmannElement", "Signature", "__version__"]
