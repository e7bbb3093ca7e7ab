"""Intrinsic volumes of typical sets and intrinsic entropy curves."""
__version__ = "0.1.0"
