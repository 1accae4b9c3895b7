"""Knowware toolkit: pseudo-natural-language extraction, crystallization, packaging and binding."""

__version__ = "0.1.0"
