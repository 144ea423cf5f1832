"""Botnet flow detection robustness toolkit."""

__version__ = "0.1.0"
