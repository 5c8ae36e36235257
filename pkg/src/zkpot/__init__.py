"""Proof-of-traffic protocol library and simulator."""

__version__ = "0.1.0"
