"""Spread-optimal coin sequences for 1D discrete-time quantum walks."""

__version__ = "0.1.0"
