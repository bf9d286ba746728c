"""Finite-scale measurements of Morse gauges, limit sets, and weak hulls
on Cayley-graph balls of groups with decidable normal forms."""

__version__ = "0.1.0"
