"""Asymptotic density calculus and coarse computability constructions at finite scale."""

__version__ = "0.1.0"
