"""Exact finite-stage models: Moore spaces, building blocks, stage data and groupoid towers."""

__version__ = "0.1.0"
