"""Finite-volume shallow water flow over vegetated terrain."""
