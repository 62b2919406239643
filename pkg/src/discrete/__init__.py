"""Aritmética de baja precisión y grafos de órbitas de mapas en [0, 1]."""

from . import lowprec, orbit_graph

__all__ = ["lowprec", "orbit_graph"]
