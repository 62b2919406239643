"""Sistemas dinámicos e integradores."""

from . import integrators, systems

__all__ = ["systems", "integrators"]
