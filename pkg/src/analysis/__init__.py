"""Residuos, ecuaciones modificadas y diagnósticos de caos."""

from . import backward_error, chaos_metrics

__all__ = ["backward_error", "chaos_metrics"]
