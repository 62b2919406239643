"""Tests del laboratorio de análisis de error hacia atrás."""
