"""Paquete raíz del laboratorio de análisis de error hacia atrás."""
