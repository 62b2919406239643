"""
Configuración global del laboratorio de análisis de error hacia atrás.

Los valores por defecto reproducen los parámetros de los experimentos de
referencia (Lorenz, Hénon–Heiles, mapas en minifloat).
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from typing import Dict


@dataclass
class Config:
    BASE_DIR = os.path.dirname(os.path.abspath(__file__))
    DATA_DIR = os.path.join(os.path.dirname(BASE_DIR), "data")
    DATA_RESULTS = os.path.join(DATA_DIR, "results")
    DATA_REPRODUCE = os.path.join(DATA_DIR, "reproduce")

    # Lorenz
    LORENZ_SIGMA = 10.0
    LORENZ_RHO = 28.0
    LORENZ_BETA = 8.0 / 3.0
    LORENZ_Y0 = (1.0, 0.0, 0.0)
    LORENZ_T_END = 50.0

    # Integrador adaptativo
    RTOL = 1e-8
    ATOL = 1e-8
    SAFETY = 0.9
    STEP_SHRINK_FLOOR = 0.2
    STEP_GROW_CAP = 5.0
    SAMPLES_PER_STEP = 8
    RESIDUAL_TOLERANCES = (1e-8, 1e-9, 1e-10)

    # Hénon–Heiles (orden p1, p2, q1, q2)
    HH_STATE0 = (0.12, 0.12, 0.12, 0.12)
    HH_STEPS = 16000
    HH_H_VALUES = ("1.175", "1.18", "79/64", "81/64")
    HH_ENERGY_REFERENCE = 0.034
    SPURIOUS_THRESHOLD = 0.1

    # Euler y ecuación modificada
    EULER_COEFFICIENT = -0.5
    EULER_STEPS = (1e-3, 5e-4, 2.5e-4)
    EULER_T_END = 1.0
    DRIFT_H_VALUES = (0.05, 0.1, 0.2)
    DRIFT_T_END = 200.0

    # Caos
    LYAPUNOV_T_TOTAL = 1000.0
    LYAPUNOV_TRANSIENT = 5.0
    LYAPUNOV_RENORM = 0.5
    LYAPUNOV_DELTA0 = 1e-8
    LYAPUNOV_RTOL = 1e-9
    LYAPUNOV_REFERENCE = 0.905
    SEPARATION_THRESHOLD = 1.0
    SEPARATION_RTOL = 1e-10
    SEPARATION_T_MAX = 200.0
    SEPARATION_CHUNK = 10.0
    SEPARATION_SEEDS = (1, 2)
    SEPARATION_EPSILONS = (1e-6, 1e-8, 1e-10)
    DISTURBANCE_MODES = 4
    STATS_WINDOW = (10.0, 50.0)
    STATS_BINS = 40
    STATS_SAMPLES = 4000

    # Crecimiento secular
    SECULAR_EPSILON = 0.01
    SECULAR_T_END = 500.0

    # Minifloat y grafos de órbitas
    FORMAT_8BIT = "e3m4"
    FORMAT_16BIT = "e5m10"
    SCALING_FORMATS = ("e3m4", "e4m3", "e5m2", "e4m5", "e5m10")
    NAN_POLICY = "first"
    SHADOW_MAX_LEN = 20
    SHADOW_SAMPLE_LEN = 50
    SHADOW_SAMPLES = 100
    SHADOW_BOUND_UNITS = 4.0
    DOT_MAX_NODES = 512
    LONG_ORBIT_ITER = 10**6
    LONG_ORBIT_BURN_IN = 10**3

    SEED = 20240901


def crear_directorios() -> None:
    """Crea los directorios de resultados."""
    os.makedirs(Config.DATA_RESULTS, exist_ok=True)
    os.makedirs(Config.DATA_REPRODUCE, exist_ok=True)


def timestamp() -> str:
    """Devuelve un timestamp legible para etiquetar archivos."""
    return datetime.now().strftime("%Y%m%d-%H%M%S")


def parse_number(text) -> float:
    """Convierte '79/64', '1.175' o '1e-8' en float."""
    try:
        return float(Fraction(str(text).strip()))
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"Número inválido: {text!r}") from None


def cargar_config(path: str) -> Dict[str, str]:
    """
    Lee un archivo de configuración con líneas ``clave = valor``.

    Ignora líneas vacías y comentarios (``#``). Las claves se normalizan a
    guiones bajos para coincidir con los atributos de argparse.
    """
    valores: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for numero, linea in enumerate(fh, start=1):
            linea = linea.split("#", 1)[0].strip()
            if not linea:
                continue
            if "=" not in linea:
                raise ValueError(f"Línea {numero} de {path} sin '=': {linea!r}")
            clave, valor = linea.split("=", 1)
            clave = clave.strip().lstrip("-").replace("-", "_")
            if not clave:
                raise ValueError(f"Línea {numero} de {path} sin clave")
            valores[clave] = valor.strip()
    return valores


__all__ = ["Config", "crear_directorios", "timestamp", "parse_number", "cargar_config"]
