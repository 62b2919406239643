"""
Sistemas dinámicos concretos: Lorenz, Hénon–Heiles y oscilador forzado.

Todos exponen la misma interfaz (``dimension``, ``rhs(t, y)``, ``jacobian``,
``jvp`` y ``energy`` opcionales) para que los integradores y el análisis de
residuos los consuman de forma uniforme. ``rhs`` y ``jvp`` aceptan estados de
forma (d,) o (d, n) y evalúan n muestras a la vez.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple, Union

import numpy as np

from src.config import Config

ArrayLike = Union[Sequence[float], np.ndarray]


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = Config.LORENZ_SIGMA
    rho: float = Config.LORENZ_RHO
    beta: float = Config.LORENZ_BETA

    def __post_init__(self) -> None:
        for nombre in ("sigma", "rho", "beta"):
            if not math.isfinite(getattr(self, nombre)):
                raise ValueError(f"Parámetro de Lorenz no finito: {nombre}={getattr(self, nombre)}")


@dataclass(frozen=True)
class ForcedOscillatorParams:
    epsilon: float = 0.0
    omega: float = 1.0
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not self.epsilon >= 0.0:
            raise ValueError(f"epsilon debe ser >= 0 (recibido {self.epsilon})")
        if not self.omega > 0.0:
            raise ValueError(f"omega debe ser > 0 (recibido {self.omega})")


@dataclass(frozen=True)
class HamiltonianState:
    """Estado (p, q) de Hénon–Heiles. El orden en arreglos es (p1, p2, q1, q2)."""

    p1: float
    p2: float
    q1: float
    q2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.p1, self.p2, self.q1, self.q2], dtype=float)

    @classmethod
    def from_array(cls, values: ArrayLike) -> "HamiltonianState":
        arr = _as_state(values, 4)
        return cls(float(arr[0]), float(arr[1]), float(arr[2]), float(arr[3]))


def _as_state(y: ArrayLike, dimension: int) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim not in (1, 2) or arr.shape[0] != dimension:
        raise ValueError(f"Se esperaba un estado de dimensión {dimension}, recibido forma {arr.shape}")
    return arr


def _hamiltonian_array(state: Union[HamiltonianState, ArrayLike]) -> np.ndarray:
    if isinstance(state, HamiltonianState):
        return state.as_array()
    return _as_state(state, 4)


class DynamicalSystem:
    """Interfaz común de los sistemas. Las subclases definen ``rhs``."""

    name = "system"
    dimension = 0

    def rhs(self, t, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, t: float, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.name} no define jacobiano")

    @property
    def has_jacobian(self) -> bool:
        return type(self).jacobian is not DynamicalSystem.jacobian

    def jvp(self, t, y: np.ndarray, v: np.ndarray) -> np.ndarray:
        """Producto jacobiano-vector J(t, y)·v, también por columnas."""
        y = _as_state(y, self.dimension)
        v = _as_state(v, self.dimension)
        if y.ndim == 1:
            return self.jacobian(t, y) @ v
        ts = np.broadcast_to(np.asarray(t, dtype=float), (y.shape[1],))
        out = np.empty_like(v)
        for j in range(y.shape[1]):
            out[:, j] = self.jacobian(ts[j], y[:, j]) @ v[:, j]
        return out

    def energy(self, y: np.ndarray):
        raise NotImplementedError(f"{self.name} no define energía")

    def check_state(self, y: ArrayLike) -> np.ndarray:
        return _as_state(y, self.dimension)


class LorenzSystem(DynamicalSystem):
    name = "lorenz"
    dimension = 3

    def __init__(self, params: Optional[LorenzParams] = None) -> None:
        self.params = params or LorenzParams()

    def rhs(self, t, y):
        x, yy, z = _as_state(y, 3)
        p = self.params
        return np.array([p.sigma * (yy - x), x * (p.rho - z) - yy, x * yy - p.beta * z])

    def jacobian(self, t, y):
        x, yy, z = _as_state(y, 3)
        p = self.params
        return np.array(
            [
                [-p.sigma, p.sigma, 0.0],
                [p.rho - z, -1.0, -x],
                [yy, x, -p.beta],
            ]
        )

    def jvp(self, t, y, v):
        x, yy, z = _as_state(y, 3)
        v0, v1, v2 = _as_state(v, 3)
        p = self.params
        return np.array(
            [
                p.sigma * (v1 - v0),
                (p.rho - z) * v0 - v1 - x * v2,
                yy * v0 + x * v1 - p.beta * v2,
            ]
        )


class HenonHeilesSystem(DynamicalSystem):
    name = "henon-heiles"
    dimension = 4

    def rhs(self, t, y):
        p1, p2, q1, q2 = _as_state(y, 4)
        return np.array([-q1 - 2.0 * q1 * q2, -q2 - q1 * q1 + q2 * q2, p1, p2])

    def jacobian(self, t, y):
        _, _, q1, q2 = _as_state(y, 4)
        return np.array(
            [
                [0.0, 0.0, -1.0 - 2.0 * q2, -2.0 * q1],
                [0.0, 0.0, -2.0 * q1, -1.0 + 2.0 * q2],
                [1.0, 0.0, 0.0, 0.0],
                [0.0, 1.0, 0.0, 0.0],
            ]
        )

    def jvp(self, t, y, v):
        _, _, q1, q2 = _as_state(y, 4)
        v0, v1, v2, v3 = _as_state(v, 4)
        return np.array(
            [
                (-1.0 - 2.0 * q2) * v2 - 2.0 * q1 * v3,
                -2.0 * q1 * v2 + (-1.0 + 2.0 * q2) * v3,
                v0,
                v1,
            ]
        )

    def energy(self, y):
        return hamiltonian_h0(y)


class ForcedOscillator(DynamicalSystem):
    """ÿ + y = ε·sin(ωt + fase), estado (y, ẏ)."""

    name = "oscillator"
    dimension = 2

    def __init__(self, params: Optional[ForcedOscillatorParams] = None) -> None:
        self.params = params or ForcedOscillatorParams()

    def rhs(self, t, y):
        pos, vel = _as_state(y, 2)
        p = self.params
        return np.array([vel, -pos + p.epsilon * np.sin(p.omega * np.asarray(t, dtype=float) + p.phase)])

    def jacobian(self, t, y):
        _as_state(y, 2)
        return np.array([[0.0, 1.0], [-1.0, 0.0]])

    def jvp(self, t, y, v):
        _as_state(y, 2)
        v0, v1 = _as_state(v, 2)
        return np.array([v1, -v0])

    def energy(self, y):
        pos, vel = _as_state(y, 2)
        return 0.5 * (pos * pos + vel * vel)


class LinearSystem(DynamicalSystem):
    """ẏ = A·y (incluye ẏ = −y y ẏ = 0)."""

    name = "linear"

    def __init__(self, matrix: ArrayLike, name: str = "linear") -> None:
        a = np.atleast_2d(np.asarray(matrix, dtype=float))
        if a.shape[0] != a.shape[1]:
            raise ValueError(f"La matriz del sistema lineal debe ser cuadrada, forma {a.shape}")
        self.matrix = a
        self.dimension = a.shape[0]
        self.name = name

    def rhs(self, t, y):
        return self.matrix @ _as_state(y, self.dimension)

    def jacobian(self, t, y):
        _as_state(y, self.dimension)
        return self.matrix.copy()

    def jvp(self, t, y, v):
        _as_state(y, self.dimension)
        return self.matrix @ _as_state(v, self.dimension)


def lorenz_rhs(state: ArrayLike, params: Optional[LorenzParams] = None) -> np.ndarray:
    return LorenzSystem(params).rhs(0.0, state)


def lorenz_jacobian(state: ArrayLike, params: Optional[LorenzParams] = None) -> np.ndarray:
    return LorenzSystem(params).jacobian(0.0, state)


def henon_heiles_force(q1: float, q2: float) -> Tuple[float, float]:
    """Gradiente del potencial U_q; el impulso del leapfrog es p ← p − h·U_q."""
    return q1 + 2.0 * q1 * q2, q2 + q1 * q1 - q2 * q2


def henon_heiles_rhs(state: Union[HamiltonianState, ArrayLike]):
    """Ecuaciones de movimiento (ṗ1, ṗ2, q̇1, q̇2). Devuelve el mismo tipo recibido."""
    values = HenonHeilesSystem().rhs(0.0, _hamiltonian_array(state))
    if isinstance(state, HamiltonianState):
        return HamiltonianState.from_array(values)
    return values


def hamiltonian_h0(state: Union[HamiltonianState, ArrayLike]):
    p1, p2, q1, q2 = _hamiltonian_array(state)
    h = 0.5 * (p1 * p1 + p2 * p2 + q1 * q1 + q2 * q2) + q1 * q1 * q2 - q2 * q2 * q2 / 3.0
    return float(h) if np.ndim(h) == 0 else h


def hamiltonian_gradient(state: Union[HamiltonianState, ArrayLike]) -> np.ndarray:
    """Devuelve (H_p1, H_p2, H_q1, H_q2)."""
    p1, p2, q1, q2 = _hamiltonian_array(state)
    fq1, fq2 = henon_heiles_force(q1, q2)
    return np.array([p1, p2, fq1, fq2])


def forced_oscillator_rhs(
    state: ArrayLike, t: float, params: Optional[ForcedOscillatorParams] = None
) -> np.ndarray:
    return ForcedOscillator(params).rhs(t, state)


_REGISTRY: Dict[str, Callable[..., DynamicalSystem]] = {
    "lorenz": lambda **kw: LorenzSystem(LorenzParams(**kw)),
    "henon-heiles": lambda **kw: HenonHeilesSystem(),
    "oscillator": lambda **kw: ForcedOscillator(ForcedOscillatorParams(**kw)),
    "decay": lambda **kw: LinearSystem([[-1.0]], name="decay"),
}

SYSTEM_NAMES = tuple(_REGISTRY)


def make_system(name: str, **params) -> DynamicalSystem:
    """Construye un sistema por nombre; los parámetros van a su dataclass."""
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ValueError(f"Sistema desconocido: {name!r}. Opciones: {', '.join(SYSTEM_NAMES)}") from None
    return factory(**params)


__all__ = [
    "LorenzParams",
    "ForcedOscillatorParams",
    "HamiltonianState",
    "DynamicalSystem",
    "LorenzSystem",
    "HenonHeilesSystem",
    "ForcedOscillator",
    "LinearSystem",
    "lorenz_rhs",
    "lorenz_jacobian",
    "henon_heiles_force",
    "henon_heiles_rhs",
    "hamiltonian_h0",
    "hamiltonian_gradient",
    "forced_oscillator_rhs",
    "make_system",
    "SYSTEM_NAMES",
]
