"""
Integradores en el tiempo.

- Runge–Kutta explícito adaptativo con par encajado Dormand–Prince 5(4) y
  salida densa (Hermite cúbico, interpolante propio del método o spline del
  esqueleto).
- Euler explícito de paso fijo.
- Leapfrog (Störmer–Verlet) en las formas deriva-impulso-deriva e
  impulso-deriva, especializado a Hénon–Heiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline

from src.config import Config
from src.model.systems import DynamicalSystem, HamiltonianState, henon_heiles_force

ForceFn = Callable[[float, float], Tuple[float, float]]

# Dormand–Prince 5(4), FSAL
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
]
_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_E = np.array([-71 / 57600, 0.0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
# Extensión continua de cuarto orden: y(θ) = y_n + h Σ_i K_i Σ_j P[i, j] θ^(j+1)
_P = np.array(
    [
        [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
        [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
        [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
        [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
        [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
    ]
)

INTERPOLANTS = ("cubic-hermite", "method-order", "skeleton-spline")
UNDERFLOW_FACTOR = 1e-14


class IntegrationError(RuntimeError):
    """Falla numérica de integración; ``partial`` guarda lo calculado hasta el fallo."""

    def __init__(self, message: str, partial=None, step_index: Optional[int] = None) -> None:
        super().__init__(message)
        self.partial = partial
        self.step_index = step_index


class DivergenceError(IntegrationError):
    pass


class StepSizeUnderflowError(IntegrationError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    rtol: float = Config.RTOL
    atol: float = Config.ATOL
    h_init: Optional[float] = None
    h_max: float = math.inf
    safety: float = Config.SAFETY
    step_shrink_floor: float = Config.STEP_SHRINK_FLOOR
    step_grow_cap: float = Config.STEP_GROW_CAP

    def __post_init__(self) -> None:
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError(f"Tolerancias deben ser > 0 (rtol={self.rtol}, atol={self.atol})")
        if self.h_init is not None and not self.h_init > 0:
            raise ValueError(f"h_init debe ser > 0 (recibido {self.h_init})")
        if not self.h_max > 0:
            raise ValueError(f"h_max debe ser > 0 (recibido {self.h_max})")
        if not 0 < self.safety < 1:
            raise ValueError(f"safety debe estar en (0, 1) (recibido {self.safety})")
        if not 0 < self.step_shrink_floor < 1 < self.step_grow_cap:
            raise ValueError(
                f"Se requiere 0 < step_shrink_floor < 1 < step_grow_cap "
                f"(recibido {self.step_shrink_floor}, {self.step_grow_cap})"
            )


@dataclass
class SolutionSkeleton:
    """Puntos discretos (t_n, y_n) y f(t_n, y_n) aceptados por un integrador."""

    times: np.ndarray
    states: np.ndarray
    derivatives: np.ndarray
    n_steps: int
    n_rejected: int = 0
    error_norms: np.ndarray = field(default_factory=lambda: np.empty(0))
    rhs_evaluations: int = 0

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.atleast_2d(np.asarray(self.states, dtype=float))
        self.derivatives = np.atleast_2d(np.asarray(self.derivatives, dtype=float))
        if not (len(self.times) == len(self.states) == len(self.derivatives)):
            raise ValueError("times, states y derivatives deben tener la misma longitud")
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("Los tiempos del esqueleto deben ser estrictamente crecientes")

    @property
    def dimension(self) -> int:
        return self.states.shape[1]

    @property
    def t0(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def step_sizes(self) -> np.ndarray:
        return np.diff(self.times)


class DenseSolution:
    """Solución evaluable en todo [t0, t_end] con acceso a la derivada."""

    def __init__(
        self,
        skeleton: SolutionSkeleton,
        kind: str = "cubic-hermite",
        stages: Optional[np.ndarray] = None,
    ) -> None:
        if kind not in INTERPOLANTS:
            raise ValueError(f"Interpolante desconocido: {kind!r}. Opciones: {', '.join(INTERPOLANTS)}")
        if len(skeleton.times) < 2:
            raise ValueError("Una solución densa necesita al menos dos puntos")
        self.skeleton = skeleton
        self.kind = kind
        self._stages = stages
        if kind == "cubic-hermite":
            self._spline = CubicHermiteSpline(skeleton.times, skeleton.states, skeleton.derivatives, axis=0)
        elif kind == "skeleton-spline":
            self._spline = CubicSpline(skeleton.times, skeleton.states, axis=0)
        else:
            if stages is None or stages.shape != (len(skeleton.times) - 1, 7, skeleton.dimension):
                raise ValueError("El interpolante 'method-order' requiere las etapas de cada paso")
            self._spline = None

    @property
    def t0(self) -> float:
        return self.skeleton.t0

    @property
    def t_end(self) -> float:
        return self.skeleton.t_end

    @property
    def dimension(self) -> int:
        return self.skeleton.dimension

    def eval(self, t: float, derivative_order: int = 0) -> np.ndarray:
        return self.eval_many(np.array([t], dtype=float), derivative_order)[0]

    def eval_many(self, ts: Union[Sequence[float], np.ndarray], derivative_order: int = 0) -> np.ndarray:
        """Evalúa en varios tiempos; devuelve una matriz (len(ts), d)."""
        if derivative_order not in (0, 1):
            raise ValueError(f"derivative_order debe ser 0 o 1 (recibido {derivative_order})")
        ts = np.atleast_1d(np.asarray(ts, dtype=float))
        if np.any(~np.isfinite(ts)) or np.any(ts < self.t0) or np.any(ts > self.t_end):
            raise ValueError(f"Tiempo fuera del intervalo [{self.t0}, {self.t_end}]")
        times = self.skeleton.times
        if self._spline is not None:
            values = np.asarray(self._spline(ts, derivative_order), dtype=float).reshape(len(ts), self.dimension)
        else:
            values = self._eval_method_order(ts, derivative_order)
        # Condiciones de interpolación exactas en los nodos
        pos = np.clip(np.searchsorted(times, ts, side="left"), 0, len(times) - 1)
        at_node = times[pos] == ts
        if np.any(at_node):
            if derivative_order == 0:
                values[at_node] = self.skeleton.states[pos[at_node]]
            elif self.kind != "skeleton-spline":
                values[at_node] = self.skeleton.derivatives[pos[at_node]]
        return values

    def _eval_method_order(self, ts: np.ndarray, derivative_order: int) -> np.ndarray:
        times = self.skeleton.times
        idx = np.clip(np.searchsorted(times, ts, side="right") - 1, 0, len(times) - 2)
        h = times[idx + 1] - times[idx]
        theta = (ts - times[idx]) / h
        if derivative_order == 0:
            powers = np.stack([theta, theta**2, theta**3, theta**4], axis=1)
        else:
            powers = np.stack([np.ones_like(theta), 2 * theta, 3 * theta**2, 4 * theta**3], axis=1)
        weights = powers @ _P.T
        increment = np.einsum("mi,mid->md", weights, self._stages[idx])
        if derivative_order == 1:
            return increment
        return self.skeleton.states[idx] + h[:, None] * increment


def eval_dense(solution: DenseSolution, t: float, derivative_order: int = 0) -> np.ndarray:
    return solution.eval(t, derivative_order)


def eval_dense_many(solution: DenseSolution, ts, derivative_order: int = 0) -> np.ndarray:
    return solution.eval_many(ts, derivative_order)


def _rms(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def _initial_step(system: DynamicalSystem, t0: float, y0: np.ndarray, f0: np.ndarray, config: SolverConfig) -> float:
    scale = config.atol + config.rtol * np.abs(y0)
    d0 = _rms(y0 / scale)
    d1 = _rms(f0 / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = system.rhs(t0 + h0, y0 + h0 * f0)
    d2 = _rms((f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def _check_problem(system: DynamicalSystem, y0, t0: float, t_end: float) -> np.ndarray:
    y = np.asarray(y0, dtype=float).ravel()
    if y.shape[0] != system.dimension:
        raise ValueError(f"y0 tiene dimensión {y.shape[0]}; {system.name} requiere {system.dimension}")
    if not np.all(np.isfinite(y)):
        raise ValueError(f"y0 no es finito: {y}")
    if not (math.isfinite(t0) and math.isfinite(t_end) and t_end > t0):
        raise ValueError(f"Se requiere t_end > t0 finitos (t0={t0}, t_end={t_end})")
    return y


def integrate_adaptive(
    system: DynamicalSystem,
    y0,
    t0: float,
    t_end: float,
    config: Optional[SolverConfig] = None,
    interpolant: str = "cubic-hermite",
) -> DenseSolution:
    """Integra con Dormand–Prince 5(4) y control de error por norma WRMS."""
    config = config or SolverConfig()
    if interpolant not in INTERPOLANTS:
        raise ValueError(f"Interpolante desconocido: {interpolant!r}")
    y = _check_problem(system, y0, t0, t_end)
    span = t_end - t0
    h_min = UNDERFLOW_FACTOR * span

    t = float(t0)
    f = np.asarray(system.rhs(t, y), dtype=float)
    nfev = 1
    times: List[float] = [t]
    states: List[np.ndarray] = [y]
    derivs: List[np.ndarray] = [f]
    stages: List[np.ndarray] = []
    errors: List[float] = []
    n_rejected = 0

    def partial() -> SolutionSkeleton:
        return SolutionSkeleton(
            np.array(times), np.array(states), np.array(derivs), len(times) - 1, n_rejected, np.array(errors), nfev
        )

    if config.h_init is not None:
        h = config.h_init
    else:
        h = _initial_step(system, t, y, f, config)
        nfev += 1
    h = min(h, config.h_max, span)
    K = np.empty((7, y.size))
    while t < t_end:
        last = t + h >= t_end - UNDERFLOW_FACTOR * span
        if last:
            h = t_end - t
        t_new = t_end if last else t + h
        K[0] = f
        for i in range(1, 6):
            K[i] = system.rhs(t + _C[i] * h, y + h * (_A[i] @ K[:i]))
        y_new = y + h * (_B @ K[:6])
        K[6] = system.rhs(t_new, y_new)
        nfev += 6
        if not (np.all(np.isfinite(y_new)) and np.all(np.isfinite(K))):
            n_rejected += 1
            h *= config.step_shrink_floor
            if h < h_min:
                raise DivergenceError(
                    f"Estado no finito cerca de t={t:.6g} ({system.name})", partial=partial(), step_index=len(times)
                )
            continue
        scale = config.atol + config.rtol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(h * (_E @ K) / scale)
        if err <= 1.0:
            t, y, f = t_new, y_new, K[6].copy()
            times.append(t)
            states.append(y)
            derivs.append(f)
            stages.append(K.copy())
            errors.append(err)
            factor = config.step_grow_cap if err == 0 else config.safety * err ** (-1 / 5)
            factor = min(config.step_grow_cap, max(config.step_shrink_floor, factor))
            h = min(h * factor, config.h_max)
        else:
            n_rejected += 1
            h *= max(config.step_shrink_floor, config.safety * err ** (-1 / 5))
        if t < t_end and h < h_min:
            raise StepSizeUnderflowError(
                f"Paso h={h:.3e} menor que {h_min:.3e} en t={t:.6g}: rigidez o explosión",
                partial=partial(),
                step_index=len(times),
            )

    skeleton = partial()
    return DenseSolution(skeleton, interpolant, np.array(stages) if interpolant == "method-order" else None)


def integrate_euler_fixed(
    system: DynamicalSystem,
    y0,
    t0: float,
    t_end: float,
    h: float,
    interpolant: str = "cubic-hermite",
) -> DenseSolution:
    """Euler explícito con paso fijo; el último paso se recorta para llegar a t_end."""
    if not h > 0:
        raise ValueError(f"h debe ser > 0 (recibido {h})")
    if interpolant == "method-order":
        raise ValueError("Euler no tiene interpolante 'method-order'")
    y = _check_problem(system, y0, t0, t_end)
    n = max(1, int(round((t_end - t0) / h)))
    times = t0 + h * np.arange(n + 1, dtype=float)
    times[-1] = t_end
    states = np.empty((n + 1, y.size))
    derivs = np.empty((n + 1, y.size))
    states[0] = y
    derivs[0] = system.rhs(times[0], y)
    for k in range(n):
        y_next = states[k] + (times[k + 1] - times[k]) * derivs[k]
        if not np.all(np.isfinite(y_next)):
            raise DivergenceError(
                f"Euler divergió en el paso {k + 1} (t={times[k + 1]:.6g})",
                partial=SolutionSkeleton(times[: k + 1], states[: k + 1], derivs[: k + 1], k, rhs_evaluations=k + 1),
                step_index=k + 1,
            )
        states[k + 1] = y_next
        derivs[k + 1] = system.rhs(times[k + 1], y_next)
    skeleton = SolutionSkeleton(times, states, derivs, n, rhs_evaluations=n + 1)
    return DenseSolution(skeleton, interpolant)


@dataclass
class LeapfrogRun:
    """Muestras sincronizadas (p1, p2, q1, q2) en t_k = t0 + k·h."""

    h: float
    states: np.ndarray
    N: int
    force_evaluations: int = 0
    diverged_at: Optional[int] = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None

    def state(self, k: int) -> HamiltonianState:
        return HamiltonianState.from_array(self.states[k])

    @property
    def times(self) -> np.ndarray:
        return self.h * np.arange(len(self.states), dtype=float)


@dataclass
class KickDriftRun:
    """Secuencias p_n y Q_n = q_n + h·p_n/2 de la forma impulso-deriva."""

    h: float
    p: np.ndarray
    Q: np.ndarray
    N: int
    force_evaluations: int = 0


def _leapfrog_args(h: float, N: int) -> None:
    if not (math.isfinite(h) and h != 0):
        raise ValueError(f"h debe ser finito y no nulo (recibido {h})")
    if int(N) != N or N < 1:
        raise ValueError(f"N debe ser un entero >= 1 (recibido {N})")


def leapfrog_dkd(
    state0: Union[HamiltonianState, Sequence[float]],
    h: float,
    N: int,
    force: ForceFn = henon_heiles_force,
) -> LeapfrogRun:
    """
    Leapfrog deriva-impulso-deriva con H_p = p y H_q = U_q(q).

    Un h negativo integra hacia atrás en el tiempo.
    """
    _leapfrog_args(h, N)
    if isinstance(state0, HamiltonianState):
        p1, p2, q1, q2 = state0.p1, state0.p2, state0.q1, state0.q2
    else:
        p1, p2, q1, q2 = (float(v) for v in state0)
    half = 0.5 * h
    states = np.empty((N + 1, 4))
    states[0] = (p1, p2, q1, q2)
    for k in range(N):
        q1 = q1 + half * p1
        q2 = q2 + half * p2
        f1, f2 = force(q1, q2)
        p1 = p1 - h * f1
        p2 = p2 - h * f2
        q1 = q1 + half * p1
        q2 = q2 + half * p2
        if not (math.isfinite(p1) and math.isfinite(p2) and math.isfinite(q1) and math.isfinite(q2)):
            raise DivergenceError(
                f"Leapfrog divergió en el paso {k + 1} con h={h}",
                partial=LeapfrogRun(h, states[: k + 1].copy(), k, k + 1, diverged_at=k + 1),
                step_index=k + 1,
            )
        states[k + 1] = (p1, p2, q1, q2)
    return LeapfrogRun(h, states, N, N)


def leapfrog_dkd_tolerant(
    state0: Union[HamiltonianState, Sequence[float]],
    h: float,
    N: int,
    force: ForceFn = henon_heiles_force,
) -> LeapfrogRun:
    """Como ``leapfrog_dkd`` pero devuelve la corrida parcial marcada si diverge."""
    try:
        return leapfrog_dkd(state0, h, N, force)
    except DivergenceError as exc:
        return exc.partial


def leapfrog_kick_drift(
    p0: Sequence[float],
    Q0: Sequence[float],
    h: float,
    N: int,
    force: ForceFn = henon_heiles_force,
) -> KickDriftRun:
    """p_{n+1} = p_n − h·U_q(Q_n); Q_{n+1} = Q_n + h·p_{n+1}."""
    _leapfrog_args(h, N)
    p1, p2 = (float(v) for v in p0)
    Q1, Q2 = (float(v) for v in Q0)
    ps = np.empty((N + 1, 2))
    Qs = np.empty((N + 1, 2))
    ps[0] = (p1, p2)
    Qs[0] = (Q1, Q2)
    for k in range(N):
        f1, f2 = force(Q1, Q2)
        p1 = p1 - h * f1
        p2 = p2 - h * f2
        Q1 = Q1 + h * p1
        Q2 = Q2 + h * p2
        if not (math.isfinite(p1) and math.isfinite(p2) and math.isfinite(Q1) and math.isfinite(Q2)):
            raise DivergenceError(
                f"Leapfrog (impulso-deriva) divergió en el paso {k + 1} con h={h}",
                partial=KickDriftRun(h, ps[: k + 1].copy(), Qs[: k + 1].copy(), k, k + 1),
                step_index=k + 1,
            )
        ps[k + 1] = (p1, p2)
        Qs[k + 1] = (Q1, Q2)
    return KickDriftRun(h, ps, Qs, N, N)


def kick_drift_start(state0: Union[HamiltonianState, Sequence[float]], h: float) -> Tuple[np.ndarray, np.ndarray]:
    """Convierte (p, q) en (p, Q) con Q = q + h·p/2."""
    arr = state0.as_array() if isinstance(state0, HamiltonianState) else np.asarray(state0, dtype=float)
    p = arr[:2]
    return p.copy(), arr[2:] + 0.5 * h * p


__all__ = [
    "INTERPOLANTS",
    "IntegrationError",
    "DivergenceError",
    "StepSizeUnderflowError",
    "SolverConfig",
    "SolutionSkeleton",
    "DenseSolution",
    "eval_dense",
    "eval_dense_many",
    "LeapfrogRun",
    "KickDriftRun",
    "integrate_adaptive",
    "integrate_euler_fixed",
    "leapfrog_dkd",
    "leapfrog_dkd_tolerant",
    "leapfrog_kick_drift",
    "kick_drift_start",
]
