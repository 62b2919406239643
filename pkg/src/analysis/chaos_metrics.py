"""
Diagnósticos de caos con perturbaciones persistentes.

Una perturbación persistente suma ε·v(t), con ‖v(t)‖∞ ≤ 1, al lado derecho.
Para un sistema caótico dos copias perturbadas desde el mismo estado inicial
se separan a O(1) en un tiempo T ∝ ln(1/ε)/λ.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.signal import argrelmax

from src.config import Config
from src.model.integrators import DenseSolution, SolverConfig, integrate_adaptive
from src.model.systems import DynamicalSystem, ForcedOscillator, ForcedOscillatorParams

DISTURBANCE_KINDS = ("multi-sine", "seeded-piecewise")


@dataclass(frozen=True)
class DisturbanceSpec:
    epsilon: float
    kind: str = "multi-sine"
    seed: int = 0
    dimension: int = 3
    n_modes: int = Config.DISTURBANCE_MODES
    piece_length: float = 1.0

    def __post_init__(self) -> None:
        if not (self.epsilon >= 0 and math.isfinite(self.epsilon)):
            raise ValueError(f"epsilon debe ser finito y >= 0 (recibido {self.epsilon})")
        if self.kind not in DISTURBANCE_KINDS:
            raise ValueError(f"Tipo de perturbación desconocido: {self.kind!r}")
        if self.dimension < 1 or self.n_modes < 1 or not self.piece_length > 0:
            raise ValueError("dimension, n_modes y piece_length deben ser positivos")


@lru_cache(maxsize=64)
def _multisine_modes(seed: int, dimension: int, n_modes: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    amplitudes = rng.uniform(0.1, 1.0, size=(dimension, n_modes))
    amplitudes /= amplitudes.sum(axis=1, keepdims=True)
    frequencies = rng.uniform(0.5, 3.0, size=(dimension, n_modes))
    phases = rng.uniform(0.0, 2 * np.pi, size=(dimension, n_modes))
    return amplitudes, frequencies, phases


@lru_cache(maxsize=4096)
def _piece_value(seed: int, piece: int, dimension: int) -> np.ndarray:
    rng = np.random.default_rng([seed, piece % 2**32])
    return rng.uniform(-1.0, 1.0, size=dimension)


def disturbance_signal(spec: DisturbanceSpec, t, dimension: Optional[int] = None) -> np.ndarray:
    """v(t): forma (d,) para t escalar o (d, n) para n tiempos."""
    if dimension is not None and dimension != spec.dimension:
        raise ValueError(f"Dimensión {dimension} no coincide con la de la perturbación ({spec.dimension})")
    t_arr = np.asarray(t, dtype=float)
    scalar = t_arr.ndim == 0
    ts = np.atleast_1d(t_arr)
    if spec.kind == "multi-sine":
        a, w, phi = _multisine_modes(spec.seed, spec.dimension, spec.n_modes)
        values = np.einsum("dm,dmn->dn", a, np.sin(w[:, :, None] * ts[None, None, :] + phi[:, :, None]))
    else:
        pieces = np.floor(ts / spec.piece_length).astype(np.int64)
        values = np.empty((spec.dimension, len(ts)))
        for piece in np.unique(pieces):
            values[:, pieces == piece] = _piece_value(spec.seed, int(piece), spec.dimension)[:, None]
    values = np.clip(values, -1.0, 1.0)
    return values[:, 0] if scalar else values


class DisturbedSystem(DynamicalSystem):
    """ẏ = f(t, y) + ε·v(t)."""

    def __init__(self, base: DynamicalSystem, spec: DisturbanceSpec) -> None:
        if spec.dimension != base.dimension:
            raise ValueError(f"Perturbación de dimensión {spec.dimension} para {base.name} ({base.dimension})")
        self.base = base
        self.spec = spec
        self.dimension = base.dimension
        self.name = f"{base.name}+disturbance"

    def rhs(self, t, y):
        f = self.base.rhs(t, y)
        if self.spec.epsilon == 0:
            return f
        v = disturbance_signal(self.spec, t)
        if np.ndim(f) == 2 and v.ndim == 1:
            v = v[:, None]
        return f + self.spec.epsilon * v

    def jacobian(self, t, y):
        return self.base.jacobian(t, y)

    def jvp(self, t, y, v):
        return self.base.jvp(t, y, v)


class PairSystem(DynamicalSystem):
    """Dos copias integradas como un solo sistema con la misma secuencia de pasos."""

    def __init__(self, first: DynamicalSystem, second: DynamicalSystem) -> None:
        if first.dimension != second.dimension:
            raise ValueError("Ambas copias deben tener la misma dimensión")
        self.first = first
        self.second = second
        self.half = first.dimension
        self.dimension = 2 * first.dimension
        self.name = f"pair({first.name})"

    def rhs(self, t, y):
        y = np.asarray(y, dtype=float)
        return np.concatenate([self.first.rhs(t, y[: self.half]), self.second.rhs(t, y[self.half :])], axis=0)

    def split(self, values: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return values[..., : self.half], values[..., self.half :]


def _tight(rtol: float) -> SolverConfig:
    return SolverConfig(rtol=rtol, atol=rtol)


def lyapunov_history(
    system: DynamicalSystem,
    y0,
    T_total: float = Config.LYAPUNOV_T_TOTAL,
    renorm_interval: float = Config.LYAPUNOV_RENORM,
    delta0: float = Config.LYAPUNOV_DELTA0,
    transient: float = Config.LYAPUNOV_TRANSIENT,
    rtol: float = Config.LYAPUNOV_RTOL,
) -> np.ndarray:
    """ln(d_k/δ0) de cada intervalo de renormalización tras descartar el transitorio."""
    if not (renorm_interval > 0 and delta0 > 0 and transient >= 0):
        raise ValueError("renorm_interval y delta0 deben ser > 0 y transient >= 0")
    if T_total < 20 * renorm_interval:
        raise ValueError(f"T_total={T_total} debe ser >= 20·renorm_interval={20 * renorm_interval}")
    if T_total <= transient:
        raise ValueError(f"T_total={T_total} debe superar el transitorio {transient}")
    config = _tight(rtol)
    y = system.check_state(y0).astype(float).ravel()
    t = 0.0
    if transient > 0:
        y = integrate_adaptive(system, y, 0.0, transient, config).skeleton.states[-1]
        t = transient
    direction = np.ones_like(y) / math.sqrt(y.size)
    pair = PairSystem(system, system)
    state = np.concatenate([y, y + delta0 * direction])
    n_intervals = int(math.floor((T_total - transient) / renorm_interval + 1e-9))
    logs = np.empty(n_intervals)
    for k in range(n_intervals):
        t_next = transient + (k + 1) * renorm_interval
        end = integrate_adaptive(pair, state, t, t_next, config).skeleton.states[-1]
        y1, y2 = pair.split(end)
        diff = y2 - y1
        distance = float(np.linalg.norm(diff))
        if distance == 0 or not math.isfinite(distance):
            raise ValueError(f"Separación degenerada ({distance}) en t={t_next}")
        logs[k] = math.log(distance / delta0)
        state = np.concatenate([y1, y1 + diff * (delta0 / distance)])
        t = t_next
    return logs


def lyapunov_estimate(
    system: DynamicalSystem,
    y0,
    T_total: float = Config.LYAPUNOV_T_TOTAL,
    renorm_interval: float = Config.LYAPUNOV_RENORM,
    delta0: float = Config.LYAPUNOV_DELTA0,
    transient: float = Config.LYAPUNOV_TRANSIENT,
    rtol: float = Config.LYAPUNOV_RTOL,
) -> float:
    """Mayor exponente de Lyapunov por renormalización de dos trayectorias."""
    logs = lyapunov_history(system, y0, T_total, renorm_interval, delta0, transient, rtol)
    return float(np.mean(logs) / renorm_interval)


@dataclass
class SeparationResult:
    epsilons: Tuple[float, float]
    time: Optional[float]
    threshold: float
    t_max: float
    sample_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    max_separation: float = 0.0

    @property
    def reached(self) -> bool:
        return self.time is not None

    def to_dict(self) -> Dict[str, object]:
        return {
            "epsilon1": self.epsilons[0],
            "epsilon2": self.epsilons[1],
            "reached": self.reached,
            "separation_time": self.time,
            "threshold": self.threshold,
            "t_max": self.t_max,
            "max_separation": self.max_separation,
        }


def _first_crossing(
    solution: DenseSolution, pair: PairSystem, threshold: float, samples_per_step: int = 4
) -> Tuple[Optional[float], np.ndarray, float]:
    times = solution.skeleton.times
    fractions = np.arange(samples_per_step, dtype=float) / samples_per_step
    grid = np.append((times[:-1, None] + fractions[None, :] * np.diff(times)[:, None]).ravel(), times[-1])
    y1, y2 = pair.split(solution.eval_many(grid))
    distances = np.max(np.abs(y1 - y2), axis=1)
    hits = np.nonzero(distances >= threshold)[0]
    if len(hits) == 0:
        return None, grid, float(np.max(distances))
    i = int(hits[0])
    if i == 0:
        return float(grid[0]), grid[: i + 1], float(distances[i])
    lo, hi = float(grid[i - 1]), float(grid[i])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        a, b = pair.split(solution.eval(mid))
        if np.max(np.abs(a - b)) >= threshold:
            hi = mid
        else:
            lo = mid
    return hi, grid[: i + 1], float(distances[i])


def separation_time(
    system: DynamicalSystem,
    y0,
    spec1: DisturbanceSpec,
    spec2: DisturbanceSpec,
    threshold: float = Config.SEPARATION_THRESHOLD,
    t_max: float = Config.SEPARATION_T_MAX,
    rtol: float = Config.SEPARATION_RTOL,
    chunk: float = Config.SEPARATION_CHUNK,
) -> SeparationResult:
    """Primer t con ‖y1(t) − y2(t)‖∞ ≥ threshold para dos copias perturbadas."""
    if not threshold > 0:
        raise ValueError(f"threshold debe ser > 0 (recibido {threshold})")
    if not (t_max > 0 and chunk > 0):
        raise ValueError("t_max y chunk deben ser > 0")
    pair = PairSystem(DisturbedSystem(system, spec1), DisturbedSystem(system, spec2))
    y = system.check_state(y0).astype(float).ravel()
    state = np.concatenate([y, y])
    config = _tight(rtol)
    t = 0.0
    samples: List[np.ndarray] = []
    max_sep = 0.0
    while t < t_max:
        t_next = min(t + chunk, t_max)
        solution = integrate_adaptive(pair, state, t, t_next, config)
        crossing, grid, peak = _first_crossing(solution, pair, threshold)
        samples.append(grid if not samples else grid[1:])
        max_sep = max(max_sep, peak)
        if crossing is not None:
            return SeparationResult((spec1.epsilon, spec2.epsilon), crossing, threshold, t_max, np.concatenate(samples), max_sep)
        state = solution.skeleton.states[-1]
        t = t_next
    return SeparationResult((spec1.epsilon, spec2.epsilon), None, threshold, t_max, np.concatenate(samples), max_sep)


@dataclass
class ScalingFit:
    slope: float
    intercept: float
    epsilons: np.ndarray
    times: np.ndarray
    excluded: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, object]:
        return {
            "slope": self.slope,
            "intercept": self.intercept,
            "epsilons": [float(e) for e in self.epsilons],
            "separation_times": [float(t) for t in self.times],
            "excluded": list(self.excluded),
        }


def fit_log_scaling(epsilons: Sequence[float], times: Sequence[float]) -> Tuple[float, float]:
    """Mínimos cuadrados de T contra ln(1/ε); al menos 3 valores en 4 décadas."""
    eps = np.asarray(epsilons, dtype=float)
    ts = np.asarray(times, dtype=float)
    if len(eps) != len(ts):
        raise ValueError("epsilons y times deben tener la misma longitud")
    if len(eps) < 3:
        raise ValueError(f"Se requieren al menos 3 valores de epsilon (recibidos {len(eps)})")
    if np.any(eps <= 0):
        raise ValueError("Todos los epsilon deben ser > 0")
    if np.log10(eps.max() / eps.min()) < 4 - 1e-9:
        raise ValueError("Los epsilon deben abarcar al menos 4 décadas")
    slope, intercept = np.polyfit(np.log(1.0 / eps), ts, 1)
    return float(slope), float(intercept)


def separation_scaling(
    system: DynamicalSystem,
    y0,
    epsilons: Sequence[float] = Config.SEPARATION_EPSILONS,
    seeds: Tuple[int, int] = Config.SEPARATION_SEEDS,
    threshold: float = Config.SEPARATION_THRESHOLD,
    t_max: float = Config.SEPARATION_T_MAX,
    kind: str = "multi-sine",
) -> ScalingFit:
    used, times, excluded = [], [], []
    for eps in epsilons:
        spec1 = DisturbanceSpec(eps, kind, seeds[0], system.dimension)
        spec2 = DisturbanceSpec(eps, kind, seeds[1], system.dimension)
        result = separation_time(system, y0, spec1, spec2, threshold, t_max)
        if result.reached:
            used.append(float(eps))
            times.append(result.time)
        else:
            excluded.append(float(eps))
    slope, intercept = fit_log_scaling(used, times)
    return ScalingFit(slope, intercept, np.array(used), np.array(times), excluded)


@dataclass
class StatisticsReport:
    window: Tuple[float, float]
    means: np.ndarray
    stds: np.ndarray
    bin_edges: np.ndarray
    counts: np.ndarray
    frequencies: np.ndarray
    component: int

    def to_dict(self) -> Dict[str, object]:
        return {
            "window": list(self.window),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
            "component": self.component + 1,
            "bin_edges": self.bin_edges.tolist(),
            "counts": self.counts.tolist(),
            "frequencies": self.frequencies.tolist(),
        }


def trajectory_statistics(
    solution: DenseSolution,
    window: Tuple[float, float] = Config.STATS_WINDOW,
    n_bins: int = Config.STATS_BINS,
    n_samples: int = Config.STATS_SAMPLES,
    component: int = 2,
) -> StatisticsReport:
    """Medias, desviaciones e histograma de una componente con muestreo uniforme."""
    t_a, t_b = window
    if not (solution.t0 <= t_a < t_b <= solution.t_end):
        raise ValueError(f"Ventana {window} fuera de [{solution.t0}, {solution.t_end}]")
    if n_samples < 1000:
        raise ValueError(f"n_samples debe ser >= 1000 (recibido {n_samples})")
    if n_bins < 1:
        raise ValueError(f"n_bins debe ser >= 1 (recibido {n_bins})")
    values = solution.eval_many(np.linspace(t_a, t_b, n_samples))
    component = min(component, solution.dimension - 1)
    counts, edges = np.histogram(values[:, component], bins=n_bins)
    return StatisticsReport(
        (float(t_a), float(t_b)),
        values.mean(axis=0),
        values.std(axis=0),
        edges,
        counts,
        counts / counts.sum(),
        component,
    )


def envelope_maxima(
    epsilon: float,
    omega: float = 1.0,
    t_end: float = Config.SECULAR_T_END,
    rtol: float = Config.SEPARATION_RTOL,
    samples_per_unit: int = 20,
) -> Tuple[np.ndarray, np.ndarray]:
    """Máximos locales de |y| del oscilador forzado desde el reposo."""
    system = ForcedOscillator(ForcedOscillatorParams(epsilon=epsilon, omega=omega))
    solution = integrate_adaptive(system, [0.0, 0.0], 0.0, t_end, _tight(rtol))
    ts = np.linspace(0.0, t_end, int(t_end * samples_per_unit) + 1)
    amplitude = np.abs(solution.eval_many(ts)[:, 0])
    peaks = argrelmax(amplitude)[0]
    return ts[peaks], amplitude[peaks]


def secular_envelope(
    epsilon: float = Config.SECULAR_EPSILON,
    omega: float = 1.0,
    t_end: float = Config.SECULAR_T_END,
) -> float:
    """Pendiente de la recta ajustada a los máximos de |y| contra t."""
    if not epsilon >= 0:
        raise ValueError(f"epsilon debe ser >= 0 (recibido {epsilon})")
    times, peaks = envelope_maxima(epsilon, omega, t_end)
    if len(times) < 2:
        return 0.0
    return float(np.polyfit(times, peaks, 1)[0])


__all__ = [
    "DISTURBANCE_KINDS",
    "DisturbanceSpec",
    "disturbance_signal",
    "DisturbedSystem",
    "PairSystem",
    "lyapunov_history",
    "lyapunov_estimate",
    "SeparationResult",
    "separation_time",
    "ScalingFit",
    "fit_log_scaling",
    "separation_scaling",
    "StatisticsReport",
    "trajectory_statistics",
    "envelope_maxima",
    "secular_envelope",
]
