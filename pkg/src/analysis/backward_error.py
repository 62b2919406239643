"""
Análisis de error hacia atrás.

Residuo r(t) = Ẏ − f(t, Y) de soluciones densas, campo modificado de Euler
explícito, serie modificada de Hénon–Heiles para el leapfrog (términos K,
H2, H4) y deriva de energía con detección de caos espurio.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.config import Config
from src.model.integrators import DenseSolution, LeapfrogRun, integrate_euler_fixed, leapfrog_dkd_tolerant
from src.model.systems import DynamicalSystem, HamiltonianState, hamiltonian_h0, henon_heiles_rhs

StateLike = Union[HamiltonianState, Sequence[float], np.ndarray]
ORDERS = (0, 2, 4)


@dataclass
class ResidualSeries:
    times: np.ndarray
    residuals: np.ndarray
    norms: np.ndarray
    relative_norms: np.ndarray

    @property
    def max_norm(self) -> float:
        return float(np.max(self.norms))

    @property
    def argmax_time(self) -> float:
        return float(self.times[int(np.argmax(self.norms))])

    @property
    def max_relative_norm(self) -> float:
        return float(np.max(self.relative_norms))

    def to_frame(self, relative: bool = False) -> pd.DataFrame:
        data = {"t": self.times}
        for i in range(self.residuals.shape[1]):
            data[f"r{i + 1}"] = self.residuals[:, i]
        data["norm"] = self.norms
        if relative:
            data["relative_norm"] = self.relative_norms
        return pd.DataFrame(data)

    def summary(self) -> Dict[str, float]:
        return {
            "samples": int(len(self.times)),
            "max_residual": self.max_norm,
            "argmax_t": self.argmax_time,
            "max_relative_residual": self.max_relative_norm,
            "mean_residual": float(np.mean(self.norms)),
        }


def _sample_residuals(solution: DenseSolution, system: DynamicalSystem, ts: np.ndarray) -> ResidualSeries:
    states = solution.eval_many(ts, 0)
    slopes = solution.eval_many(ts, 1)
    field_values = np.asarray(system.rhs(ts, states.T), dtype=float).T
    residuals = slopes - field_values
    norms = np.linalg.norm(residuals, axis=1)
    scale = np.maximum(1.0, np.linalg.norm(states, axis=1))
    return ResidualSeries(ts, residuals, norms, norms / scale)


def residual_series(
    solution: DenseSolution,
    system: DynamicalSystem,
    t_from: Optional[float] = None,
    t_to: Optional[float] = None,
    n_samples: int = 1000,
) -> ResidualSeries:
    """Muestrea r(t) en ``n_samples`` tiempos equiespaciados de [t_from, t_to]."""
    t_from = solution.t0 if t_from is None else t_from
    t_to = solution.t_end if t_to is None else t_to
    if n_samples < 2:
        raise ValueError(f"n_samples debe ser >= 2 (recibido {n_samples})")
    if not (solution.t0 <= t_from < t_to <= solution.t_end):
        raise ValueError(
            f"Rango [{t_from}, {t_to}] fuera del intervalo de la solución [{solution.t0}, {solution.t_end}]"
        )
    if solution.dimension != system.dimension:
        raise ValueError(f"Dimensión de la solución {solution.dimension} != dimensión del sistema {system.dimension}")
    return _sample_residuals(solution, system, np.linspace(t_from, t_to, n_samples))


def step_sample_times(solution: DenseSolution, samples_per_step: int) -> np.ndarray:
    """t_k + (j/S)·h_k para j = 0..S−1 en cada paso, más el extremo final."""
    if samples_per_step < 1:
        raise ValueError(f"samples_per_step debe ser >= 1 (recibido {samples_per_step})")
    times = solution.skeleton.times
    fractions = np.arange(samples_per_step, dtype=float) / samples_per_step
    grid = times[:-1, None] + fractions[None, :] * np.diff(times)[:, None]
    return np.append(grid.ravel(), times[-1])


def residual_on_steps(solution: DenseSolution, system: DynamicalSystem, samples_per_step: int) -> ResidualSeries:
    return _sample_residuals(solution, system, step_sample_times(solution, samples_per_step))


def max_residual(
    solution: DenseSolution,
    system: DynamicalSystem,
    samples_per_step: int = Config.SAMPLES_PER_STEP,
    relative: bool = False,
) -> Tuple[float, float]:
    """Máximo residuo euclidiano (o relativo) y el tiempo donde se alcanza."""
    series = residual_on_steps(solution, system, samples_per_step)
    values = series.relative_norms if relative else series.norms
    k = int(np.argmax(values))
    return float(values[k]), float(series.times[k])


class ModifiedEulerSystem(DynamicalSystem):
    """Campo y ↦ f(y) + c·h·J_f(y)·f(y) (para campos autónomos)."""

    def __init__(self, base: DynamicalSystem, h: float, coefficient: float) -> None:
        self.base = base
        self.h = float(h)
        self.coefficient = float(coefficient)
        self.dimension = base.dimension
        self.name = f"modified-euler({base.name})"

    def rhs(self, t, y):
        f = self.base.rhs(t, y)
        return f + (self.coefficient * self.h) * self.base.jvp(t, y, f)


def modified_euler_rhs(
    system: DynamicalSystem, h: float, coefficient: float = Config.EULER_COEFFICIENT
) -> ModifiedEulerSystem:
    if not system.has_jacobian:
        raise ValueError(f"{system.name} no provee jacobiano; no se puede construir el campo modificado")
    if not h >= 0:
        raise ValueError(f"h debe ser >= 0 (recibido {h})")
    return ModifiedEulerSystem(system, h, coefficient)


@dataclass
class OrderStudy:
    steps: np.ndarray
    original: np.ndarray
    modified: Dict[float, np.ndarray]
    slopes: Dict[str, float] = field(default_factory=dict)

    def best_coefficient(self) -> float:
        """Coeficiente cuyo residuo decae más rápido con h."""
        return max(self.modified, key=lambda c: self.slopes[f"modified_{c:g}"])

    def to_frame(self) -> pd.DataFrame:
        data = {"h": self.steps, "original": self.original}
        for c, values in self.modified.items():
            data[f"modified_{c:g}"] = values
        return pd.DataFrame(data)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(x) < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("Se requieren al menos dos puntos positivos para la pendiente log-log")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


def residual_order_study(
    system: DynamicalSystem,
    y0,
    t_end: float = Config.EULER_T_END,
    steps: Sequence[float] = Config.EULER_STEPS,
    coefficients: Sequence[float] = (-0.5, 1.0),
    samples_per_step: int = 4,
) -> OrderStudy:
    """
    Orden del residuo de Euler explícito en el campo original y en los
    campos modificados, con el spline del esqueleto como interpolante.
    """
    steps = np.asarray(steps, dtype=float)
    original: List[float] = []
    modified: Dict[float, List[float]] = {float(c): [] for c in coefficients}
    for h in steps:
        solution = integrate_euler_fixed(system, y0, 0.0, t_end, float(h), interpolant="skeleton-spline")
        original.append(max_residual(solution, system, samples_per_step)[0])
        for c in modified:
            modified[c].append(max_residual(solution, modified_euler_rhs(system, h, c), samples_per_step)[0])
    study = OrderStudy(steps, np.array(original), {c: np.array(v) for c, v in modified.items()})
    study.slopes["original"] = loglog_slope(steps, study.original)
    for c, values in study.modified.items():
        study.slopes[f"modified_{c:g}"] = loglog_slope(steps, values)
    return study


def _pq(state: StateLike) -> Tuple:
    if isinstance(state, HamiltonianState):
        return state.p1, state.p2, state.q1, state.q2
    arr = np.asarray(state, dtype=float)
    if arr.shape[0] != 4:
        raise ValueError(f"Estado hamiltoniano de dimensión 4 esperado, forma {arr.shape}")
    return arr[0], arr[1], arr[2], arr[3]


def k_terms(state: StateLike) -> Tuple:
    """(K1, K2, K4, K5, K7, K8, K10, K11) de la ecuación modificada del leapfrog."""
    p1, p2, q1, q2 = _pq(state)
    K1 = (
        -2 * q1 + 5 * p1 * p2 - 24 * q1 * q2 - 20 * q1 * q2**2 - 24 * q2 * q1**3 - 8 * q1 * q2**3
        + 5 * q1 * p1**2 - q1 * p2**2 - 20 * q1**3 + 6 * q2 * p1 * p2
    )
    K2 = p1 * p2 - 2 * q1**3 - 2 * q1 * q2**2 - 6 * q1 * q2 - q1
    K4 = (
        2 * q2 * p1**2 - 10 * q2 * p2**2 + 24 * q1**2 * q2**2 + 40 * q2**3 + 12 * q1**4 - 20 * q2**4
        + 40 * q1**2 * q2 - 12 * q1 * p1 * p2 + 24 * q1**2 - 24 * q2**2 - 5 * p1**2 + 5 * p2**2 + 4 * q2
    )
    K5 = p1**2 - p2**2 - 6 * q1**2 + 6 * q2**2 - 2 * q2 - 4 * q1**2 * q2 - 4 * q2**3
    K7 = 12 * q2 * q1 * p2 - 2 * p1 * q2**2 + 10 * p1 * q2 + 10 * q1**2 * p1 + 10 * q1 * p2 + p1
    K8 = 2 * q1 * p2 + 2 * p1 * q2 + p1
    K10 = -2 * q1**2 * p2 + 12 * q1 * p1 * q2 + 10 * q1 * p1 + 10 * q2**2 * p2 - 10 * q2 * p2 + p2
    K11 = 2 * q1 * p1 - 2 * q2 * p2 + p2
    return K1, K2, K4, K5, K7, K8, K10, K11


def hh_modified_rhs(state: StateLike, h: float):
    """Campo de Hénon–Heiles con correcciones h² y h⁴ (se omiten términos O(h⁶))."""
    base = henon_heiles_rhs(state)
    if h == 0:
        return base
    K1, K2, K4, K5, K7, K8, K10, K11 = k_terms(state)
    h2 = h * h
    h4 = h2 * h2
    corr = (
        K2 * h2 / 6 + K1 * h4 / 60,
        K5 * h2 / 12 - K4 * h4 / 120,
        -K8 * h2 / 12 - K7 * h4 / 120,
        -K11 * h2 / 12 - K10 * h4 / 120,
    )
    if isinstance(state, HamiltonianState):
        return HamiltonianState(base.p1 + corr[0], base.p2 + corr[1], base.q1 + corr[2], base.q2 + corr[3])
    return base + np.array(corr)


def h0_term(state: StateLike):
    if isinstance(state, HamiltonianState):
        return hamiltonian_h0(state)
    return hamiltonian_h0(np.asarray(state, dtype=float))


def h2_term(state: StateLike):
    p1, p2, q1, q2 = _pq(state)
    return (
        -p1**2 * q2 / 12 - p1**2 / 24 - q1 * p2 * p1 / 6 + p2**2 * q2 / 12 - p2**2 / 24
        + q1**4 / 12 + q1**2 * q2**2 / 6 + q2**4 / 12 + q1**2 * q2 / 2 - q2**3 / 6
        + q1**2 / 12 + q2**2 / 12
    )


def h4_term(state: StateLike):
    p1, p2, q1, q2 = _pq(state)
    return (
        q1**4 * q2 / 10 + q1**2 * q2**3 / 15 - q2**5 / 30 - p1**2 * q1**2 / 24 + p1**2 * q2**2 / 120
        - p1 * q2 * q1 * p2 / 10 + p2**2 * q1**2 / 120 - p2**2 * q2**2 / 24 + q1**4 / 12
        + q1**2 * q2**2 / 6 + q2**4 / 12 - p1**2 * q2 / 24 - q1 * p2 * p1 / 12 + p2**2 * q2 / 24
        + q1**2 * q2 / 5 - q2**3 / 15 - p1**2 / 240 - p2**2 / 240 + q1**2 / 60 + q2**2 / 60
    )


def _check_order(order: int) -> None:
    if order not in ORDERS:
        raise ValueError(f"order debe ser 0, 2 o 4 (recibido {order})")


def modified_hamiltonian(state: StateLike, h: float, order: int = 4):
    """H0, H0 + h²H2 o H0 + h²H2 + h⁴H4."""
    _check_order(order)
    value = h0_term(state)
    if order >= 2:
        value = value + h**2 * h2_term(state)
    if order >= 4:
        value = value + h**4 * h4_term(state)
    return float(value) if np.ndim(value) == 0 else value


@dataclass
class ModifiedHamiltonianSeries:
    order: int
    h: float
    values: np.ndarray


def modified_hamiltonian_series(run: LeapfrogRun, order: int) -> ModifiedHamiltonianSeries:
    _check_order(order)
    return ModifiedHamiltonianSeries(order, run.h, modified_hamiltonian(run.states.T, run.h, order))


@dataclass
class EnergyDriftReport:
    h: float
    N: int
    drifts: Dict[int, float]
    reference_energy: float
    threshold: float = Config.SPURIOUS_THRESHOLD
    diverged: bool = False
    diverged_at: Optional[int] = None
    spurious: bool = False

    def to_dict(self) -> Dict[str, object]:
        return {
            "h": self.h,
            "N": self.N,
            "reference_energy": self.reference_energy,
            **{f"drift_order{k}": v for k, v in sorted(self.drifts.items())},
            "threshold": self.threshold,
            "diverged": self.diverged,
            "diverged_at": self.diverged_at,
            "spurious_chaos": self.spurious,
        }


def energy_drift(
    run: LeapfrogRun,
    orders: Iterable[int] = ORDERS,
    threshold: float = Config.SPURIOUS_THRESHOLD,
) -> EnergyDriftReport:
    """max_k |H̃(estado_k) − H̃(estado_0)| para cada orden pedido."""
    orders = sorted(set(int(o) for o in orders))
    if not orders:
        raise ValueError("Se requiere al menos un orden")
    if len(run.states) == 0:
        raise ValueError("La corrida no tiene estados")
    finite = np.all(np.isfinite(run.states), axis=1)
    diverged = run.diverged or not bool(np.all(finite))
    diverged_at = run.diverged_at
    if diverged_at is None and not np.all(finite):
        diverged_at = int(np.argmin(finite))
    states = run.states[finite].T
    drifts: Dict[int, float] = {}
    for order in orders:
        _check_order(order)
        values = np.atleast_1d(modified_hamiltonian(states, run.h, order))
        drifts[order] = float(np.max(np.abs(values - values[0])))
    reference = hamiltonian_reference(run)
    report = EnergyDriftReport(run.h, run.N, drifts, reference, threshold, diverged, diverged_at)
    if reference != 0:
        report.spurious = detect_spurious_chaos(report, reference, threshold)
    return report


def hamiltonian_reference(run: LeapfrogRun) -> float:
    return float(h0_term(run.states[0]))


def detect_spurious_chaos(
    report: EnergyDriftReport,
    reference_energy: float,
    threshold: Optional[float] = None,
) -> bool:
    """Marca cuando la deriva del orden más alto supera threshold·|H(0)| o la corrida divergió."""
    if reference_energy == 0 or not math.isfinite(reference_energy):
        raise ValueError(f"reference_energy debe ser finita y no nula (recibido {reference_energy})")
    threshold = report.threshold if threshold is None else threshold
    if report.diverged:
        return True
    drift = report.drifts[max(report.drifts)]
    return drift > threshold * abs(reference_energy)


def energy_series(run: LeapfrogRun, orders: Iterable[int] = ORDERS) -> pd.DataFrame:
    """Tabla por paso: t, estado y H̃ de cada orden."""
    data = {"t": run.times}
    for i, name in enumerate(("p1", "p2", "q1", "q2")):
        data[name] = run.states[:, i]
    for order in sorted(set(orders)):
        data[f"energy_order{order}"] = modified_hamiltonian(run.states.T, run.h, order)
    return pd.DataFrame(data)


@dataclass
class DriftScaling:
    h_values: np.ndarray
    drift_order0: np.ndarray
    drift_order2: np.ndarray
    slope_order0: float
    slope_order2: float


def drift_scaling(
    state0: StateLike = Config.HH_STATE0,
    h_values: Sequence[float] = Config.DRIFT_H_VALUES,
    t_end: float = Config.DRIFT_T_END,
) -> DriftScaling:
    """Pendientes log-log de la deriva de H0 y de H0 + h²H2 sobre un tiempo fijo."""
    h_values = np.asarray(h_values, dtype=float)
    d0, d2 = [], []
    for h in h_values:
        run = leapfrog_dkd_tolerant(state0, float(h), max(1, int(round(t_end / h))))
        report = energy_drift(run, (0, 2))
        d0.append(report.drifts[0])
        d2.append(report.drifts[2])
    d0 = np.array(d0)
    d2 = np.array(d2)
    return DriftScaling(h_values, d0, d2, loglog_slope(h_values, d0), loglog_slope(h_values, d2))


__all__ = [
    "ResidualSeries",
    "residual_series",
    "step_sample_times",
    "residual_on_steps",
    "max_residual",
    "ModifiedEulerSystem",
    "modified_euler_rhs",
    "OrderStudy",
    "loglog_slope",
    "residual_order_study",
    "k_terms",
    "hh_modified_rhs",
    "h0_term",
    "h2_term",
    "h4_term",
    "modified_hamiltonian",
    "ModifiedHamiltonianSeries",
    "modified_hamiltonian_series",
    "EnergyDriftReport",
    "energy_drift",
    "detect_spurious_chaos",
    "energy_series",
    "DriftScaling",
    "drift_scaling",
]
