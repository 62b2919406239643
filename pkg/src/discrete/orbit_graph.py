"""
Grafo funcional de un mapa en minifloat sobre [0, 1].

Los nodos son los valores representables en orden descendente (índice 1 =
1.0, índice N = 0.0). Cada nodo tiene exactamente un sucesor: la imagen del
mapa evaluada en el formato. Incluye descomposición en ciclos y transitorios,
escalamiento con N, comparación con medidas invariantes, órbitas sombra del
mapa de Gauss y exportación de la tabla de aristas.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from src.config import Config
from src.discrete.lowprec import (
    FloatFormat,
    encode,
    map_array,
    parse_format,
    round_array,
    unit_interval_values,
    unit_roundoff,
)

NAN_POLICIES = ("first", "sink")
MAX_NODES = 2**26


class ShadowingError(ValueError):
    """La pseudo-órbita no admite la construcción hacia atrás."""


@dataclass
class FunctionalGraph:
    format: FloatFormat
    map_id: str
    values: np.ndarray
    successor: np.ndarray
    nan_mask: np.ndarray
    nan_policy: str = "first"

    @property
    def N(self) -> int:
        return len(self.successor)

    @classmethod
    def from_successors(cls, successors: Sequence[int], values: Optional[Sequence[float]] = None) -> "FunctionalGraph":
        """Grafo sintético a partir de sucesores 1-based."""
        succ = np.asarray(successors, dtype=np.int64)
        n = len(succ)
        if n == 0 or np.any(succ < 1) or np.any(succ > n):
            raise ValueError("Los sucesores deben estar en [1, N]")
        vals = np.linspace(1.0, 0.0, n) if values is None else np.asarray(values, dtype=float)
        return cls(FloatFormat(2, 1), "synthetic", vals, succ, np.zeros(n, dtype=bool))


def build_graph(
    fmt: Union[str, FloatFormat],
    map_id: str,
    nan_policy: str = Config.NAN_POLICY,
) -> FunctionalGraph:
    """Sucesor de cada nodo; las imágenes NaN van al nodo 1 o a un sumidero."""
    fmt = parse_format(fmt)
    if nan_policy not in NAN_POLICIES:
        raise ValueError(f"Política NaN desconocida: {nan_policy!r}")
    if fmt.unit_interval_count > MAX_NODES:
        raise ValueError(f"{fmt.name} tiene {fmt.unit_interval_count} nodos (> {MAX_NODES})")
    values = unit_interval_values(fmt)
    n = len(values)
    images = map_array(values, fmt, map_id)
    nan_mask = np.isnan(images)
    finite = ~nan_mask
    images = np.where(images == 0, 0.0, images)
    if np.any((images[finite] < 0) | (images[finite] > 1)):
        raise ValueError(f"El mapa {map_id} produjo imágenes fuera de [0, 1] en {fmt.name}")
    successor = np.empty(n, dtype=np.int64)
    successor[finite] = fmt.one_bits - encode(images[finite], fmt).astype(np.int64) + 1
    if nan_policy == "first":
        successor[nan_mask] = 1
    else:
        successor[nan_mask] = n + 1
        successor = np.append(successor, n + 1)
        values = np.append(values, np.nan)
        nan_mask = np.append(nan_mask, False)
    return FunctionalGraph(fmt, map_id, values, successor, nan_mask, nan_policy)


@dataclass
class OrbitDecomposition:
    cycles: List[List[int]]
    component: np.ndarray
    transient: np.ndarray

    @property
    def cycle_lengths(self) -> List[int]:
        return sorted(len(c) for c in self.cycles)

    @property
    def longest_cycle(self) -> int:
        return max(len(c) for c in self.cycles)

    @property
    def longest_transient(self) -> int:
        return int(self.transient.max())

    @property
    def component_sizes(self) -> List[int]:
        return np.bincount(self.component, minlength=len(self.cycles)).tolist()

    def to_dict(self) -> Dict[str, object]:
        return {
            "n_nodes": int(len(self.component)),
            "n_components": len(self.cycles),
            "cycle_lengths": self.cycle_lengths,
            "cycles": self.cycles,
            "component_sizes": self.component_sizes,
            "longest_cycle": self.longest_cycle,
            "longest_transient": self.longest_transient,
        }


def decompose(graph: FunctionalGraph) -> OrbitDecomposition:
    """Ciclos, componentes y longitudes de transitorio en O(N)."""
    succ = graph.successor - 1
    n = len(succ)
    state = np.zeros(n, dtype=np.int8)
    position = np.zeros(n, dtype=np.int64)
    transient = np.full(n, -1, dtype=np.int64)
    cycle_id = np.full(n, -1, dtype=np.int64)
    cycles: List[List[int]] = []
    for start in range(n):
        if state[start]:
            continue
        path: List[int] = []
        v = start
        while state[v] == 0:
            state[v] = 1
            position[v] = len(path)
            path.append(v)
            v = int(succ[v])
        if state[v] == 1:
            cycle = path[position[v]:]
            for u in cycle:
                transient[u] = 0
                cycle_id[u] = len(cycles)
                state[u] = 2
            cycles.append(cycle)
            path = path[: position[v]]
        for u in reversed(path):
            nxt = succ[u]
            transient[u] = transient[nxt] + 1
            cycle_id[u] = cycle_id[nxt]
            state[u] = 2

    # Representante canónico: rotación que empieza en el menor índice
    canonical = []
    for cycle in cycles:
        k = cycle.index(min(cycle))
        canonical.append([u + 1 for u in cycle[k:] + cycle[:k]])
    order = sorted(range(len(canonical)), key=lambda i: canonical[i][0])
    rank = np.empty(len(order), dtype=np.int64)
    rank[order] = np.arange(len(order))
    return OrbitDecomposition([canonical[i] for i in order], rank[cycle_id], transient)


def check_invariants(graph: FunctionalGraph, decomposition: OrbitDecomposition) -> Dict[str, bool]:
    """Grado de salida 1, llegada a un ciclo propio y suma de componentes = N."""
    succ = graph.successor
    n = graph.N
    out_degree = bool(len(succ) == n and np.all((succ >= 1) & (succ <= n)))
    on_cycle = np.zeros(n, dtype=bool)
    for cycle in decomposition.cycles:
        on_cycle[np.asarray(cycle) - 1] = True
    # avanzar transient[j] pasos desde cada nodo a la vez
    position = np.arange(n)
    remaining = decomposition.transient.copy()
    while np.any(remaining > 0):
        moving = remaining > 0
        position[moving] = succ[position[moving]] - 1
        remaining[moving] -= 1
    reaches = bool(np.all(on_cycle[position]) and np.all(decomposition.component[position] == decomposition.component))
    sizes_sum = bool(sum(decomposition.component_sizes) == n)
    return {"out_degree_one": out_degree, "reaches_cycle": reaches, "component_sizes_sum": sizes_sum}


def gauss_boundaries(graph: FunctionalGraph) -> Dict[str, Optional[int]]:
    """Índices (1-based) del último nodo con imagen no nula, último sin NaN y primer NaN."""
    values = graph.values
    images_nan = graph.nan_mask
    nonzero_x = np.isfinite(values) & (values != 0)
    n = len(graph.nan_mask)
    succ = graph.successor[:n]
    zero_index = int(np.nonzero(values[:n] == 0)[0][0]) + 1 if np.any(values[:n] == 0) else None
    nonzero_image = (~images_nan) & (succ != zero_index) & nonzero_x[:n]
    finite_image = (~images_nan) & nonzero_x[:n]

    def _last(mask: np.ndarray) -> Optional[int]:
        idx = np.nonzero(mask)[0]
        return int(idx[-1]) + 1 if len(idx) else None

    first_nan = np.nonzero(images_nan)[0]
    return {
        "last_nonzero_image": _last(nonzero_image),
        "last_non_nan": _last(finite_image),
        "first_nan": int(first_nan[0]) + 1 if len(first_nan) else None,
    }


def fit_loglog(sizes: Sequence[float], lengths: Sequence[float]) -> Tuple[float, float]:
    x = np.asarray(sizes, dtype=float)
    y = np.asarray(lengths, dtype=float)
    if len(x) < 3:
        raise ValueError(f"Datos insuficientes: se requieren al menos 3 formatos (recibidos {len(x)})")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("Los tamaños y longitudes deben ser positivos")
    slope, intercept = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope), float(intercept)


@dataclass
class ScalingReport:
    map_id: str
    table: pd.DataFrame
    slope: float
    intercept: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "map": self.map_id,
            "slope": self.slope,
            "intercept": self.intercept,
            "rows": self.table.to_dict(orient="records"),
        }


def scaling_report(map_id: str, formats: Sequence[Union[str, FloatFormat]]) -> ScalingReport:
    """(N, ciclo más largo, transitorio más largo) por formato y pendiente log-log."""
    parsed = [parse_format(f) for f in formats]
    if len(parsed) < 3:
        raise ValueError(f"Datos insuficientes: se requieren al menos 3 formatos (recibidos {len(parsed)})")
    rows = []
    for fmt in sorted(parsed, key=lambda f: f.unit_interval_count):
        decomposition = decompose(build_graph(fmt, map_id))
        rows.append(
            {
                "format": fmt.name,
                "N": fmt.unit_interval_count,
                "longest_cycle": decomposition.longest_cycle,
                "longest_transient": decomposition.longest_transient,
                "cycle_plus_transient": decomposition.longest_cycle + decomposition.longest_transient,
                "n_components": len(decomposition.cycles),
            }
        )
    table = pd.DataFrame(rows)
    slope, intercept = fit_loglog(table["N"], table["cycle_plus_transient"])
    return ScalingReport(map_id, table, slope, intercept)


def _gauss_cdf(x: np.ndarray) -> np.ndarray:
    return np.log1p(x) / math.log(2.0)


def _lebesgue_cdf(x: np.ndarray) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _arcsine_cdf(x: np.ndarray) -> np.ndarray:
    return 2.0 / math.pi * np.arcsin(np.sqrt(x))


MEASURES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "gauss": _gauss_cdf,
    "lebesgue": _lebesgue_cdf,
    "arcsine": _arcsine_cdf,
}


def empirical_masses(decomposition: OrbitDecomposition, graph: FunctionalGraph) -> np.ndarray:
    """Frecuencia de visita a largo plazo: cada ciclo recibe la masa de su cuenca."""
    n = graph.N
    masses = np.zeros(n)
    sizes = decomposition.component_sizes
    for cid, cycle in enumerate(decomposition.cycles):
        share = sizes[cid] / (n * len(cycle))
        for node in cycle:
            masses[node - 1] += share
    return masses


def ks_distance(grid: np.ndarray, masses: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """max |F_emp − F| sobre la malla, con F_emp(x) = masa de los nodos ≤ x."""
    order = np.argsort(grid, kind="stable")
    x = grid[order]
    empirical = np.cumsum(masses[order])
    # valores repetidos comparten la CDF inclusiva
    last = np.searchsorted(x, x, side="right") - 1
    empirical = empirical[last]
    return float(np.clip(np.max(np.abs(empirical - cdf(x))), 0.0, 1.0))


def long_orbit_samples(
    map_id: str,
    n_iter: int = Config.LONG_ORBIT_ITER,
    burn_in: int = Config.LONG_ORBIT_BURN_IN,
    seed: int = Config.SEED,
) -> np.ndarray:
    """Órbita larga en binary64; se reinicia con un valor aleatorio si cae en 0."""
    step = {
        "gauss": lambda x: 1.0 / x - math.floor(1.0 / x),
        "logistic": lambda x: 4.0 * x * (1.0 - x),
        "bernoulli": lambda x: 2.0 * x - math.floor(2.0 * x),
        "identity": lambda x: x,
    }
    if map_id not in step:
        raise ValueError(f"Mapa desconocido: {map_id!r}")
    f = step[map_id]
    rng = np.random.default_rng(seed)
    x = float(rng.uniform(0.01, 0.99))
    out = np.empty(n_iter)
    for i in range(burn_in + n_iter):
        x = f(x)
        if x <= 0.0 or x >= 1.0 or x != x:
            x = float(rng.uniform(0.01, 0.99))
        if i >= burn_in:
            out[i - burn_in] = x
    return out


def long_orbit_cdf(map_id: str, grid: np.ndarray, n_iter: int = Config.LONG_ORBIT_ITER, burn_in: int = Config.LONG_ORBIT_BURN_IN) -> np.ndarray:
    samples = np.sort(long_orbit_samples(map_id, n_iter, burn_in))
    return np.searchsorted(samples, grid, side="right") / len(samples)


@dataclass
class MeasureReport:
    measure_id: str
    ks_distance: float
    nan_mass: float
    ks_long_orbit: Optional[float] = None
    ks_empirical_vs_long_orbit: Optional[float] = None

    def to_dict(self) -> Dict[str, object]:
        return {
            "measure": self.measure_id,
            "ks_distance": self.ks_distance,
            "nan_mass": self.nan_mass,
            "ks_long_orbit_vs_measure": self.ks_long_orbit,
            "ks_empirical_vs_long_orbit": self.ks_empirical_vs_long_orbit,
        }


def measure_compare(
    decomposition: OrbitDecomposition,
    graph: FunctionalGraph,
    measure_id: str,
    long_orbit_iter: int = 0,
) -> MeasureReport:
    """Distancia de Kolmogorov–Smirnov entre la medida empírica y la de referencia."""
    if measure_id not in MEASURES:
        raise ValueError(f"Medida desconocida: {measure_id!r}. Opciones: {', '.join(MEASURES)}")
    masses = empirical_masses(decomposition, graph)
    finite = np.isfinite(graph.values)
    nan_mass = float(masses[~finite].sum())
    grid = graph.values[finite]
    weights = masses[finite]
    if weights.sum() > 0:
        weights = weights / weights.sum()
    cdf = MEASURES[measure_id]
    report = MeasureReport(measure_id, ks_distance(grid, weights, cdf), nan_mass)
    if long_orbit_iter > 0:
        x = np.sort(grid)
        reference = long_orbit_cdf(graph.map_id, x, long_orbit_iter)
        report.ks_long_orbit = float(np.max(np.abs(reference - cdf(x))))
        report.ks_empirical_vs_long_orbit = ks_distance(grid, weights, lambda v: long_orbit_cdf_lookup(x, reference, v))
    return report


def long_orbit_cdf_lookup(grid: np.ndarray, cdf_values: np.ndarray, x: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(grid, x, side="right") - 1
    return np.where(idx >= 0, cdf_values[np.clip(idx, 0, len(grid) - 1)], 0.0)


@dataclass
class ShadowResult:
    format: FloatFormat
    pseudo_orbit: List[int]
    values: List[float]
    branches: List[int]
    shadow: List[Fraction]
    distances: np.ndarray
    local_residuals: np.ndarray

    @property
    def max_distance(self) -> float:
        return float(self.distances.max())

    @property
    def max_distance_units(self) -> float:
        return self.max_distance / unit_roundoff(self.format)

    def recurrence_residuals(self) -> np.ndarray:
        """|1/z_n − (k_n + z_{n+1})| relativo, evaluado tras redondear a binary64."""
        out = []
        for n, k in enumerate(self.branches):
            target = k + self.shadow[n + 1]
            out.append(abs(float(1 / self.shadow[n]) - float(target)) / float(target))
        return np.array(out)

    def to_dict(self) -> Dict[str, object]:
        return {
            "format": self.format.name,
            "start_index": self.pseudo_orbit[0],
            "length": len(self.pseudo_orbit),
            "max_distance": self.max_distance,
            "max_distance_units": self.max_distance_units,
        }


def gauss_pseudo_orbit(graph: FunctionalGraph, start_index: int, max_len: int) -> List[int]:
    """Índices desde start_index, cortando antes de nodos 0 o que producen NaN."""
    if graph.map_id != "gauss":
        raise ValueError(f"La construcción de sombras es sólo para el mapa de Gauss (recibido {graph.map_id})")
    if not 1 <= start_index <= graph.N:
        raise ValueError(f"start_index fuera de [1, {graph.N}]")
    orbit: List[int] = []
    idx = start_index
    while len(orbit) < max_len:
        value = graph.values[idx - 1]
        if not math.isfinite(value) or value == 0 or graph.nan_mask[idx - 1]:
            break
        orbit.append(idx)
        idx = int(graph.successor[idx - 1])
    return orbit


def shadow_refine_gauss(graph: FunctionalGraph, start_index: int, max_len: int = Config.SHADOW_MAX_LEN) -> ShadowResult:
    """
    Órbita exacta de G(x) = frac(1/x) cercana a la pseudo-órbita.

    Fija z_last = x_last y retrocede con z_n = 1/(k_n + z_{n+1}), donde k_n es
    la rama que tomó la pseudo-órbita. Aritmética racional exacta.
    """
    orbit = gauss_pseudo_orbit(graph, start_index, max_len)
    if len(orbit) < 2:
        raise ShadowingError(f"Pseudo-órbita desde {start_index} con longitud {len(orbit)} < 2")
    fmt = graph.format
    values = [float(graph.values[i - 1]) for i in orbit]
    inverses = round_array(1.0 / np.array(values[:-1]), fmt)
    branches = [int(math.floor(v)) for v in inverses]
    if any(k < 1 for k in branches):
        raise ShadowingError(f"Rama k < 1 en la pseudo-órbita desde {start_index}")
    exact = [Fraction(v) for v in values]
    shadow: List[Fraction] = [exact[-1]]
    for n in range(len(branches) - 1, -1, -1):
        shadow.append(1 / (branches[n] + shadow[-1]))
    shadow.reverse()
    distances = np.array([float(abs(z - x)) for z, x in zip(shadow, exact)])
    local = np.array([float(abs(exact[n] - 1 / (branches[n] + exact[n + 1]))) for n in range(len(branches))])
    return ShadowResult(fmt, orbit, values, branches, shadow, distances, local)


def shadow_sweep(
    graph: FunctionalGraph,
    starts: Iterable[int],
    max_len: int = Config.SHADOW_MAX_LEN,
) -> Tuple[pd.DataFrame, float]:
    """Construye sombras desde varios inicios; devuelve tabla y peor cociente d/u."""
    rows = []
    for start in starts:
        try:
            result = shadow_refine_gauss(graph, int(start), max_len)
        except ShadowingError as exc:
            rows.append({"start_index": int(start), "length": 0, "max_distance": np.nan, "max_distance_units": np.nan, "note": str(exc)})
            continue
        rows.append({**result.to_dict(), "note": ""})
    table = pd.DataFrame(rows, columns=["start_index", "length", "max_distance", "max_distance_units", "note"])
    worst = float(table["max_distance_units"].max()) if table["max_distance_units"].notna().any() else 0.0
    return table, worst


def export_edges(graph: FunctionalGraph, destination: str) -> str:
    """CSV de una columna ``Column1`` con el sucesor 1-based de cada nodo."""
    folder = os.path.dirname(os.path.abspath(destination))
    os.makedirs(folder, exist_ok=True)
    pd.DataFrame({"Column1": graph.successor}).to_csv(destination, index=False, lineterminator="\n")
    return destination


def export_dot(
    graph: FunctionalGraph,
    decomposition: OrbitDecomposition,
    destination: str,
    max_nodes: int = Config.DOT_MAX_NODES,
) -> str:
    """Grafo en formato DOT; los nodos de ciclo van resaltados."""
    if graph.N > max_nodes:
        raise ValueError(f"Exportación DOT limitada a {max_nodes} nodos (grafo con {graph.N})")
    on_cycle = {node for cycle in decomposition.cycles for node in cycle}
    lines = [f'digraph "{graph.map_id}_{graph.format.name}" {{', "  node [shape=circle, fontsize=9];"]
    for i in range(1, graph.N + 1):
        label = "NaN" if not math.isfinite(graph.values[i - 1]) else f"{graph.values[i - 1]:.6g}"
        style = ", style=filled, fillcolor=lightblue" if i in on_cycle else ""
        lines.append(f'  n{i} [label="{label}"{style}];')
    for i in range(1, graph.N + 1):
        lines.append(f"  n{i} -> n{int(graph.successor[i - 1])};")
    lines.append("}")
    folder = os.path.dirname(os.path.abspath(destination))
    os.makedirs(folder, exist_ok=True)
    with open(destination, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
    return destination


__all__ = [
    "NAN_POLICIES",
    "ShadowingError",
    "FunctionalGraph",
    "build_graph",
    "OrbitDecomposition",
    "decompose",
    "check_invariants",
    "gauss_boundaries",
    "fit_loglog",
    "ScalingReport",
    "scaling_report",
    "MEASURES",
    "empirical_masses",
    "ks_distance",
    "long_orbit_samples",
    "long_orbit_cdf",
    "MeasureReport",
    "measure_compare",
    "ShadowResult",
    "gauss_pseudo_orbit",
    "shadow_refine_gauss",
    "shadow_sweep",
    "export_edges",
    "export_dot",
]
