"""
Suite de reproducción: corre cada experimento de referencia y escribe
``report.json`` con el valor publicado, el valor medido y el estado
(pass / fail / informational) de cada criterio, más CSV y SVG por experimento.
"""
from __future__ import annotations

import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src import plots
from src.analysis import backward_error, chaos_metrics
from src.config import Config, parse_number
from src.discrete import lowprec, orbit_graph
from src.model import integrators, systems

PASS = "pass"
FAIL = "fail"
INFO = "informational"

RESIDUAL_REFERENCE = {1e-8: 1.57e-4, 1e-9: 2.36e-5, 1e-10: 3.67e-6}
E3M4_REFERENCE_CYCLES = [1, 2, 2, 3]
BOUNDARIES_REFERENCE = {"last_nonzero_image": 10224, "last_non_nan": 15104, "first_nan": 15105}
COUNT_FORMATS = ("e2m3", "e3m4", "e4m3", "e5m2", "e4m5", "e5m10")


@dataclass
class CriterionResult:
    id: str
    anchor: str
    status: str
    reference: object = None
    measured: object = None
    details: Dict[str, object] = field(default_factory=dict)


def limpiar_json(obj):
    """Convierte tipos numpy a nativos y NaN/inf a None."""
    if isinstance(obj, dict):
        return {str(k): limpiar_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [limpiar_json(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return limpiar_json(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _csv(frame: pd.DataFrame, output_dir: str, name: str) -> str:
    path = os.path.join(output_dir, name)
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def _h_label(text: str) -> str:
    return text.replace("/", "-")


class _Cache:
    """Resultados compartidos entre criterios (corridas de Lorenz y leapfrog)."""

    def __init__(self) -> None:
        self.lorenz: Dict[float, integrators.DenseSolution] = {}
        self.drift: Dict[str, backward_error.EnergyDriftReport] = {}

    def lorenz_solution(self, tol: float) -> integrators.DenseSolution:
        if tol not in self.lorenz:
            self.lorenz[tol] = integrators.integrate_adaptive(
                systems.LorenzSystem(),
                Config.LORENZ_Y0,
                0.0,
                Config.LORENZ_T_END,
                integrators.SolverConfig(rtol=tol, atol=tol),
            )
        return self.lorenz[tol]

    def drift_report(self, h_text: str, output_dir: str) -> backward_error.EnergyDriftReport:
        if h_text not in self.drift:
            h = parse_number(h_text)
            run = integrators.leapfrog_dkd_tolerant(Config.HH_STATE0, h, Config.HH_STEPS)
            self.drift[h_text] = backward_error.energy_drift(run)
            plots.phase_portrait(
                run.states[:, 2],
                run.states[:, 3],
                os.path.join(output_dir, f"henon_heiles_h_{_h_label(h_text)}.svg"),
                title=f"Hénon–Heiles, h = {h_text}",
            )
        return self.drift[h_text]


def criterion_residual(cache: _Cache, output_dir: str) -> CriterionResult:
    system = systems.LorenzSystem()
    rows = []
    for tol in Config.RESIDUAL_TOLERANCES:
        solution = cache.lorenz_solution(tol)
        value, t_at = backward_error.max_residual(solution, system)
        relative, _ = backward_error.max_residual(solution, system, relative=True)
        rows.append(
            {
                "tolerance": tol,
                "max_residual": value,
                "t_at_max": t_at,
                "max_relative_residual": relative,
                "reference_max_residual": RESIDUAL_REFERENCE.get(tol),
                "n_steps": solution.skeleton.n_steps,
            }
        )
    table = pd.DataFrame(rows)
    _csv(table, output_dir, "residual_max.csv")
    finest = cache.lorenz_solution(Config.RESIDUAL_TOLERANCES[0])
    series = backward_error.residual_on_steps(finest, system, Config.SAMPLES_PER_STEP)
    _csv(series.to_frame(relative=True), output_dir, "residual_lorenz.csv")
    plots.residual_scatter(
        series.times, series.norms, os.path.join(output_dir, "residual_lorenz.svg"), title="Residuo de Lorenz (rtol 1e-8)"
    )
    values = table["max_residual"].to_numpy()
    monotone = bool(np.all(np.diff(values) < 0))
    within = all(
        1e-2 <= row["max_residual"] / row["reference_max_residual"] <= 1e2 for row in rows if row["reference_max_residual"]
    )
    return CriterionResult(
        "AC1",
        "residuo máximo de Lorenz contra la tolerancia",
        PASS if monotone and within else FAIL,
        [RESIDUAL_REFERENCE[t] for t in Config.RESIDUAL_TOLERANCES],
        values.tolist(),
        {"monotone": monotone, "within_two_orders": within},
    )


def criterion_lyapunov(cache: _Cache, output_dir: str) -> CriterionResult:
    logs = chaos_metrics.lyapunov_history(systems.LorenzSystem(), Config.LORENZ_Y0)
    estimate = float(np.mean(logs) / Config.LYAPUNOV_RENORM)
    _csv(pd.DataFrame({"interval": np.arange(1, len(logs) + 1), "log_growth": logs}), output_dir, "lyapunov.csv")
    return CriterionResult(
        "AC2",
        "mayor exponente de Lyapunov de Lorenz",
        PASS if 0.85 <= estimate <= 0.96 else FAIL,
        Config.LYAPUNOV_REFERENCE,
        estimate,
        {"intervals": len(logs), "renorm_interval": Config.LYAPUNOV_RENORM},
    )


def criterion_separation(cache: _Cache, output_dir: str) -> CriterionResult:
    fit = chaos_metrics.separation_scaling(systems.LorenzSystem(), Config.LORENZ_Y0)
    _csv(pd.DataFrame({"epsilon": fit.epsilons, "separation_time": fit.times}), output_dir, "separation.csv")
    return CriterionResult(
        "AC3",
        "tiempo de separación contra ln(1/ε)",
        PASS if 0.7 <= fit.slope <= 1.6 else FAIL,
        1.0 / Config.LYAPUNOV_REFERENCE,
        fit.slope,
        fit.to_dict(),
    )


def criterion_drift_81(cache: _Cache, output_dir: str) -> CriterionResult:
    report = cache.drift_report("81/64", output_dir)
    d = report.drifts
    ok = (
        0.0045 <= d[0] <= 0.018
        and 0.0015 <= d[2] <= 0.006
        and d[4] <= 0.002
        and d[4] < d[2] < d[0]
    )
    return CriterionResult(
        "AC4",
        "deriva de energía del leapfrog con h = 81/64",
        PASS if ok and not report.diverged else FAIL,
        {"order0": 0.009, "order2": 0.003, "order4": 0.001},
        {f"order{k}": v for k, v in sorted(d.items())},
        report.to_dict(),
    )


def criterion_drift_1175(cache: _Cache, output_dir: str) -> CriterionResult:
    report = cache.drift_report("1.175", output_dir)
    d = report.drifts
    ok = d[0] <= 0.009 and d[2] < d[0] and d[4] < d[0]
    return CriterionResult(
        "AC5",
        "deriva de energía del leapfrog con h = 1.175",
        PASS if ok and not report.diverged else FAIL,
        {"order0": 0.006},
        {f"order{k}": v for k, v in sorted(d.items())},
        report.to_dict(),
    )


def criterion_spurious(cache: _Cache, output_dir: str) -> CriterionResult:
    flags = {h: cache.drift_report(h, output_dir).spurious for h in Config.HH_H_VALUES}
    rows = [{"h_label": h, **cache.drift_report(h, output_dir).to_dict()} for h in Config.HH_H_VALUES]
    _csv(pd.DataFrame(rows), output_dir, "energy_sweep.csv")
    ok = flags["79/64"] and not flags["81/64"] and not flags["1.175"]
    return CriterionResult(
        "AC6",
        "caos espurio en el barrido de h",
        PASS if ok else FAIL,
        {"79/64": True, "81/64": False, "1.175": False},
        flags,
    )


def criterion_orders(cache: _Cache, output_dir: str) -> CriterionResult:
    study = backward_error.residual_order_study(
        systems.LorenzSystem(), Config.LORENZ_Y0, coefficients=(Config.EULER_COEFFICIENT, 1.0)
    )
    _csv(study.to_frame(), output_dir, "euler_order_study.csv")
    scaling = backward_error.drift_scaling()
    _csv(
        pd.DataFrame({"h": scaling.h_values, "drift_order0": scaling.drift_order0, "drift_order2": scaling.drift_order2}),
        output_dir,
        "drift_scaling.csv",
    )
    original_ok = abs(study.slopes["original"] - 1.0) <= 0.2
    modified_ok = any(abs(study.slopes[f"modified_{c:g}"] - 2.0) <= 0.3 for c in study.modified)
    drift_ok = abs(scaling.slope_order0 - 2.0) <= 0.4 and abs(scaling.slope_order2 - 4.0) <= 0.6
    return CriterionResult(
        "AC7",
        "órdenes del residuo de Euler y de la deriva del leapfrog",
        PASS if original_ok and modified_ok and drift_ok else FAIL,
        {"euler_original": 1, "euler_modified": 2, "drift_order0": 2, "drift_order2": 4},
        {**study.slopes, "drift_order0": scaling.slope_order0, "drift_order2": scaling.slope_order2},
        {"best_coefficient": study.best_coefficient()},
    )


def criterion_counts(cache: _Cache, output_dir: str) -> CriterionResult:
    rows = []
    for name in COUNT_FORMATS:
        fmt = lowprec.parse_format(name)
        rows.append(
            {
                "format": name,
                "closed_form": fmt.unit_interval_count,
                "exhaustive": lowprec.count_unit_interval_exhaustive(fmt),
                "enumerated": len(lowprec.unit_interval_values(fmt)),
            }
        )
    table = pd.DataFrame(rows)
    _csv(table, output_dir, "minifloat_counts.csv")
    e3m4 = len(lowprec.enumerate_unit_interval(Config.FORMAT_8BIT))
    half = len(lowprec.enumerate_unit_interval(Config.FORMAT_16BIT))
    consistent = bool((table["closed_form"] == table["exhaustive"]).all() and (table["closed_form"] == table["enumerated"]).all())
    return CriterionResult(
        "AC8",
        "cantidad de valores representables en [0, 1]",
        PASS if e3m4 == 49 and half == 15361 and consistent else FAIL,
        {"e3m4": 49, "binary16": 15361},
        {"e3m4": e3m4, "binary16": half},
        {"closed_form_matches_exhaustive": consistent},
    )


def criterion_boundaries(cache: _Cache, output_dir: str) -> CriterionResult:
    measured = orbit_graph.gauss_boundaries(orbit_graph.build_graph(Config.FORMAT_16BIT, "gauss"))
    return CriterionResult(
        "AC9",
        "fronteras del mapa de Gauss en binary16",
        PASS if measured == BOUNDARIES_REFERENCE else FAIL,
        BOUNDARIES_REFERENCE,
        measured,
    )


def criterion_graph(cache: _Cache, output_dir: str) -> CriterionResult:
    details = {}
    ok = True
    for name in ("e3m4", "e4m3", "e5m2", Config.FORMAT_16BIT):
        graph = orbit_graph.build_graph(name, "gauss")
        decomposition = orbit_graph.decompose(graph)
        checks = orbit_graph.check_invariants(graph, decomposition)
        ok = ok and all(checks.values())
        details[name] = {**checks, "cycle_lengths": decomposition.cycle_lengths}
        if name == Config.FORMAT_8BIT:
            orbit_graph.export_edges(graph, os.path.join(output_dir, "edges_e3m4.csv"))
            with open(os.path.join(output_dir, "orbits_e3m4.json"), "w", encoding="utf-8") as fh:
                json.dump(limpiar_json(decomposition.to_dict()), fh, indent=2, ensure_ascii=False)
    return CriterionResult(
        "AC10",
        "invariantes del grafo funcional de Gauss",
        PASS if ok else FAIL,
        None,
        {name: all(v for k, v in d.items() if k != "cycle_lengths") for name, d in details.items()},
        details,
    )


def _shadow_checks(graph: orbit_graph.FunctionalGraph, starts, max_len: int) -> Tuple[pd.DataFrame, bool, float]:
    rows = []
    contraction = True
    for start in starts:
        try:
            result = orbit_graph.shadow_refine_gauss(graph, int(start), max_len)
        except orbit_graph.ShadowingError as exc:
            short = len(orbit_graph.gauss_pseudo_orbit(graph, int(start), max_len)) < 2
            contraction = contraction and short
            rows.append({"start_index": int(start), "length": 0, "max_distance": np.nan, "max_distance_units": np.nan, "note": str(exc)})
            continue
        d = result.distances
        bound = result.local_residuals + d[1:]
        # |z_n − x_n| ≤ residuo local + |z_{n+1} − x_{n+1}| porque |d/dx 1/(k+x)| ≤ 1
        contraction = contraction and bool(np.all(d[:-1] <= bound * (1 + 1e-12) + 1e-300))
        contraction = contraction and bool(np.all(result.recurrence_residuals() == 0))
        rows.append({**result.to_dict(), "note": ""})
    table = pd.DataFrame(rows, columns=["start_index", "length", "max_distance", "max_distance_units", "note"])
    worst = float(table["max_distance_units"].max()) if table["max_distance_units"].notna().any() else 0.0
    return table, contraction, worst


def criterion_shadowing(cache: _Cache, output_dir: str) -> CriterionResult:
    small = orbit_graph.build_graph(Config.FORMAT_8BIT, "gauss")
    table8, ok8, worst8 = _shadow_checks(small, range(1, small.N + 1), Config.SHADOW_MAX_LEN)
    half = orbit_graph.build_graph(Config.FORMAT_16BIT, "gauss")
    rng = np.random.default_rng(Config.SEED)
    starts = rng.integers(1, half.N + 1, size=Config.SHADOW_SAMPLES)
    table16, ok16, worst16 = _shadow_checks(half, starts, Config.SHADOW_SAMPLE_LEN)
    _csv(table8, output_dir, "shadow_e3m4.csv")
    _csv(table16, output_dir, "shadow_binary16.csv")
    return CriterionResult(
        "AC11",
        "órbitas sombra del mapa de Gauss",
        PASS if ok8 and ok16 else FAIL,
        {"max_distance_units": Config.SHADOW_BOUND_UNITS},
        {"e3m4": worst8, "binary16": worst16},
        {
            "within_bound": worst8 <= Config.SHADOW_BOUND_UNITS and worst16 <= Config.SHADOW_BOUND_UNITS,
            "e3m4_successes": int((table8["length"] > 0).sum()),
            "binary16_successes": int((table16["length"] > 0).sum()),
        },
    )


def criterion_statistics(cache: _Cache, output_dir: str) -> CriterionResult:
    loose = cache.lorenz_solution(1e-8)
    tight = cache.lorenz_solution(1e-10)
    stats_loose = chaos_metrics.trajectory_statistics(loose)
    stats_tight = chaos_metrics.trajectory_statistics(tight)
    mean_loose = float(stats_loose.means[2])
    mean_tight = float(stats_tight.means[2])
    relative = abs(mean_loose - mean_tight) / abs(mean_tight)
    endpoint = float(np.max(np.abs(loose.skeleton.states[-1] - tight.skeleton.states[-1])))
    _csv(
        pd.DataFrame(
            {
                "rtol": [1e-8, 1e-10],
                "mean_x": [stats_loose.means[0], stats_tight.means[0]],
                "mean_y": [stats_loose.means[1], stats_tight.means[1]],
                "mean_z": [mean_loose, mean_tight],
                "std_z": [stats_loose.stds[2], stats_tight.stds[2]],
            }
        ),
        output_dir,
        "statistics.csv",
    )
    return CriterionResult(
        "AC12",
        "estadísticas robustas con trayectorias distintas",
        PASS if relative <= 0.05 and endpoint >= 1.0 else FAIL,
        None,
        {"mean_z_relative_difference": relative, "endpoint_max_difference": endpoint},
    )


def criterion_secular(cache: _Cache, output_dir: str) -> CriterionResult:
    eps = Config.SECULAR_EPSILON
    times, peaks = chaos_metrics.envelope_maxima(eps, 1.0, Config.SECULAR_T_END)
    resonant = float(np.polyfit(times, peaks, 1)[0]) if len(times) >= 2 else 0.0
    off = chaos_metrics.secular_envelope(eps, 2.0, Config.SECULAR_T_END)
    plots.envelope_plot(times, peaks, os.path.join(output_dir, "secular_envelope.svg"), slope=resonant)
    ok = abs(resonant - eps / 2) <= 0.1 * eps / 2 and abs(off) <= 1e-4
    return CriterionResult(
        "AC13",
        "crecimiento secular del oscilador forzado",
        PASS if ok else FAIL,
        {"resonant_slope": eps / 2, "non_resonant_slope": 0.0},
        {"resonant_slope": resonant, "non_resonant_slope": off},
    )


def informational(cache: _Cache, results: List[CriterionResult]) -> List[CriterionResult]:
    """Comparaciones sin umbral: energía inicial, coeficiente de Euler y ciclos e3m4."""
    extra = [
        CriterionResult(
            "HH_ENERGY",
            "energía inicial de Hénon–Heiles con todo en 0.12",
            INFO,
            Config.HH_ENERGY_REFERENCE,
            float(systems.hamiltonian_h0(Config.HH_STATE0)),
        )
    ]
    by_id = {r.id: r for r in results}
    ac7 = by_id.get("AC7")
    if ac7 is not None and ac7.details.get("best_coefficient") is not None:
        extra.append(
            CriterionResult(
                "EULER_COEFFICIENT",
                "coeficiente del término h·J·f en el campo modificado de Euler",
                INFO,
                Config.EULER_COEFFICIENT,
                ac7.details["best_coefficient"],
            )
        )
    ac10 = by_id.get("AC10")
    if ac10 is not None and Config.FORMAT_8BIT in ac10.details:
        cycles = ac10.details[Config.FORMAT_8BIT]["cycle_lengths"]
        extra.append(
            CriterionResult(
                "E3M4_CYCLES",
                "multiconjunto de longitudes de ciclo de Gauss en e3m4",
                INFO,
                E3M4_REFERENCE_CYCLES,
                cycles,
                {"match": cycles == E3M4_REFERENCE_CYCLES, "nan_policy": Config.NAN_POLICY},
            )
        )
    return extra


CRITERIA: List[Tuple[str, Callable[[_Cache, str], CriterionResult]]] = [
    ("AC1", criterion_residual),
    ("AC2", criterion_lyapunov),
    ("AC3", criterion_separation),
    ("AC4", criterion_drift_81),
    ("AC5", criterion_drift_1175),
    ("AC6", criterion_spurious),
    ("AC7", criterion_orders),
    ("AC8", criterion_counts),
    ("AC9", criterion_boundaries),
    ("AC10", criterion_graph),
    ("AC11", criterion_shadowing),
    ("AC12", criterion_statistics),
    ("AC13", criterion_secular),
]


def reproduce(output_dir: Optional[str] = None, only: Optional[List[str]] = None) -> Dict[str, object]:
    """Corre los criterios (todos o ``only``) y escribe ``report.json`` en ``output_dir``."""
    output_dir = output_dir or Config.DATA_REPRODUCE
    os.makedirs(output_dir, exist_ok=True)
    cache = _Cache()
    results: List[CriterionResult] = []
    runtimes: Dict[str, float] = {}
    for criterion_id, func in CRITERIA:
        if only and criterion_id not in only:
            continue
        start = time.perf_counter()
        try:
            result = func(cache, output_dir)
        except (ValueError, RuntimeError, OSError) as exc:
            result = CriterionResult(criterion_id, func.__doc__ or func.__name__, FAIL, details={"error": str(exc)})
        runtimes[criterion_id] = round(time.perf_counter() - start, 3)
        mark = "✓" if result.status == PASS else "❌"
        _log(f"{mark} {criterion_id}: {result.status} ({runtimes[criterion_id]:.1f} s)")
        results.append(result)
    results.extend(informational(cache, results))

    criteria = [limpiar_json(asdict(r)) for r in results]
    report = {
        "generated_at": datetime.now().isoformat(timespec="seconds"),
        "runtime_seconds": runtimes,
        "criteria": criteria,
    }
    path = os.path.join(output_dir, "report.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, ensure_ascii=False)
    _log(f"✓ Reporte guardado en: {path}")
    return report


__all__ = ["CriterionResult", "CRITERIA", "limpiar_json", "reproduce", "PASS", "FAIL", "INFO"]
