"""
CLI principal del laboratorio de análisis de error hacia atrás.

Cada subcomando escribe sus archivos (CSV, JSON, SVG, DOT) y deja en la
salida estándar un resumen JSON de una línea. Los mensajes de avance van a
la salida de error. Códigos de salida: 0 éxito, 1 error de uso, 2 falla
numérica (divergencia, separación no alcanzada).
"""
import argparse
import json
import os
import sys
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from src import plots
from src.analysis import backward_error, chaos_metrics
from src.config import Config, cargar_config, crear_directorios, parse_number
from src.discrete import lowprec, orbit_graph
from src.model import integrators, systems
from src.reproduce import limpiar_json, reproduce

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

DEFAULT_STATES = {
    "lorenz": Config.LORENZ_Y0,
    "henon-heiles": Config.HH_STATE0,
    "oscillator": (0.0, 0.0),
    "decay": (1.0,),
}


class ArgumentParser(argparse.ArgumentParser):
    """Errores de uso con código de salida 1."""

    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"❌ {self.prog}: {message}\n")


def _info(message: str) -> None:
    print(message, file=sys.stderr)


def _floats(text: str) -> List[float]:
    values = [parse_number(v) for v in str(text).split(",") if v.strip()]
    if not values:
        raise ValueError(f"Lista vacía: {text!r}")
    return values


def _ints(text: str) -> List[int]:
    try:
        return [int(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"Lista de enteros inválida: {text!r}") from None


def _output(path: Optional[str], default_name: str) -> str:
    path = path or os.path.join(Config.DATA_RESULTS, default_name)
    folder = os.path.dirname(os.path.abspath(path))
    os.makedirs(folder, exist_ok=True)
    return path


def _write_csv(frame: pd.DataFrame, path: str) -> str:
    frame.to_csv(path, index=False, float_format="%.17g", lineterminator="\n")
    return path


def _write_json(data: Dict[str, object], path: str) -> str:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(limpiar_json(data), fh, indent=2, ensure_ascii=False)
    return path


def _summary(command: str, **fields) -> None:
    print(json.dumps(limpiar_json({"command": command, **fields}), ensure_ascii=False))


def _build_system(args: argparse.Namespace) -> systems.DynamicalSystem:
    if args.system == "lorenz":
        return systems.make_system("lorenz", sigma=args.sigma, rho=args.rho, beta=args.beta)
    if args.system == "oscillator":
        return systems.make_system("oscillator", epsilon=args.forcing, omega=args.omega)
    return systems.make_system(args.system)


def _initial_state(args: argparse.Namespace, system: systems.DynamicalSystem) -> np.ndarray:
    values = _floats(args.y0) if args.y0 else DEFAULT_STATES[args.system]
    return system.check_state(values).astype(float).ravel()


def _solve(args: argparse.Namespace, system: systems.DynamicalSystem) -> integrators.DenseSolution:
    y0 = _initial_state(args, system)
    if args.method == "euler":
        if args.h is None:
            raise ValueError("--method euler requiere --h")
        return integrators.integrate_euler_fixed(system, y0, args.t0, args.t_end, parse_number(args.h), args.interpolant)
    config = integrators.SolverConfig(rtol=args.rtol, atol=args.atol)
    return integrators.integrate_adaptive(system, y0, args.t0, args.t_end, config, args.interpolant)


def cmd_simulate(args: argparse.Namespace) -> int:
    system = _build_system(args)
    solution = _solve(args, system)
    skeleton = solution.skeleton
    if args.samples > 0:
        ts = np.linspace(solution.t0, solution.t_end, args.samples)
        states = solution.eval_many(ts)
    else:
        ts, states = skeleton.times, skeleton.states
    data = {"t": ts}
    for i in range(states.shape[1]):
        data[f"y{i + 1}"] = states[:, i]
    path = _write_csv(pd.DataFrame(data), _output(args.out, f"simulate_{args.system}.csv"))
    _info(f"✓ Trayectoria guardada en: {path}")
    _summary(
        "simulate",
        system=system.name,
        n_steps=skeleton.n_steps,
        n_rejected=skeleton.n_rejected,
        rhs_evaluations=skeleton.rhs_evaluations,
        final_state=skeleton.states[-1],
        outputs=[path],
    )
    return EXIT_OK


def cmd_residual(args: argparse.Namespace) -> int:
    system = _build_system(args)
    solution = _solve(args, system)
    field_system = system
    if args.coefficient is not None:
        if args.method != "euler":
            raise ValueError("--coefficient sólo aplica a --method euler")
        field_system = backward_error.modified_euler_rhs(system, parse_number(args.h), args.coefficient)
    series = backward_error.residual_on_steps(solution, field_system, args.samples_per_step)
    path = _write_csv(series.to_frame(relative=args.relative), _output(args.out, "residual.csv"))
    outputs = [path]
    if args.plot_out:
        outputs.append(plots.residual_scatter(series.times, series.norms, _output(args.plot_out, "residual.svg")))
    _info(f"✓ Residuo guardado en: {path}")
    _summary("residual", system=system.name, n_steps=solution.skeleton.n_steps, **series.summary(), outputs=outputs)
    return EXIT_OK


def cmd_lyapunov(args: argparse.Namespace) -> int:
    system = _build_system(args)
    y0 = _initial_state(args, system)
    logs = chaos_metrics.lyapunov_history(
        system, y0, args.t_total, args.renorm, args.delta0, args.transient, args.rtol
    )
    estimate = float(np.mean(logs) / args.renorm)
    path = _write_csv(
        pd.DataFrame({"interval": np.arange(1, len(logs) + 1), "log_growth": logs}), _output(args.out, "lyapunov.csv")
    )
    _info(f"✓ λ ≈ {estimate:.4f} ({len(logs)} renormalizaciones)")
    _summary("lyapunov", system=system.name, lyapunov=estimate, intervals=len(logs), outputs=[path])
    return EXIT_OK


def cmd_separation(args: argparse.Namespace) -> int:
    system = _build_system(args)
    y0 = _initial_state(args, system)
    epsilons = _floats(args.epsilons)
    seeds = _ints(args.seeds)
    if len(seeds) != 2:
        raise ValueError(f"--seeds requiere dos semillas (recibido {args.seeds!r})")
    rows = []
    for eps in epsilons:
        spec1 = chaos_metrics.DisturbanceSpec(eps, args.kind, seeds[0], system.dimension)
        spec2 = chaos_metrics.DisturbanceSpec(eps, args.kind, seeds[1], system.dimension)
        result = chaos_metrics.separation_time(system, y0, spec1, spec2, args.threshold, args.t_max, args.rtol)
        rows.append({"epsilon": eps, "reached": result.reached, "separation_time": result.time, "max_separation": result.max_separation})
    table = pd.DataFrame(rows)
    path = _write_csv(table, _output(args.out, "separation.csv"))
    reached = table[table["reached"]]
    fields = {"rows": rows, "outputs": [path]}
    if len(epsilons) >= 3:
        try:
            slope, intercept = chaos_metrics.fit_log_scaling(reached["epsilon"], reached["separation_time"].astype(float))
        except ValueError as exc:
            _info(f"⚠️  Sin ajuste log: {exc}")
        else:
            fields.update(slope=slope, intercept=intercept)
            _info(f"✓ Pendiente T vs ln(1/ε): {slope:.4f}")
    _summary("separation", system=system.name, **fields)
    if len(reached) < len(table):
        _info(f"⚠️  Separación no alcanzada antes de t_max={args.t_max} para {len(table) - len(reached)} valor(es) de ε")
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_leapfrog(args: argparse.Namespace) -> int:
    h = parse_number(args.h)
    state0 = _floats(args.state0)
    if len(state0) != 4:
        raise ValueError(f"--state0 requiere 4 valores p1,p2,q1,q2 (recibido {args.state0!r})")
    orders = _ints(args.orders)
    run = integrators.leapfrog_dkd_tolerant(state0, h, args.steps)
    report = backward_error.energy_drift(run, orders, args.threshold)
    path = _write_csv(backward_error.energy_series(run, orders), _output(args.out, "leapfrog.csv"))
    outputs = [path]
    if args.plot_out:
        outputs.append(plots.phase_portrait(run.states[:, 2], run.states[:, 3], _output(args.plot_out, "leapfrog.svg")))
    _summary("leapfrog", **report.to_dict(), outputs=outputs)
    if report.diverged:
        _info(f"⚠️  Leapfrog divergió en el paso {report.diverged_at}; se guardó la corrida parcial")
        return EXIT_NUMERIC
    _info(f"✓ Energías por paso guardadas en: {path}")
    return EXIT_OK


def cmd_energy(args: argparse.Namespace) -> int:
    state0 = _floats(args.state0)
    rows = []
    for text in [v.strip() for v in args.h_values.split(",") if v.strip()]:
        run = integrators.leapfrog_dkd_tolerant(state0, parse_number(text), args.steps)
        report = backward_error.energy_drift(run, backward_error.ORDERS, args.threshold)
        rows.append({"h_label": text, **report.to_dict()})
        flag = "⚠️ " if report.spurious else "✓"
        _info(f"{flag} h = {text}: deriva H0 = {report.drifts[0]:.3e}, caos espurio = {report.spurious}")
    path = _write_csv(pd.DataFrame(rows), _output(args.out, "energy_sweep.csv"))
    _summary("energy", rows=rows, outputs=[path])
    return EXIT_OK


def cmd_orbit_graph(args: argparse.Namespace) -> int:
    graph = orbit_graph.build_graph(args.format, args.map, args.nan_policy)
    decomposition = orbit_graph.decompose(graph)
    checks = orbit_graph.check_invariants(graph, decomposition)
    report = {"format": graph.format.name, "map": graph.map_id, "nan_policy": graph.nan_policy, **decomposition.to_dict(), "invariants": checks}
    if graph.map_id == "gauss":
        report["boundaries"] = orbit_graph.gauss_boundaries(graph)
    outputs = [orbit_graph.export_edges(graph, _output(args.edges_out, f"edges_{graph.format.name}.csv"))]
    if args.measure:
        measure = orbit_graph.measure_compare(decomposition, graph, args.measure, args.long_orbit_iter)
        report["measure"] = measure.to_dict()
        if args.plot_out:
            finite = np.isfinite(graph.values)
            order = np.argsort(graph.values[finite])
            grid = graph.values[finite][order]
            masses = orbit_graph.empirical_masses(decomposition, graph)[finite][order]
            empirical = np.cumsum(masses) / max(masses.sum(), 1e-300)
            outputs.append(
                plots.cdf_plot(
                    grid,
                    [empirical, orbit_graph.MEASURES[args.measure](grid)],
                    ["empírica", args.measure],
                    _output(args.plot_out, "measure.svg"),
                )
            )
    if args.dot_out:
        outputs.append(orbit_graph.export_dot(graph, decomposition, _output(args.dot_out, "graph.dot")))
    outputs.append(_write_json(report, _output(args.report_out, f"orbits_{graph.format.name}.json")))
    _info(f"✓ {graph.N} nodos, {len(decomposition.cycles)} ciclos; aristas en {outputs[0]}")
    _summary(
        "orbit-graph",
        format=graph.format.name,
        map=graph.map_id,
        n_nodes=graph.N,
        cycle_lengths=decomposition.cycle_lengths,
        longest_transient=decomposition.longest_transient,
        outputs=outputs,
    )
    return EXIT_OK if all(checks.values()) else EXIT_NUMERIC


def cmd_shadow(args: argparse.Namespace) -> int:
    graph = orbit_graph.build_graph(args.format, "gauss", args.nan_policy)
    if args.samples > 0:
        rng = np.random.default_rng(args.seed)
        starts = rng.integers(1, graph.N + 1, size=args.samples)
    else:
        starts = range(1, graph.N + 1)
    table, worst = orbit_graph.shadow_sweep(graph, starts, args.max_len)
    path = _write_csv(table, _output(args.out, f"shadow_{graph.format.name}.csv"))
    within = worst <= Config.SHADOW_BOUND_UNITS
    _info(f"{'✓' if within else '⚠️ '} Peor distancia: {worst:.3f} unidades de redondeo")
    _summary(
        "shadow",
        format=graph.format.name,
        orbits=len(table),
        successes=int((table["length"] > 0).sum()),
        worst_distance_units=worst,
        unit_roundoff=lowprec.unit_roundoff(graph.format),
        outputs=[path],
    )
    return EXIT_OK


def cmd_scaling(args: argparse.Namespace) -> int:
    formats = [f.strip() for f in args.formats.split(",") if f.strip()]
    report = orbit_graph.scaling_report(args.map, formats)
    path = _write_csv(report.table, _output(args.out, f"scaling_{args.map}.csv"))
    _info(f"✓ Pendiente log-log (ciclo + transitorio vs N): {report.slope:.4f}")
    _summary("scaling", map=args.map, slope=report.slope, intercept=report.intercept, outputs=[path])
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    system = _build_system(args)
    solution = _solve(args, system)
    window = tuple(_floats(args.window))
    if len(window) != 2:
        raise ValueError(f"--window requiere dos valores (recibido {args.window!r})")
    report = chaos_metrics.trajectory_statistics(solution, window, args.bins, args.samples, args.component - 1)
    frame = pd.DataFrame(
        {
            "bin_left": report.bin_edges[:-1],
            "bin_right": report.bin_edges[1:],
            "count": report.counts,
            "frequency": report.frequencies,
        }
    )
    path = _write_csv(frame, _output(args.out, "stats.csv"))
    _info(f"✓ Histograma guardado en: {path}")
    _summary("stats", system=system.name, window=list(window), means=report.means, stds=report.stds, outputs=[path])
    return EXIT_OK


def cmd_secular(args: argparse.Namespace) -> int:
    times, peaks = chaos_metrics.envelope_maxima(args.epsilon, args.omega, args.t_end)
    slope = float(np.polyfit(times, peaks, 1)[0]) if len(times) >= 2 else 0.0
    path = _write_csv(pd.DataFrame({"t": times, "abs_y": peaks}), _output(args.out, "secular.csv"))
    outputs = [path]
    if args.plot_out:
        outputs.append(plots.envelope_plot(times, peaks, _output(args.plot_out, "secular.svg"), slope=slope))
    _info(f"✓ Pendiente de la envolvente: {slope:.6g}")
    _summary("secular", epsilon=args.epsilon, omega=args.omega, slope=slope, outputs=outputs)
    return EXIT_OK


def cmd_reproduce(args: argparse.Namespace) -> int:
    only = [c.strip() for c in args.only.split(",") if c.strip()] if args.only else None
    report = reproduce(args.output_dir, only)
    statuses = {c["id"]: c["status"] for c in report["criteria"]}
    failed = [cid for cid, status in statuses.items() if status == "fail"]
    _summary(
        "reproduce",
        output_dir=args.output_dir or Config.DATA_REPRODUCE,
        statuses=statuses,
        failed=failed,
    )
    return EXIT_OK if not failed else EXIT_NUMERIC


def _add_system_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--system", choices=systems.SYSTEM_NAMES, default="lorenz")
    parser.add_argument("--y0", type=str, default=None, help="Estado inicial separado por comas")
    parser.add_argument("--sigma", type=float, default=Config.LORENZ_SIGMA)
    parser.add_argument("--rho", type=float, default=Config.LORENZ_RHO)
    parser.add_argument("--beta", type=float, default=Config.LORENZ_BETA)
    parser.add_argument("--forcing", type=float, default=0.0, help="Amplitud ε del oscilador forzado")
    parser.add_argument("--omega", type=float, default=1.0)


def _add_solver_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--method", choices=["dp54", "euler"], default="dp54")
    parser.add_argument("--rtol", type=float, default=Config.RTOL)
    parser.add_argument("--atol", type=float, default=Config.ATOL)
    parser.add_argument("--t0", type=float, default=0.0)
    parser.add_argument("--t-end", type=float, default=Config.LORENZ_T_END)
    parser.add_argument("--h", type=str, default=None, help="Paso fijo para Euler (acepta fracciones, p. ej. 1/1024)")
    parser.add_argument("--interpolant", choices=integrators.INTERPOLANTS, default="cubic-hermite")


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        description="Laboratorio de análisis de error hacia atrás", formatter_class=argparse.RawTextHelpFormatter
    )
    parser.add_argument("--config", type=str, default=None, help="Archivo con líneas clave = valor")
    subparsers = parser.add_subparsers(dest="command")

    p = subparsers.add_parser("simulate", help="Integra un sistema y guarda la trayectoria")
    _add_system_args(p)
    _add_solver_args(p)
    p.add_argument("--samples", type=int, default=0, help="Muestras de la salida densa (0 = sólo nodos)")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_simulate)

    p = subparsers.add_parser("residual", help="Residuo r(t) = Ẏ − f(Y) de la solución densa")
    _add_system_args(p)
    _add_solver_args(p)
    p.add_argument("--samples-per-step", type=int, default=Config.SAMPLES_PER_STEP)
    p.add_argument("--relative", action="store_true", help="Agrega la columna relative_norm")
    p.add_argument("--coefficient", type=float, default=None, help="Mide contra el campo modificado de Euler f + c·h·J·f")
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--plot-out", type=str, default=None)
    p.set_defaults(func=cmd_residual)

    p = subparsers.add_parser("lyapunov", help="Mayor exponente de Lyapunov")
    _add_system_args(p)
    p.add_argument("--t-total", type=float, default=Config.LYAPUNOV_T_TOTAL)
    p.add_argument("--renorm", type=float, default=Config.LYAPUNOV_RENORM)
    p.add_argument("--delta0", type=float, default=Config.LYAPUNOV_DELTA0)
    p.add_argument("--transient", type=float, default=Config.LYAPUNOV_TRANSIENT)
    p.add_argument("--rtol", type=float, default=Config.LYAPUNOV_RTOL)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_lyapunov)

    p = subparsers.add_parser("separation", help="Tiempo de separación bajo perturbaciones persistentes")
    _add_system_args(p)
    p.add_argument("--epsilons", type=str, default="1e-8", help="Uno o más ε separados por comas")
    p.add_argument("--seeds", type=str, default=",".join(str(s) for s in Config.SEPARATION_SEEDS))
    p.add_argument("--kind", choices=chaos_metrics.DISTURBANCE_KINDS, default="multi-sine")
    p.add_argument("--threshold", type=float, default=Config.SEPARATION_THRESHOLD)
    p.add_argument("--t-max", type=float, default=Config.SEPARATION_T_MAX)
    p.add_argument("--rtol", type=float, default=Config.SEPARATION_RTOL)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_separation)

    hh_state = ",".join(str(v) for v in Config.HH_STATE0)
    p = subparsers.add_parser("leapfrog", help="Leapfrog en Hénon–Heiles y energías modificadas")
    p.add_argument("--h", type=str, default="81/64")
    p.add_argument("--steps", type=int, default=Config.HH_STEPS)
    p.add_argument("--orders", type=str, default="0,2,4")
    p.add_argument("--state0", type=str, default=hh_state, help="p1,p2,q1,q2")
    p.add_argument("--threshold", type=float, default=Config.SPURIOUS_THRESHOLD)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--plot-out", type=str, default=None)
    p.set_defaults(func=cmd_leapfrog)

    p = subparsers.add_parser("energy", help="Barrido de h con deriva y caos espurio")
    p.add_argument("--h-values", type=str, default=",".join(Config.HH_H_VALUES))
    p.add_argument("--steps", type=int, default=Config.HH_STEPS)
    p.add_argument("--state0", type=str, default=hh_state)
    p.add_argument("--threshold", type=float, default=Config.SPURIOUS_THRESHOLD)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_energy)

    p = subparsers.add_parser("orbit-graph", help="Grafo funcional de un mapa en minifloat")
    p.add_argument("--format", type=str, default=Config.FORMAT_8BIT)
    p.add_argument("--map", choices=lowprec.MAP_IDS, default="gauss")
    p.add_argument("--nan-policy", choices=orbit_graph.NAN_POLICIES, default=Config.NAN_POLICY)
    p.add_argument("--measure", choices=sorted(orbit_graph.MEASURES), default=None)
    p.add_argument("--long-orbit-iter", type=int, default=0)
    p.add_argument("--edges-out", type=str, default=None)
    p.add_argument("--report-out", type=str, default=None)
    p.add_argument("--dot-out", type=str, default=None)
    p.add_argument("--plot-out", type=str, default=None)
    p.set_defaults(func=cmd_orbit_graph)

    p = subparsers.add_parser("shadow", help="Órbitas sombra del mapa de Gauss")
    p.add_argument("--format", type=str, default=Config.FORMAT_8BIT)
    p.add_argument("--nan-policy", choices=orbit_graph.NAN_POLICIES, default=Config.NAN_POLICY)
    p.add_argument("--samples", type=int, default=0, help="Inicios aleatorios (0 = todos los nodos)")
    p.add_argument("--seed", type=int, default=Config.SEED)
    p.add_argument("--max-len", type=int, default=Config.SHADOW_MAX_LEN)
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_shadow)

    p = subparsers.add_parser("scaling", help="Ciclo + transitorio más largos contra N")
    p.add_argument("--map", choices=lowprec.MAP_IDS, default="gauss")
    p.add_argument("--formats", type=str, default=",".join(Config.SCALING_FORMATS))
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_scaling)

    p = subparsers.add_parser("stats", help="Medias e histograma sobre una ventana de tiempo")
    _add_system_args(p)
    _add_solver_args(p)
    p.add_argument("--window", type=str, default=",".join(str(v) for v in Config.STATS_WINDOW))
    p.add_argument("--bins", type=int, default=Config.STATS_BINS)
    p.add_argument("--samples", type=int, default=Config.STATS_SAMPLES)
    p.add_argument("--component", type=int, default=3, help="Componente del histograma (1-based)")
    p.add_argument("--out", type=str, default=None)
    p.set_defaults(func=cmd_stats)

    p = subparsers.add_parser("secular", help="Envolvente del oscilador forzado")
    p.add_argument("--epsilon", type=float, default=Config.SECULAR_EPSILON)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--t-end", type=float, default=Config.SECULAR_T_END)
    p.add_argument("--out", type=str, default=None)
    p.add_argument("--plot-out", type=str, default=None)
    p.set_defaults(func=cmd_secular)

    p = subparsers.add_parser("reproduce", help="Corre todos los criterios y escribe report.json")
    p.add_argument("--output-dir", type=str, default=None)
    p.add_argument("--only", type=str, default=None, help="IDs separados por comas, p. ej. AC8,AC9")
    p.set_defaults(func=cmd_reproduce)

    return parser


def _apply_config(parser: ArgumentParser, args: argparse.Namespace, argv: Sequence[str]) -> argparse.Namespace:
    """Los valores del archivo reemplazan los defaults del subcomando; la línea de comandos gana."""
    valores = cargar_config(args.config)
    subparser = next(
        action.choices[args.command] for action in parser._actions if isinstance(action, argparse._SubParsersAction)
    )
    acciones = {a.dest: a for a in subparser._actions if a.dest != "help"}
    defaults = {}
    for clave, valor in valores.items():
        if clave not in acciones:
            raise ValueError(f"Clave desconocida en {args.config} para '{args.command}': {clave}")
        if isinstance(acciones[clave], argparse._StoreTrueAction):
            if valor.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(f"Valor booleano inválido para {clave}: {valor!r}")
            defaults[clave] = valor.lower() in ("true", "1", "yes")
        else:
            defaults[clave] = valor
    subparser.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        if args.config:
            args = _apply_config(parser, args, argv)
        crear_directorios()
        return args.func(args)
    except SystemExit as exc:
        return int(exc.code or 0)
    except integrators.IntegrationError as exc:
        _info(f"❌ {exc}")
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        _info(f"❌ {exc}")
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
