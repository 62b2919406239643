"""
Tests del grafo funcional de mapas en minifloat: descomposición, fronteras de
Gauss, medidas, órbitas sombra y exportación.
"""
import os
import tempfile

import networkx as nx
import numpy as np
import pandas as pd
import pytest

from src.discrete import lowprec, orbit_graph
from src.discrete.orbit_graph import FunctionalGraph


@pytest.fixture
def temp_dir():
    """Directorio temporal para archivos exportados."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


def _nx_oracle(graph):
    G = nx.DiGraph()
    G.add_nodes_from(range(1, graph.N + 1))
    G.add_edges_from((i, int(graph.successor[i - 1])) for i in range(1, graph.N + 1))
    lengths = sorted(len(c) for c in nx.simple_cycles(G))
    return lengths, nx.number_weakly_connected_components(G)


@pytest.mark.parametrize("name", ["e3m4", "e4m3", "e5m2"])
def test_descomposicion_contra_networkx(name):
    """Ciclos y componentes coinciden con una enumeración independiente."""
    graph = orbit_graph.build_graph(name, "gauss")
    decomposition = orbit_graph.decompose(graph)
    lengths, components = _nx_oracle(graph)
    assert decomposition.cycle_lengths == lengths, f"{name}: ciclos {decomposition.cycle_lengths} vs {lengths}"
    assert len(decomposition.cycles) == components, f"{name}: componentes distintas"
    checks = orbit_graph.check_invariants(graph, decomposition)
    assert all(checks.values()), f"{name}: invariantes {checks}"


def test_transitorios_contra_recorrido():
    """transient[j] es el número de pasos hasta entrar al ciclo."""
    graph = orbit_graph.build_graph("e4m3", "logistic")
    decomposition = orbit_graph.decompose(graph)
    on_cycle = {node for cycle in decomposition.cycles for node in cycle}
    for j in range(1, graph.N + 1):
        steps, node = 0, j
        while node not in on_cycle:
            node = int(graph.successor[node - 1])
            steps += 1
        assert decomposition.transient[j - 1] == steps, f"Nodo {j}: {decomposition.transient[j - 1]} vs {steps}"


def test_grafo_sintetico():
    """Sucesores [2, 3, 1, 1]: un ciclo de 3 y un nodo con transitorio 1."""
    graph = FunctionalGraph.from_successors([2, 3, 1, 1])
    decomposition = orbit_graph.decompose(graph)
    assert decomposition.cycles == [[1, 2, 3]], f"Ciclos {decomposition.cycles}"
    assert decomposition.transient.tolist() == [0, 0, 0, 1]
    assert decomposition.component_sizes == [4]
    with pytest.raises(ValueError):
        FunctionalGraph.from_successors([2, 5, 1])


def test_fronteras_gauss_binary16():
    """Último nodo con imagen no nula 10224, último sin NaN 15104, primer NaN 15105."""
    graph = orbit_graph.build_graph("binary16", "gauss")
    boundaries = orbit_graph.gauss_boundaries(graph)
    assert boundaries == {"last_nonzero_image": 10224, "last_non_nan": 15104, "first_nan": 15105}, f"{boundaries}"
    assert graph.N == 15361


def test_politica_nan_sumidero():
    """Con 'sink' las imágenes NaN van a un nodo N+1 que es punto fijo."""
    first = orbit_graph.build_graph("binary16", "gauss", "first")
    sink = orbit_graph.build_graph("binary16", "gauss", "sink")
    assert sink.N == first.N + 1
    assert sink.successor[-1] == sink.N, "El sumidero apunta a sí mismo"
    assert np.all(sink.successor[:-1][first.nan_mask] == sink.N)
    decomposition = orbit_graph.decompose(sink)
    assert [sink.N] in decomposition.cycles, "El sumidero es un ciclo de longitud 1"
    with pytest.raises(ValueError):
        orbit_graph.build_graph("e3m4", "gauss", "ignore")


def test_exportar_aristas(temp_dir):
    """edges.csv de e3m4 tiene encabezado Column1 y 49 sucesores."""
    graph = orbit_graph.build_graph("e3m4", "gauss")
    path = orbit_graph.export_edges(graph, os.path.join(temp_dir, "edges.csv"))
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    assert len(lines) == 50, f"{len(lines)} líneas"
    assert lines[0] == "Column1"
    assert [int(v) for v in lines[1:]] == graph.successor.tolist()
    assert all(1 <= int(v) <= 49 for v in lines[1:])


def test_exportar_dot(temp_dir):
    """La exportación DOT está limitada a grafos pequeños."""
    graph = orbit_graph.build_graph("e3m4", "gauss")
    decomposition = orbit_graph.decompose(graph)
    path = orbit_graph.export_dot(graph, decomposition, os.path.join(temp_dir, "g.dot"))
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    assert text.startswith("digraph"), "Debe ser un digrafo DOT"
    assert text.count("->") == graph.N
    with pytest.raises(ValueError):
        orbit_graph.export_dot(graph, decomposition, os.path.join(temp_dir, "g.dot"), max_nodes=10)


def test_escalamiento_requiere_tres_formatos():
    """El ajuste log-log necesita al menos tres formatos."""
    with pytest.raises(ValueError):
        orbit_graph.scaling_report("gauss", ["e3m4", "e4m3"])
    report = orbit_graph.scaling_report("bernoulli", ["e3m4", "e4m3", "e4m5"])
    assert list(report.table["format"]) == ["e3m4", "e4m3", "e4m5"], "Ordenado por N"
    assert list(report.table["N"]) == [49, 57, 225]
    assert np.isfinite(report.slope)


def test_distancia_ks():
    """Masas uniformes en una malla uniforme tienen distancia nula a Lebesgue."""
    grid = np.array([1.0, 0.75, 0.5, 0.25])
    masses = np.full(4, 0.25)
    assert orbit_graph.ks_distance(grid, masses, orbit_graph.MEASURES["lebesgue"]) == 0.0
    graph = orbit_graph.build_graph("e3m4", "gauss")
    report = orbit_graph.measure_compare(orbit_graph.decompose(graph), graph, "gauss")
    assert 0.0 <= report.ks_distance <= 1.0
    assert report.nan_mass == 0.0, "Con la política 'first' no hay masa NaN"
    with pytest.raises(ValueError):
        orbit_graph.measure_compare(orbit_graph.decompose(graph), graph, "cantor")


def test_sombras_e3m4():
    """Cada sombra satisface la recurrencia exacta y la cota paso a paso."""
    graph = orbit_graph.build_graph("e3m4", "gauss")
    successes = 0
    for start in range(1, graph.N + 1):
        try:
            result = orbit_graph.shadow_refine_gauss(graph, start)
        except orbit_graph.ShadowingError:
            assert len(orbit_graph.gauss_pseudo_orbit(graph, start, 20)) < 2, f"Inicio {start} debió tener sombra"
            continue
        successes += 1
        d = result.distances
        assert d[-1] == 0.0, "La sombra parte del último punto de la pseudo-órbita"
        assert np.all(result.recurrence_residuals() == 0.0), f"Recurrencia no exacta desde {start}"
        assert np.all(d[:-1] <= (result.local_residuals + d[1:]) * (1 + 1e-12)), f"Cota violada desde {start}"
        assert all(k >= 1 for k in result.branches)
    assert successes > 0, "Debe haber órbitas con sombra"
    table, worst = orbit_graph.shadow_sweep(graph, range(1, graph.N + 1))
    assert len(table) == graph.N
    assert worst >= 0.0


def test_sombra_binary64_sintetica():
    """En binary64 la sombra de (0.4, 0.5) está a menos de 1e-16."""
    fmt = lowprec.parse_format("binary64")
    graph = FunctionalGraph(fmt, "gauss", np.array([0.4, 0.5]), np.array([2, 1]), np.zeros(2, dtype=bool))
    result = orbit_graph.shadow_refine_gauss(graph, 1, max_len=2)
    assert result.branches == [2]
    assert result.max_distance <= 1e-16, f"Distancia {result.max_distance}"
    assert result.distances[0] == result.local_residuals[0]


def test_sombra_errores():
    """Sólo el mapa de Gauss admite sombras; el nodo 0 no tiene pseudo-órbita."""
    graph = orbit_graph.build_graph("e3m4", "logistic")
    with pytest.raises(ValueError):
        orbit_graph.shadow_refine_gauss(graph, 2)
    gauss = orbit_graph.build_graph("e3m4", "gauss")
    with pytest.raises(orbit_graph.ShadowingError):
        orbit_graph.shadow_refine_gauss(gauss, gauss.N)
    table, _ = orbit_graph.shadow_sweep(gauss, [gauss.N])
    assert isinstance(table, pd.DataFrame) and table["length"].iloc[0] == 0


def test_ajuste_loglog_sintetico():
    """Longitudes exactamente √N dan pendiente 0.5."""
    sizes = np.array([49.0, 57.0, 225.0, 15361.0])
    slope, intercept = orbit_graph.fit_loglog(sizes, np.sqrt(sizes))
    assert slope == pytest.approx(0.5, abs=1e-9), f"Pendiente {slope}"
    assert abs(intercept) < 1e-9


def test_escalamiento_gauss_cerca_de_raiz():
    """Gauss sobre cinco formatos: ciclo + transitorio crece como N^a con a en [0.25, 0.75]."""
    report = orbit_graph.scaling_report("gauss", ["e3m4", "e4m3", "e5m2", "e4m5", "e5m10"])
    assert len(report.table) == 5
    assert 0.25 <= report.slope <= 0.75, f"Pendiente {report.slope}"
