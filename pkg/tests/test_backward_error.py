"""
Tests del análisis de error hacia atrás: residuos, campo modificado de Euler,
serie modificada de Hénon–Heiles y deriva de energía del leapfrog.
"""
import numpy as np
import pytest

from src.analysis import backward_error
from src.model import integrators, systems
from src.model.integrators import SolverConfig, integrate_adaptive, leapfrog_dkd_tolerant
from src.model.systems import HamiltonianState

HH_START = (0.12, 0.12, 0.12, 0.12)


class SinJacobiano(systems.DynamicalSystem):
    name = "sin-jacobiano"
    dimension = 1

    def rhs(self, t, y):
        return -np.asarray(y, dtype=float)


def _gradient(func, state, eps=1e-6):
    grad = np.empty(4)
    for i in range(4):
        e = np.zeros(4)
        e[i] = eps
        grad[i] = (func(state + e) - func(state - e)) / (2 * eps)
    return grad


def test_residuo_nulo_en_nodos_hermite():
    """Con Hermite cúbico el residuo en los nodos es cero."""
    system = systems.LorenzSystem()
    solution = integrate_adaptive(system, [1.0, 0.0, 0.0], 0.0, 2.0)
    series = backward_error.residual_on_steps(solution, system, 1)
    assert len(series.times) == len(solution.skeleton.times), "Con S = 1 se muestrean sólo los nodos"
    assert series.max_norm <= 1e-12, f"Residuo en nodos {series.max_norm}"


def test_residuo_decrece_con_la_tolerancia():
    """El residuo máximo de Lorenz baja al endurecer la tolerancia."""
    system = systems.LorenzSystem()
    values = []
    for tol in (1e-6, 1e-8, 1e-10):
        solution = integrate_adaptive(system, [1.0, 0.0, 0.0], 0.0, 5.0, SolverConfig(rtol=tol, atol=tol))
        value, t_at = backward_error.max_residual(solution, system)
        assert 0.0 <= t_at <= 5.0, f"t del máximo fuera del intervalo: {t_at}"
        values.append(value)
    assert values[0] > values[1] > values[2], f"Residuos no monótonos: {values}"


def test_residuo_relativo_y_tabla():
    """El residuo relativo divide por max(1, ‖Y‖) y la tabla tiene columnas estables."""
    system = systems.LorenzSystem()
    solution = integrate_adaptive(system, [1.0, 0.0, 0.0], 0.0, 1.0)
    series = backward_error.residual_series(solution, system, n_samples=50)
    assert np.all(series.relative_norms <= series.norms + 1e-300), "El relativo nunca supera al absoluto"
    frame = series.to_frame(relative=True)
    assert list(frame.columns) == ["t", "r1", "r2", "r3", "norm", "relative_norm"], f"Columnas {list(frame.columns)}"
    summary = series.summary()
    assert summary["max_residual"] == series.max_norm
    with pytest.raises(ValueError):
        backward_error.residual_series(solution, system, 0.5, 0.2)
    with pytest.raises(ValueError):
        backward_error.residual_series(solution, systems.make_system("decay"))


def test_campo_modificado_de_euler():
    """Para ẏ = −y el campo modificado es −y + c·h·y."""
    field = backward_error.modified_euler_rhs(systems.make_system("decay"), 0.1, -0.5)
    value = field.rhs(0.0, np.array([2.0]))
    assert value[0] == pytest.approx(-2.0 - 0.1), f"f̃(2) = {value}"
    with pytest.raises(ValueError):
        backward_error.modified_euler_rhs(SinJacobiano(), 0.1)


def test_orden_del_residuo_de_euler():
    """Euler: residuo O(h) en el campo original y O(h²) en el campo con c = −1/2."""
    study = backward_error.residual_order_study(
        systems.make_system("decay"), [1.0], t_end=1.0, steps=(1e-2, 5e-3, 2.5e-3), coefficients=(-0.5, 1.0)
    )
    assert study.slopes["original"] == pytest.approx(1.0, abs=0.2), f"Pendiente original {study.slopes}"
    assert study.slopes["modified_-0.5"] == pytest.approx(2.0, abs=0.3), f"Pendiente modificada {study.slopes}"
    assert study.slopes["modified_1"] == pytest.approx(1.0, abs=0.2), f"c = 1 sigue en orden 1: {study.slopes}"
    assert study.best_coefficient() == -0.5, "El coeficiente −1/2 es el que sube el orden"
    assert list(study.to_frame().columns) == ["h", "original", "modified_-0.5", "modified_1"]


def test_terminos_k_en_p_unitario():
    """En p = (1, 0), q = 0 los términos K valen (0, 0, −5, 1, 1, 1, 0, 0)."""
    terms = backward_error.k_terms([1.0, 0.0, 0.0, 0.0])
    assert tuple(float(k) for k in terms) == (0.0, 0.0, -5.0, 1.0, 1.0, 1.0, 0.0, 0.0), f"K = {terms}"
    assert backward_error.h2_term([1.0, 0.0, 0.0, 0.0]) == pytest.approx(-1 / 24)
    assert backward_error.h4_term([1.0, 0.0, 0.0, 0.0]) == pytest.approx(-1 / 240)


def test_campo_modificado_es_hamiltoniano():
    """Las correcciones h² y h⁴ del campo son J·∇(h²H2 + h⁴H4)."""
    rng = np.random.default_rng(2)
    h = 0.3
    for _ in range(5):
        state = rng.uniform(-0.4, 0.4, 4)
        correction = backward_error.hh_modified_rhs(state, h) - systems.henon_heiles_rhs(state)
        grad = _gradient(lambda s: h**2 * backward_error.h2_term(s) + h**4 * backward_error.h4_term(s), state)
        expected = np.array([-grad[2], -grad[3], grad[0], grad[1]])
        assert np.allclose(correction, expected, atol=1e-9), f"Corrección {correction} vs {expected}"


def test_serie_modificada_orden_cero_y_h_nulo():
    """Orden 0 es H0 exacto; h = 0 deja el campo original; órdenes inválidos fallan."""
    state = HamiltonianState(*HH_START)
    assert backward_error.modified_hamiltonian(state, 0.5, 0) == systems.hamiltonian_h0(state)
    assert backward_error.hh_modified_rhs(state, 0.0) == systems.henon_heiles_rhs(state)
    assert backward_error.modified_hamiltonian(state, 0.0, 4) == systems.hamiltonian_h0(state)
    with pytest.raises(ValueError):
        backward_error.modified_hamiltonian(state, 0.5, 3)


def test_deriva_con_h_81_64():
    """h = 81/64, N = 16000: deriva(orden 4) < deriva(orden 2) < deriva(orden 0) en los rangos publicados."""
    run = leapfrog_dkd_tolerant(HH_START, 81 / 64, 16000)
    report = backward_error.energy_drift(run)
    d = report.drifts
    assert not report.diverged, "La corrida con h = 81/64 no diverge"
    assert d[4] < d[2] < d[0], f"Orden de derivas incorrecto: {d}"
    assert 0.0045 <= d[0] <= 0.018, f"Deriva H0 = {d[0]}"
    assert 0.0015 <= d[2] <= 0.006, f"Deriva H0 + h²H2 = {d[2]}"
    assert d[4] <= 0.002, f"Deriva completa = {d[4]}"
    assert not report.spurious, "h = 81/64 no es caos espurio"


def test_caos_espurio_con_h_79_64():
    """h = 79/64 se marca como caos espurio; h = 1.175 no."""
    flagged = backward_error.energy_drift(leapfrog_dkd_tolerant(HH_START, 79 / 64, 16000))
    quiet = backward_error.energy_drift(leapfrog_dkd_tolerant(HH_START, 1.175, 16000))
    assert flagged.spurious, f"h = 79/64 debió marcarse: {flagged.to_dict()}"
    assert not quiet.spurious, f"h = 1.175 no debió marcarse: {quiet.to_dict()}"
    assert quiet.drifts[0] <= 0.009, f"Deriva H0 con h = 1.175: {quiet.drifts[0]}"


def test_detect_spurious_chaos_referencia_nula():
    """Una energía de referencia nula es un error de argumento."""
    report = backward_error.EnergyDriftReport(0.1, 10, {0: 1e-3}, 0.0)
    with pytest.raises(ValueError):
        backward_error.detect_spurious_chaos(report, 0.0)
    diverged = backward_error.EnergyDriftReport(0.1, 10, {0: 0.0}, 1.0, diverged=True, diverged_at=3)
    assert backward_error.detect_spurious_chaos(diverged, 1.0), "Una corrida divergente siempre se marca"


def test_escalamiento_de_la_deriva():
    """La deriva de H0 escala como h² y la de H0 + h²H2 como h⁴."""
    scaling = backward_error.drift_scaling(HH_START, (0.05, 0.1, 0.2), t_end=200.0)
    assert scaling.slope_order0 == pytest.approx(2.0, abs=0.4), f"Pendiente orden 0: {scaling.slope_order0}"
    assert scaling.slope_order2 == pytest.approx(4.0, abs=0.6), f"Pendiente orden 2: {scaling.slope_order2}"


def test_tabla_de_energias():
    """energy_series devuelve t, estado y una columna por orden."""
    run = integrators.leapfrog_dkd(HH_START, 0.1, 20)
    frame = backward_error.energy_series(run, (0, 2))
    assert list(frame.columns) == ["t", "p1", "p2", "q1", "q2", "energy_order0", "energy_order2"]
    assert len(frame) == 21, f"{len(frame)} filas para N = 20"
    assert frame["energy_order0"].iloc[0] == pytest.approx(0.029952, abs=1e-15)


def test_residuo_maximo_con_mas_muestras():
    """Duplicar samples_per_step nunca reduce el máximo reportado."""
    system = systems.LorenzSystem()
    solution = integrate_adaptive(system, [1.0, 0.0, 0.0], 0.0, 10.0)
    values = [backward_error.max_residual(solution, system, s)[0] for s in (8, 16, 32)]
    assert values[0] <= values[1] <= values[2], f"Máximos {values}"


def test_deriva_ordenada_con_paso_estable():
    """h = 0.5, N = 16000: deriva(orden 4) ≤ deriva(orden 2) ≤ deriva(orden 0)."""
    report = backward_error.energy_drift(leapfrog_dkd_tolerant(HH_START, 0.5, 16000))
    d = report.drifts
    assert not report.diverged
    assert d[4] <= d[2] <= d[0], f"Derivas {d}"
    assert not report.spurious, "h = 0.5 no es caos espurio"


def test_campo_modificado_consistente_con_el_hamiltoniano():
    """En 20 estados con h ≤ 0.2 el campo es (−∂H̃/∂q, ∂H̃/∂p) de la serie truncada."""
    rng = np.random.default_rng(7)
    for _ in range(20):
        state = rng.uniform(-0.4, 0.4, 4)
        h = rng.uniform(0.01, 0.2)
        grad = _gradient(lambda s: backward_error.modified_hamiltonian(s, h, 4), state)
        expected = np.array([-grad[2], -grad[3], grad[0], grad[1]])
        field = backward_error.hh_modified_rhs(state, h)
        assert np.allclose(field, expected, rtol=0.0, atol=1e-8), f"h = {h}: {field} vs {expected}"
