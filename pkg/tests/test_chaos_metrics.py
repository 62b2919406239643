"""
Tests de los diagnósticos de caos: perturbaciones persistentes, Lyapunov,
tiempo de separación, estadísticas y crecimiento secular.
"""
import math

import numpy as np
import pytest

from src.analysis import chaos_metrics
from src.analysis.chaos_metrics import DisturbanceSpec
from src.model import integrators, systems


@pytest.mark.parametrize("kind", chaos_metrics.DISTURBANCE_KINDS)
def test_perturbacion_acotada_y_determinista(kind):
    """‖v(t)‖∞ ≤ 1; misma semilla da la misma señal y semillas distintas difieren."""
    ts = np.linspace(0.0, 30.0, 2001)
    a = chaos_metrics.disturbance_signal(DisturbanceSpec(1e-3, kind, seed=1), ts)
    b = chaos_metrics.disturbance_signal(DisturbanceSpec(1e-3, kind, seed=1), ts)
    c = chaos_metrics.disturbance_signal(DisturbanceSpec(1e-3, kind, seed=2), ts)
    assert a.shape == (3, len(ts)), f"Forma {a.shape}"
    assert np.max(np.abs(a)) <= 1.0, "La señal debe estar acotada por 1"
    assert np.array_equal(a, b), "Misma semilla, misma señal"
    assert not np.array_equal(a, c), "Semillas distintas deben dar señales distintas"
    single = chaos_metrics.disturbance_signal(DisturbanceSpec(1e-3, kind, seed=1), 2.5)
    assert single.shape == (3,), f"t escalar devuelve forma {single.shape}"


def test_perturbacion_invalida():
    """ε negativo o tipo desconocido son errores de argumento."""
    with pytest.raises(ValueError):
        DisturbanceSpec(-1e-3)
    with pytest.raises(ValueError):
        DisturbanceSpec(1e-3, "ruido-blanco")
    with pytest.raises(ValueError):
        chaos_metrics.DisturbedSystem(systems.make_system("decay"), DisturbanceSpec(1e-3, dimension=3))


def test_sistema_perturbado_con_epsilon_cero():
    """Con ε = 0 el sistema perturbado coincide con el original."""
    base = systems.LorenzSystem()
    disturbed = chaos_metrics.DisturbedSystem(base, DisturbanceSpec(0.0, seed=4))
    y = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(disturbed.rhs(0.7, y), base.rhs(0.7, y)), "ε = 0 no debe alterar f"


def test_lyapunov_del_decaimiento():
    """Para ẏ = −y el exponente es −1."""
    estimate = chaos_metrics.lyapunov_estimate(
        systems.make_system("decay"), [1.0], T_total=10.0, renorm_interval=0.5, transient=0.0
    )
    assert estimate == pytest.approx(-1.0, abs=1e-3), f"λ = {estimate}"


def test_lyapunov_intervalo_insuficiente():
    """T_total debe cubrir al menos 20 intervalos de renormalización."""
    with pytest.raises(ValueError):
        chaos_metrics.lyapunov_history(systems.LorenzSystem(), [1.0, 0.0, 0.0], T_total=5.0, renorm_interval=0.5)


def test_separacion_de_copias_identicas():
    """Dos copias con la misma perturbación nunca se separan."""
    spec = DisturbanceSpec(1e-6, seed=1)
    result = chaos_metrics.separation_time(systems.LorenzSystem(), [1.0, 0.0, 0.0], spec, spec, t_max=5.0)
    assert not result.reached, "Copias idénticas no deben separarse"
    assert result.time is None
    assert result.max_separation == 0.0, f"Separación {result.max_separation}"


def test_oscilador_no_caotico_no_se_separa():
    """Sin caos la separación queda acotada por 2·ε·t."""
    system = systems.make_system("oscillator")
    result = chaos_metrics.separation_time(
        system, [1.0, 0.0], DisturbanceSpec(1e-6, seed=1, dimension=2), DisturbanceSpec(1e-6, seed=2, dimension=2), t_max=200.0
    )
    assert not result.reached, "El oscilador lineal no alcanza el umbral"
    assert result.max_separation <= 2 * 1e-6 * 200.0 * 1.01, f"Separación {result.max_separation}"


def test_separacion_lorenz_y_umbral_monotono():
    """Lorenz se separa, y un umbral mayor nunca da un tiempo menor."""
    system = systems.LorenzSystem()
    spec1 = DisturbanceSpec(1e-6, seed=1)
    spec2 = DisturbanceSpec(1e-6, seed=2)
    low = chaos_metrics.separation_time(system, [1.0, 0.0, 0.0], spec1, spec2, threshold=0.5, t_max=100.0)
    high = chaos_metrics.separation_time(system, [1.0, 0.0, 0.0], spec1, spec2, threshold=1.0, t_max=100.0)
    assert low.reached and high.reached, "Lorenz debe separarse antes de t = 100"
    assert high.time >= low.time, f"T(1.0) = {high.time} < T(0.5) = {low.time}"


def test_ajuste_logaritmico():
    """La regresión recupera la pendiente de T = a·ln(1/ε) + b."""
    eps = np.array([1e-6, 1e-8, 1e-10])
    times = 1.1 * np.log(1 / eps) + 3.0
    slope, intercept = chaos_metrics.fit_log_scaling(eps, times)
    assert slope == pytest.approx(1.1, rel=1e-12)
    assert intercept == pytest.approx(3.0, rel=1e-10)
    with pytest.raises(ValueError):
        chaos_metrics.fit_log_scaling([1e-6, 1e-8], [15.0, 20.0])
    with pytest.raises(ValueError):
        chaos_metrics.fit_log_scaling([1e-6, 1e-7, 1e-8], [15.0, 17.0, 20.0])


def test_estadisticas_del_oscilador():
    """cos t sobre muchos periodos: media ≈ 0 y desviación ≈ 1/√2."""
    system = systems.make_system("oscillator")
    solution = integrators.integrate_adaptive(
        system, [1.0, 0.0], 0.0, 40 * math.pi, integrators.SolverConfig(rtol=1e-10, atol=1e-10)
    )
    report = chaos_metrics.trajectory_statistics(solution, (0.0, 40 * math.pi), n_bins=20, n_samples=20000, component=0)
    assert abs(report.means[0]) < 1e-3, f"Media {report.means[0]}"
    assert report.stds[0] == pytest.approx(1 / math.sqrt(2), abs=1e-3), f"Desviación {report.stds[0]}"
    assert report.counts.sum() == 20000, "El histograma cuenta todas las muestras"
    assert report.frequencies.sum() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        chaos_metrics.trajectory_statistics(solution, (0.0, 1.0), n_samples=10)
    with pytest.raises(ValueError):
        chaos_metrics.trajectory_statistics(solution, (0.0, 1e3))


def test_crecimiento_secular():
    """En resonancia la envolvente crece con pendiente ε/2; fuera de ella no crece."""
    eps = 0.01
    resonant = chaos_metrics.secular_envelope(eps, 1.0, 300.0)
    off = chaos_metrics.secular_envelope(eps, 2.0, 300.0)
    assert resonant == pytest.approx(eps / 2, rel=0.1), f"Pendiente resonante {resonant}"
    assert abs(off) <= 1e-4, f"Pendiente no resonante {off}"
    assert chaos_metrics.secular_envelope(0.0, 1.0, 50.0) == 0.0, "Sin forzamiento no hay máximos"


def test_escalamiento_de_separacion():
    """En Lorenz T crece con ln(1/ε) con pendiente en [0.7, 1.6], cercana a 1/λ."""
    fit = chaos_metrics.separation_scaling(systems.LorenzSystem(), [1.0, 0.0, 0.0], (1e-6, 1e-8, 1e-10))
    assert not fit.excluded, f"ε excluidos: {fit.excluded}"
    assert 0.7 <= fit.slope <= 1.6, f"Pendiente {fit.slope}"
    with pytest.raises(ValueError):
        chaos_metrics.separation_scaling(systems.make_system("oscillator"), [1.0, 0.0], (1e-4, 1e-6, 1e-8), t_max=20.0)


def test_ajuste_logaritmico_sintetico():
    """T = ln(1/ε)/0.905 da pendiente 1/0.905; duplicar T duplica la pendiente."""
    eps = np.array([1e-6, 1e-8, 1e-10])
    times = np.log(1 / eps) / 0.905
    slope, intercept = chaos_metrics.fit_log_scaling(eps, times)
    assert slope == pytest.approx(1 / 0.905, abs=1e-9), f"Pendiente {slope}"
    assert abs(intercept) < 1e-8
    doubled, _ = chaos_metrics.fit_log_scaling(eps, 2 * times)
    assert doubled == pytest.approx(2 * slope, abs=1e-9)


def test_lyapunov_de_lorenz():
    """λ ≈ 0.905 para Lorenz e independiente de δ0 dentro de ±0.05."""
    estimates = [
        chaos_metrics.lyapunov_estimate(systems.LorenzSystem(), [1.0, 0.0, 0.0], delta0=d) for d in (1e-6, 1e-8, 1e-10)
    ]
    for value in estimates:
        assert value == pytest.approx(0.905, abs=0.05), f"λ = {value}"
    assert max(estimates) - min(estimates) <= 0.05, f"Dispersión con δ0: {estimates}"


def test_estadisticas_de_lorenz_robustas():
    """La media de z en [10, 50] cambia menos de 5% entre rtol 1e-8 y 1e-10, aunque los extremos difieran."""
    reports, ends = [], []
    for tol in (1e-8, 1e-10):
        solution = integrators.integrate_adaptive(
            systems.LorenzSystem(), [1.0, 0.0, 0.0], 0.0, 50.0, integrators.SolverConfig(rtol=tol, atol=tol)
        )
        reports.append(chaos_metrics.trajectory_statistics(solution, (10.0, 50.0), component=2))
        ends.append(solution.skeleton.states[-1])
    z_a, z_b = reports[0].means[2], reports[1].means[2]
    assert abs(z_a - z_b) / abs(z_b) <= 0.05, f"Medias de z: {z_a} vs {z_b}"
    assert np.max(np.abs(ends[0] - ends[1])) >= 1.0, "Las trayectorias deben separarse"
