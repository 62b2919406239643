"""
Tests de los sistemas dinámicos (Lorenz, Hénon–Heiles, oscilador forzado).
"""
import numpy as np
import pytest

from src.model import systems
from src.model.systems import HamiltonianState


def _finite_jacobian(system, y, eps=1e-6):
    d = len(y)
    J = np.empty((d, d))
    for j in range(d):
        e = np.zeros(d)
        e[j] = eps
        J[:, j] = (system.rhs(0.0, y + e) - system.rhs(0.0, y - e)) / (2 * eps)
    return J


def test_lorenz_rhs_valores():
    """El lado derecho de Lorenz coincide con la fórmula escrita a mano."""
    value = systems.lorenz_rhs([1.0, 1.0, 1.0])
    expected = np.array([0.0, 26.0, 1.0 - 8.0 / 3.0])
    assert np.allclose(value, expected, rtol=0, atol=1e-15), f"rhs={value}, esperado {expected}"

    params = systems.LorenzParams(sigma=1.0, rho=2.0, beta=3.0)
    value = systems.lorenz_rhs([2.0, 3.0, 4.0], params)
    assert np.allclose(value, [1.0, 2 * (2 - 4) - 3, 6 - 12]), f"Parámetros no aplicados: {value}"


def test_lorenz_dimension_incorrecta():
    """Un estado de dimensión distinta a 3 es un error de argumento."""
    with pytest.raises(ValueError):
        systems.lorenz_rhs([1.0, 2.0])


def test_parametros_no_finitos():
    """Los parámetros de Lorenz deben ser finitos y ε del oscilador no negativo."""
    with pytest.raises(ValueError):
        systems.LorenzParams(sigma=float("nan"))
    with pytest.raises(ValueError):
        systems.ForcedOscillatorParams(epsilon=-0.1)
    with pytest.raises(ValueError):
        systems.ForcedOscillatorParams(omega=0.0)


@pytest.mark.parametrize("name", ["lorenz", "henon-heiles", "oscillator"])
def test_jacobiano_contra_diferencias_finitas(name):
    """El jacobiano analítico coincide con diferencias centradas."""
    system = systems.make_system(name)
    rng = np.random.default_rng(7)
    y = rng.uniform(-1.0, 1.0, system.dimension)
    J = system.jacobian(0.0, y)
    J_fd = _finite_jacobian(system, y)
    assert np.allclose(J, J_fd, atol=1e-7), f"{name}: jacobiano\n{J}\nvs diferencias\n{J_fd}"


@pytest.mark.parametrize("name", ["lorenz", "henon-heiles", "oscillator", "decay"])
def test_rhs_y_jvp_vectorizados(name):
    """Evaluar n columnas a la vez da lo mismo que columna por columna."""
    system = systems.make_system(name)
    rng = np.random.default_rng(3)
    Y = rng.uniform(-2.0, 2.0, (system.dimension, 5))
    V = rng.uniform(-1.0, 1.0, (system.dimension, 5))
    ts = np.linspace(0.0, 1.0, 5)
    batch = system.rhs(ts, Y)
    batch_jvp = system.jvp(ts, Y, V)
    for j in range(5):
        single = system.rhs(ts[j], Y[:, j])
        assert np.allclose(batch[:, j], single, rtol=1e-15, atol=1e-15), f"{name}: columna {j} difiere"
        expected = system.jacobian(ts[j], Y[:, j]) @ V[:, j]
        assert np.allclose(batch_jvp[:, j], expected, atol=1e-14), f"{name}: jvp columna {j} difiere"


def test_henon_heiles_en_estado_de_referencia():
    """Con todo en 0.12: H0 = 0.029952 y ecuaciones de movimiento conocidas."""
    state = HamiltonianState(0.12, 0.12, 0.12, 0.12)
    energy = systems.hamiltonian_h0(state)
    assert energy == pytest.approx(0.029952, abs=1e-15), f"H0={energy}"

    rhs = systems.henon_heiles_rhs(state)
    assert isinstance(rhs, HamiltonianState), "Con HamiltonianState de entrada se devuelve HamiltonianState"
    got = rhs.as_array()
    assert np.allclose(got, [-0.1488, -0.12, 0.12, 0.12], atol=1e-15), f"rhs={got}"


def test_conservacion_de_h0():
    """∇H · f = 0 en cualquier estado (identidad de conservación)."""
    rng = np.random.default_rng(11)
    for _ in range(20):
        state = rng.uniform(-0.5, 0.5, 4)
        grad = systems.hamiltonian_gradient(state)
        f = systems.henon_heiles_rhs(state)
        dH = grad[:2] @ f[:2] + grad[2:] @ f[2:]
        assert abs(dH) < 1e-14, f"dH/dt={dH} en {state}"


def test_hamiltonian_state_roundtrip_y_validacion():
    """from_array/as_array conservan el orden (p1, p2, q1, q2)."""
    state = HamiltonianState.from_array([1.0, 2.0, 3.0, 4.0])
    assert (state.p1, state.q2) == (1.0, 4.0), f"Orden incorrecto: {state}"
    with pytest.raises(ValueError):
        HamiltonianState.from_array([1.0, 2.0, 3.0])


def test_oscilador_forzado_y_energia():
    """ÿ + y = ε·sin(ωt): el lado derecho incluye el forzamiento en t."""
    params = systems.ForcedOscillatorParams(epsilon=0.5, omega=2.0)
    value = systems.forced_oscillator_rhs([1.0, 3.0], 0.25, params)
    assert np.allclose(value, [3.0, -1.0 + 0.5 * np.sin(0.5)]), f"rhs={value}"
    system = systems.make_system("oscillator")
    assert system.energy([3.0, 4.0]) == pytest.approx(12.5)


def test_make_system_desconocido():
    """Un nombre fuera del registro es un error de argumento."""
    with pytest.raises(ValueError):
        systems.make_system("pendulo")


def test_sistema_lineal_no_cuadrado():
    """La matriz de LinearSystem debe ser cuadrada."""
    with pytest.raises(ValueError):
        systems.LinearSystem([[1.0, 2.0]])
