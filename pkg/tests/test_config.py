"""
Tests de la configuración: lectura de archivos clave = valor y números con fracciones.
"""
import os
import tempfile

import pytest

from src.config import Config, cargar_config, crear_directorios, parse_number


@pytest.fixture
def temp_dir():
    """Directorio temporal para archivos de configuración."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield tmpdir


def test_parse_number_fracciones_y_decimales():
    """'79/64' es exacto; decimales y notación científica también se aceptan."""
    assert parse_number("79/64") == 79 / 64
    assert parse_number(" 1.175 ") == 1.175
    assert parse_number("1e-8") == 1e-8
    assert parse_number(0.5) == 0.5
    for bad in ("", "abc", "1/0"):
        with pytest.raises(ValueError):
            parse_number(bad)


def test_cargar_config(temp_dir):
    """Comentarios y líneas vacías se ignoran; las claves usan guiones bajos."""
    path = os.path.join(temp_dir, "lab.cfg")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# comentario\n\n--t-end = 20  # fin\nrtol=1e-9\n")
    assert cargar_config(path) == {"t_end": "20", "rtol": "1e-9"}


def test_cargar_config_linea_invalida(temp_dir):
    """Una línea sin '=' es un error con su número de línea."""
    path = os.path.join(temp_dir, "lab.cfg")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("steps = 10\nsolo-clave\n")
    with pytest.raises(ValueError, match="Línea 2"):
        cargar_config(path)


def test_crear_directorios(temp_dir):
    """crear_directorios respeta las rutas configuradas."""
    original = (Config.DATA_RESULTS, Config.DATA_REPRODUCE)
    Config.DATA_RESULTS = os.path.join(temp_dir, "r")
    Config.DATA_REPRODUCE = os.path.join(temp_dir, "p")
    try:
        crear_directorios()
        assert os.path.isdir(Config.DATA_RESULTS) and os.path.isdir(Config.DATA_REPRODUCE)
    finally:
        Config.DATA_RESULTS, Config.DATA_REPRODUCE = original
