"""
Emulación bit-exacta de formatos binarios de punto flotante parametrizados
(minifloats) y evaluación de los mapas de Gauss, logístico y de Bernoulli
con cada operación elemental redondeada al formato.

El redondeo se hace sobre el resultado en binary64 (al más cercano, empates al
par, subnormales graduales y desborde a infinito). Para p ≤ 25 bits de
precisión el doble redondeo de +, −, × y ÷ coincide con el redondeo directo.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Dict, List, Union

import numpy as np

MAP_IDS = ("gauss", "logistic", "bernoulli", "identity")

_ALIASES = {
    "binary16": (5, 10),
    "half": (5, 10),
    "bfloat16": (8, 7),
    "binary32": (8, 23),
    "single": (8, 23),
    "binary64": (11, 52),
    "double": (11, 52),
}
_FORMAT_RE = re.compile(r"^e(\d+)m(\d+)$")


@dataclass(frozen=True)
class FloatFormat:
    exponent_bits: int
    mantissa_bits: int

    def __post_init__(self) -> None:
        if self.exponent_bits < 2 or self.mantissa_bits < 1:
            raise ValueError(
                f"Formato inválido e{self.exponent_bits}m{self.mantissa_bits}: se requiere e >= 2 y m >= 1"
            )
        if self.exponent_bits + self.mantissa_bits + 1 > 64:
            raise ValueError(f"Formato {self.name} excede 64 bits")

    @property
    def name(self) -> str:
        return f"e{self.exponent_bits}m{self.mantissa_bits}"

    @property
    def bias(self) -> int:
        return 2 ** (self.exponent_bits - 1) - 1

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def emax(self) -> int:
        return self.bias

    @property
    def total_bits(self) -> int:
        return 1 + self.exponent_bits + self.mantissa_bits

    @property
    def max_finite(self) -> float:
        return math.ldexp(2.0 - math.ldexp(1.0, -self.mantissa_bits), self.emax)

    @property
    def min_subnormal(self) -> float:
        return math.ldexp(1.0, self.emin - self.mantissa_bits)

    @property
    def one_bits(self) -> int:
        """Patrón de bits de 1.0."""
        return self.bias << self.mantissa_bits

    @property
    def unit_interval_count(self) -> int:
        return self.bias * 2**self.mantissa_bits + 1

    @property
    def is_binary64(self) -> bool:
        return (self.exponent_bits, self.mantissa_bits) == (11, 52)

    @property
    def emulable(self) -> bool:
        return self.is_binary64 or (self.mantissa_bits <= 24 and self.exponent_bits <= 10)

    def __str__(self) -> str:
        return self.name


def parse_format(spec: Union[str, FloatFormat]) -> FloatFormat:
    """Interpreta ``eEmM`` (p. ej. ``e3m4``) o un alias como ``binary16``."""
    if isinstance(spec, FloatFormat):
        return spec
    text = str(spec).strip().lower()
    if text in _ALIASES:
        return FloatFormat(*_ALIASES[text])
    match = _FORMAT_RE.match(text)
    if not match:
        raise ValueError(f"Formato inválido: {spec!r}. Use 'eEmM', p. ej. 'e3m4' o 'e5m10'")
    return FloatFormat(int(match.group(1)), int(match.group(2)))


def unit_roundoff(fmt: Union[str, FloatFormat]) -> float:
    fmt = parse_format(fmt)
    return math.ldexp(1.0, -fmt.mantissa_bits - 1)


def round_array(values, fmt: FloatFormat) -> np.ndarray:
    """Redondea valores binary64 al formato, componente a componente."""
    a = np.array(values, dtype=float, copy=True)
    if fmt.is_binary64:
        return a
    if not fmt.emulable:
        raise ValueError(f"El formato {fmt.name} no puede emularse exactamente sobre binary64")
    mask = np.isfinite(a) & (a != 0)
    if not np.any(mask):
        return a
    mag = np.abs(a[mask])
    _, ex = np.frexp(mag)
    exponent = np.maximum(ex - 1, fmt.emin)
    shift = exponent - fmt.mantissa_bits
    rounded = np.ldexp(np.rint(np.ldexp(mag, -shift)), shift)
    rounded[rounded > fmt.max_finite] = np.inf
    a[mask] = np.copysign(rounded, a[mask])
    return a


def encode(values, fmt: FloatFormat) -> np.ndarray:
    """Patrones de bits (uint64) de valores ya representables en el formato."""
    a = np.atleast_1d(np.asarray(values, dtype=float))
    m = fmt.mantissa_bits
    exp_all_ones = (1 << fmt.exponent_bits) - 1
    sign = np.signbit(a).astype(np.uint64) << np.uint64(fmt.exponent_bits + m)
    mag = np.abs(a)
    bits = np.zeros(a.shape, dtype=np.uint64)
    nan = np.isnan(a)
    inf = np.isinf(a)
    bits[inf] = np.uint64(exp_all_ones << m)
    bits[nan] = np.uint64((exp_all_ones << m) | (1 << (m - 1)))
    finite = np.isfinite(a) & (mag > 0)
    if np.any(finite):
        fm = mag[finite]
        _, ex = np.frexp(fm)
        exponent = ex - 1
        sub = exponent < fmt.emin
        field = np.where(sub, 0, exponent + fmt.bias)
        scale = np.where(sub, fmt.emin - m, exponent - m)
        significand = np.ldexp(fm, -scale)
        if np.any(significand != np.rint(significand)):
            raise ValueError(f"Valor no representable en {fmt.name}")
        mant = significand.astype(np.int64) - np.where(sub, 0, 1 << m)
        bits[finite] = (field.astype(np.uint64) << np.uint64(m)) | mant.astype(np.uint64)
    return np.where(nan, bits, bits | sign)


def decode(bits, fmt: FloatFormat) -> np.ndarray:
    b = np.atleast_1d(np.asarray(bits, dtype=np.uint64))
    m = fmt.mantissa_bits
    exp_all_ones = (1 << fmt.exponent_bits) - 1
    mant = (b & np.uint64((1 << m) - 1)).astype(np.float64)
    field = ((b >> np.uint64(m)) & np.uint64(exp_all_ones)).astype(np.int64)
    negative = ((b >> np.uint64(fmt.exponent_bits + m)) & np.uint64(1)).astype(bool)
    with np.errstate(over="ignore"):
        normal = np.ldexp(mant + 2.0**m, field - fmt.bias - m)
    subnormal = np.ldexp(mant, fmt.emin - m)
    special = np.where(mant == 0, np.inf, np.nan)
    value = np.where(field == 0, subnormal, np.where(field == exp_all_ones, special, normal))
    return np.where(negative, -value, value)


@dataclass(frozen=True)
class MiniFloat:
    format: FloatFormat
    bits: int

    @classmethod
    def from_value(cls, x: float, fmt: FloatFormat) -> "MiniFloat":
        return round_to_format(x, fmt)

    @property
    def value(self) -> float:
        return float(decode(self.bits, self.format)[0])

    @property
    def is_nan(self) -> bool:
        return math.isnan(self.value)

    def hex(self) -> str:
        width = (self.format.total_bits + 3) // 4
        return f"0x{self.bits:0{width}x}"

    def next_down(self) -> "MiniFloat":
        """Valor representable anterior (para valores no negativos)."""
        if self.is_nan:
            return self
        sign_bit = 1 << (self.format.total_bits - 1)
        if self.bits == 0:
            return MiniFloat(self.format, sign_bit | 1)
        if self.bits & sign_bit:
            return MiniFloat(self.format, self.bits + 1)
        return MiniFloat(self.format, self.bits - 1)

    def __float__(self) -> float:
        return self.value

    def to_dict(self) -> Dict[str, object]:
        return {"format": self.format.name, "bits": self.hex(), "value": repr(self.value)}


def round_to_format(x: float, fmt: Union[str, FloatFormat]) -> MiniFloat:
    fmt = parse_format(fmt)
    rounded = round_array([x], fmt)
    return MiniFloat(fmt, int(encode(rounded, fmt)[0]))


def unit_interval_bits(fmt: FloatFormat) -> np.ndarray:
    """Patrones de 1.0 hasta 0.0 en orden descendente."""
    return np.arange(fmt.one_bits, -1, -1, dtype=np.uint64)


def unit_interval_values(fmt: Union[str, FloatFormat]) -> np.ndarray:
    fmt = parse_format(fmt)
    return decode(unit_interval_bits(fmt), fmt)


def enumerate_unit_interval(fmt: Union[str, FloatFormat]) -> List[MiniFloat]:
    """Todos los valores representables de 1.0 a 0.0, descendiendo con prevfloat."""
    fmt = parse_format(fmt)
    return [MiniFloat(fmt, int(b)) for b in unit_interval_bits(fmt)]


def count_unit_interval_exhaustive(fmt: Union[str, FloatFormat]) -> int:
    """Cuenta patrones positivos cuyo valor decodificado está en [0, 1]."""
    fmt = parse_format(fmt)
    values = decode(np.arange(1 << (fmt.exponent_bits + fmt.mantissa_bits), dtype=np.uint64), fmt)
    return int(np.count_nonzero((values >= 0) & (values <= 1)))


def _gauss(x: np.ndarray, r: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    inv = r(1.0 / np.where(x == 0, 1.0, x))
    out = r(inv - r(np.floor(inv)))
    return np.where(x == 0, 0.0, out)


def _logistic(x: np.ndarray, r: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    return r(r(4.0 * x) * r(1.0 - x))


def _bernoulli(x: np.ndarray, r: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    doubled = r(2.0 * x)
    return r(doubled - r(np.floor(doubled)))


_MAPS = {
    "gauss": _gauss,
    "logistic": _logistic,
    "bernoulli": _bernoulli,
    "identity": lambda x, r: x.copy(),
}


def map_array(values, fmt: Union[str, FloatFormat], map_id: str) -> np.ndarray:
    """Evalúa el mapa redondeando cada operación elemental al formato."""
    fmt = parse_format(fmt)
    if map_id not in _MAPS:
        raise ValueError(f"Mapa desconocido: {map_id!r}. Opciones: {', '.join(MAP_IDS)}")
    x = np.asarray(values, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        return _MAPS[map_id](x, lambda v: round_array(v, fmt))


def map_eval(x: MiniFloat, map_id: str) -> MiniFloat:
    image = map_array([x.value], x.format, map_id)
    return MiniFloat(x.format, int(encode(image, x.format)[0]))


__all__ = [
    "MAP_IDS",
    "FloatFormat",
    "parse_format",
    "unit_roundoff",
    "round_array",
    "encode",
    "decode",
    "MiniFloat",
    "round_to_format",
    "unit_interval_bits",
    "unit_interval_values",
    "enumerate_unit_interval",
    "count_unit_interval_exhaustive",
    "map_array",
    "map_eval",
]
