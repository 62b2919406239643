"""
Figuras SVG de los experimentos (dispersión y líneas en 2-D).
"""
from __future__ import annotations

import os
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams["svg.hashsalt"] = "backward-error-lab"
plt.rcParams["svg.fonttype"] = "none"


def _save(destination: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(destination)), exist_ok=True)
    plt.tight_layout()
    plt.savefig(destination, format="svg", metadata={"Date": None})
    plt.close()
    return destination


def residual_scatter(times: np.ndarray, norms: np.ndarray, destination: str, title: str = "Residuo") -> str:
    plt.figure(figsize=(9, 5))
    positive = norms > 0
    plt.scatter(times[positive], norms[positive], s=2, color="steelblue", alpha=0.7)
    plt.yscale("log")
    plt.xlabel("t", fontsize=12, fontweight="bold")
    plt.ylabel("‖r(t)‖₂", fontsize=12, fontweight="bold")
    plt.title(title, fontsize=14, fontweight="bold")
    plt.grid(alpha=0.3, linestyle="--")
    return _save(destination)


def phase_portrait(q1: np.ndarray, q2: np.ndarray, destination: str, title: str = "Hénon–Heiles") -> str:
    finite = np.isfinite(q1) & np.isfinite(q2)
    plt.figure(figsize=(6, 6))
    plt.scatter(q1[finite], q2[finite], s=0.5, color="black")
    plt.xlabel("q1", fontsize=12, fontweight="bold")
    plt.ylabel("q2", fontsize=12, fontweight="bold")
    plt.title(title, fontsize=14, fontweight="bold")
    return _save(destination)


def envelope_plot(
    times: np.ndarray,
    peaks: np.ndarray,
    destination: str,
    slope: Optional[float] = None,
    title: str = "Crecimiento secular",
) -> str:
    plt.figure(figsize=(9, 5))
    plt.scatter(times, peaks, s=4, color="coral", label="máximos de |y|")
    if slope is not None and len(times) >= 2:
        intercept = float(np.mean(peaks) - slope * np.mean(times))
        plt.plot(times, intercept + slope * times, color="black", linestyle="--", label=f"pendiente {slope:.3g}")
        plt.legend()
    plt.xlabel("t", fontsize=12, fontweight="bold")
    plt.ylabel("|y|", fontsize=12, fontweight="bold")
    plt.title(title, fontsize=14, fontweight="bold")
    plt.grid(alpha=0.3, linestyle="--")
    return _save(destination)


def cdf_plot(
    grid: np.ndarray,
    curves: Sequence[np.ndarray],
    labels: Sequence[str],
    destination: str,
    title: str = "Distribución acumulada",
) -> str:
    plt.figure(figsize=(7, 5))
    for curve, label in zip(curves, labels):
        plt.step(grid, curve, where="post", label=label)
    plt.xlabel("x", fontsize=12, fontweight="bold")
    plt.ylabel("F(x)", fontsize=12, fontweight="bold")
    plt.title(title, fontsize=14, fontweight="bold")
    plt.legend()
    plt.grid(alpha=0.3, linestyle="--")
    return _save(destination)


__all__ = ["residual_scatter", "phase_portrait", "envelope_plot", "cdf_plot"]
