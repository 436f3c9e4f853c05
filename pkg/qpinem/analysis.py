#!/usr/bin/env python3
"""
Photon-number statistics: moments, Mandel Q, thermal and coherent fits,
peak counting, Bessel references and state fidelity.
"""

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.signal import find_peaks
from scipy.special import xlogy
from scipy.stats import linregress

from .errors import FitError, TruncationError, UndefinedStatisticError
from .fockspace import PhotonDensity, PhotonPure, PhotonState
from .special import log_factorial

P_FLOOR = 1e-12
MIN_FIT_BINS = 5
PEAK_PROMINENCE = 1e-3
# below this argument J_k comes from two terms of its power series
SMALL_BESSEL_ARGUMENT = 1e-3


@dataclass(frozen=True)
class StatsReport:
    """Summary statistics of one photon-number distribution."""

    mean_n: float
    var_n: float
    mandel_q: Optional[float]
    effective_theta: Optional[float]
    effective_alpha: float
    peak_count: int
    fit_r2: Optional[float]

    def to_dict(self) -> dict:
        return asdict(self)


def _as_distribution(distribution: Sequence[float]) -> np.ndarray:
    probs = np.asarray(distribution, dtype=float)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("Distribution must be a non-empty 1D array")
    return probs


def moments(distribution: Sequence[float]) -> Tuple[float, float]:
    """Mean and variance of the photon number."""
    probs = _as_distribution(distribution)
    n = np.arange(probs.size)
    mean = float(np.dot(n, probs))
    var = float(np.dot((n - mean) ** 2, probs))
    return mean, max(var, 0.0)


def mandel_q(distribution: Sequence[float]) -> float:
    """Q = (Var(n) - <n>) / <n>."""
    mean, var = moments(distribution)
    if mean <= 0.0:
        raise UndefinedStatisticError("Mandel Q is undefined for <n> = 0")
    return (var - mean) / mean


def effective_theta(
    distribution: Sequence[float], p_floor: float = P_FLOOR, min_bins: int = MIN_FIT_BINS
) -> Tuple[float, float]:
    """Minus the least-squares slope of ln p_n versus n, with the fit's r^2.

    Args:
        distribution: photon-number probabilities
        p_floor: bins at or below this probability are left out
        min_bins: fewest usable bins accepted

    Returns:
        Tuple of (theta, r2)
    """
    probs = _as_distribution(distribution)
    n = np.flatnonzero(probs > p_floor)
    if n.size < min_bins:
        raise FitError(f"Thermal fit needs {min_bins} bins above {p_floor:g}, got {n.size}")
    fit = linregress(n, np.log(probs[n]))
    return -float(fit.slope), float(fit.rvalue) ** 2


def thermal_mean(theta: float) -> float:
    """<n> = 1 / (e^theta - 1)."""
    return 1.0 / math.expm1(theta)


def effective_alpha(distribution: Sequence[float]) -> float:
    """sqrt(<n>)."""
    mean, _ = moments(distribution)
    return math.sqrt(max(mean, 0.0))


def bessel_table(x: float, k_max: int) -> np.ndarray:
    """J_0(x) .. J_{k_max}(x) by downward recurrence, normalized with
    J_0 + 2 sum_k J_{2k} = 1. Tiny arguments use the power series instead.
    """
    if k_max < 0:
        raise ValueError("k_max must be non-negative")
    table = np.zeros(k_max + 1)
    x = abs(float(x))
    if x < SMALL_BESSEL_ARGUMENT:
        order = np.arange(k_max + 1)
        half = 0.5 * x
        leading = np.exp(xlogy(order, half) - log_factorial(order))
        table[:] = leading * (1.0 - half**2 / (order + 1))
        return table

    start = 2 * ((max(k_max, int(x)) + int(math.sqrt(40.0 * max(k_max, x, 1.0))) + 10) // 2)
    upper, current = 0.0, 1e-300
    values = np.zeros(start + 1)
    values[start] = current
    for order in range(start, 0, -1):
        lower = 2.0 * order / x * current - upper
        upper, current = current, lower
        values[order - 1] = current
        if abs(current) > 1e250:
            values[order - 1 :] *= 1e-250
            upper *= 1e-250
            current *= 1e-250

    norm = values[0] + 2.0 * values[2::2].sum()
    table[:] = values[: k_max + 1] / norm
    return table


def bessel_reference(k: int, g_conventional: complex) -> float:
    """J_k(2|g|)^2, the semiclassical electron spectrum."""
    order = abs(int(k))
    return float(bessel_table(2.0 * abs(g_conventional), order)[order] ** 2)


def peak_count(distribution: Sequence[float], min_prominence: float = PEAK_PROMINENCE) -> int:
    """Number of local maxima with prominence at least min_prominence."""
    if not min_prominence > 0:
        raise ValueError("min_prominence must be positive")
    probs = _as_distribution(distribution)
    # zero padding lets maxima sit on either edge
    padded = np.concatenate(([0.0], probs, [0.0]))
    peaks, _ = find_peaks(padded, prominence=min_prominence)
    return int(peaks.size)


def fidelity(a: PhotonState, b: PhotonState) -> float:
    """State fidelity; |<a|b>|^2 for pure pairs, Uhlmann fidelity otherwise."""
    if a.n_max != b.n_max:
        raise TruncationError(f"Cannot compare truncations {a.n_max} and {b.n_max}")

    match (a, b):
        case (PhotonPure(), PhotonPure()):
            value = abs(np.vdot(a.amps, b.amps)) ** 2
        case (PhotonPure(), PhotonDensity()):
            value = np.vdot(a.amps, b.mat @ a.amps).real
        case (PhotonDensity(), PhotonPure()):
            value = np.vdot(b.amps, a.mat @ b.amps).real
        case _:
            weights, vectors = np.linalg.eigh(a.mat)
            root = (vectors * np.sqrt(np.clip(weights, 0.0, None))) @ vectors.conj().T
            inner = np.linalg.eigvalsh(root @ b.mat @ root)
            value = np.sum(np.sqrt(np.clip(inner, 0.0, None))) ** 2
    return float(min(max(value, 0.0), 1.0))


def growth_slope(values: Sequence[float]) -> float:
    """Least-squares slope of a per-step series against the step index."""
    series = np.asarray(values, dtype=float)
    if series.size < 2:
        raise FitError("Slope fit needs at least 2 points")
    return float(linregress(np.arange(series.size), series).slope)


def summarize(distribution: Sequence[float], min_prominence: float = PEAK_PROMINENCE) -> StatsReport:
    """Collect every statistic; undefined ones are reported as None."""
    probs = _as_distribution(distribution)
    mean, var = moments(probs)
    try:
        q: Optional[float] = mandel_q(probs)
    except UndefinedStatisticError:
        q = None
    try:
        theta, r2 = effective_theta(probs)
    except FitError:
        theta, r2 = None, None
    return StatsReport(
        mean_n=mean,
        var_n=var,
        mandel_q=q,
        effective_theta=theta,
        effective_alpha=math.sqrt(max(mean, 0.0)),
        peak_count=peak_count(probs, min_prominence),
        fit_r2=r2,
    )


__all__ = [
    "StatsReport",
    "moments",
    "mandel_q",
    "effective_theta",
    "thermal_mean",
    "effective_alpha",
    "bessel_table",
    "bessel_reference",
    "peak_count",
    "fidelity",
    "growth_slope",
    "summarize",
]
