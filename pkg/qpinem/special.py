#!/usr/bin/env python3
"""
Log-space helpers for factorial-bearing ladder matrix elements.

Fock matrix elements of the displacement operator are normalized
Laguerre functions. They are generated by a forward three-term
recurrence on rescaled values with a running log scale, so neither
the tiny starting values nor the factorial-sized intermediate terms
of the closed-form sums ever leave floating-point range.
"""

import math
from typing import Sequence, Union

import numpy as np
from scipy.special import gammaln, xlogy

ArrayLike = Union[Sequence[float], np.ndarray]

# rescale the recurrence once values leave [1/RESCALE, RESCALE]
RESCALE = 1e150


def log_factorial(n: Union[int, np.ndarray]) -> Union[float, np.ndarray]:
    """Return ln(n!) for scalar or array n."""
    return gammaln(np.asarray(n, dtype=float) + 1.0)


def log_coherent_amplitudes(alpha: complex, n: np.ndarray) -> np.ndarray:
    """Coherent-state amplitudes e^{-|a|^2/2} a^n / sqrt(n!) at indices n."""
    n = np.asarray(n)
    magnitude = abs(alpha)
    log_mag = -0.5 * magnitude**2 + xlogy(n, magnitude) - 0.5 * log_factorial(n)
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def laguerre_functions(x: float, orders: ArrayLike, k_max: int) -> np.ndarray:
    """Normalized Laguerre functions f_k^(d)(x) for k in [0, k_max].

    f_k^(d)(x) = e^{-x/2} x^{d/2} sqrt(k! / (k+d)!) L_k^(d)(x), which is
    |<k+d|D(a)|k>| up to sign for x = |a|^2. Rows are degrees k, columns
    the orders d. Generated by
        sqrt((k+1)(k+1+d)) f_{k+1} = (2k+1+d-x) f_k - sqrt(k(k+d)) f_{k-1}.

    Args:
        x: argument, |a|^2 >= 0
        orders: non-negative orders d
        k_max: highest degree

    Returns:
        Real array of shape (k_max + 1, len(orders))
    """
    if x < 0:
        raise ValueError(f"Laguerre argument must be non-negative, got {x}")
    if k_max < 0:
        raise ValueError(f"k_max must be non-negative, got {k_max}")
    orders = np.atleast_1d(np.asarray(orders, dtype=float))
    if np.any(orders < 0):
        raise ValueError("Laguerre orders must be non-negative")

    table = np.zeros((k_max + 1, orders.size))
    if x == 0.0:
        table[:, orders == 0] = 1.0
        return table

    log_scale = -0.5 * x + 0.5 * orders * math.log(x) - 0.5 * log_factorial(orders)
    previous = np.zeros(orders.size)
    current = np.ones(orders.size)
    table[0] = np.exp(log_scale)
    for k in range(k_max):
        following = (
            (2 * k + 1 + orders - x) * current - np.sqrt(k * (k + orders)) * previous
        ) / np.sqrt((k + 1) * (k + 1 + orders))
        previous, current = current, following

        size = np.maximum(np.abs(previous), np.abs(current))
        rescale = (size > RESCALE) | ((size < 1.0 / RESCALE) & (size > 0.0))
        if rescale.any():
            previous[rescale] /= size[rescale]
            current[rescale] /= size[rescale]
            log_scale[rescale] += np.log(size[rescale])
        table[k + 1] = current * np.exp(log_scale)
    return table


def _diagonal_phase(alpha: complex, shift: int) -> complex:
    # above the diagonal (n < n') the element picks up (-1)^(n'-n)
    phase = np.exp(1j * shift * np.angle(alpha))
    if shift < 0 and shift % 2:
        phase = -phase
    return complex(phase)


def displacement_diagonal(alpha: complex, shift: int, length: int) -> np.ndarray:
    """Elements <n|D(alpha)|n'> along the diagonal n - n' = shift.

    Entry j is the element with min(n, n') = j, for j in [0, length).
    """
    if length <= 0:
        return np.zeros(0, dtype=complex)
    values = laguerre_functions(abs(alpha) ** 2, [abs(shift)], length - 1)[:, 0]
    return values * _diagonal_phase(alpha, shift)


def displacement_element(alpha: complex, n: int, n_prime: int) -> complex:
    """Fock matrix element <n|D(alpha)|n'>.

    Args:
        alpha: displacement amplitude
        n: output Fock index
        n_prime: input Fock index

    Returns:
        The complex matrix element
    """
    if n < 0 or n_prime < 0:
        raise ValueError("Fock indices must be non-negative")
    if abs(alpha) == 0.0:
        return complex(n == n_prime)
    degree = min(n, n_prime)
    return complex(displacement_diagonal(alpha, n - n_prime, degree + 1)[degree])


def displacement_column(alpha: complex, n_prime: int, n_max: int) -> np.ndarray:
    """Column D(alpha)|n'> over Fock indices [0, n_max], without truncation."""
    if not 0 <= n_prime <= n_max:
        raise ValueError(f"Fock index {n_prime} outside [0, {n_max}]")
    orders = np.arange(max(n_max - n_prime, n_prime) + 1)
    table = laguerre_functions(abs(alpha) ** 2, orders, n_prime)
    theta = float(np.angle(alpha))

    column = np.zeros(n_max + 1, dtype=complex)
    above = np.arange(n_max - n_prime + 1)
    column[n_prime:] = table[n_prime, above] * np.exp(1j * above * theta)
    below = np.arange(n_prime)
    shift = n_prime - below
    column[:n_prime] = table[below, shift] * np.where(shift % 2, -1.0, 1.0) * np.exp(
        -1j * shift * theta
    )
    return column


def displacement_elements(alpha: complex, n_max: int) -> np.ndarray:
    """Full block of <n|D(alpha)|n'> for n, n' in [0, n_max].

    The block holds the exact (untruncated) elements, so boundary rows
    of products of these blocks are the only place truncation shows.
    """
    if n_max < 0:
        raise ValueError("n_max must be non-negative")

    dim = n_max + 1
    table = laguerre_functions(abs(alpha) ** 2, np.arange(dim), n_max)
    theta = float(np.angle(alpha))
    block = np.zeros((dim, dim), dtype=complex)
    for order in range(dim):
        index = np.arange(dim - order)
        values = table[: dim - order, order]
        block[index + order, index] = values * np.exp(1j * order * theta)
        if order:
            block[index, index + order] = values * _diagonal_phase(alpha, -order)
    return block
