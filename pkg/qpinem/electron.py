#!/usr/bin/env python3
"""
Free-electron energy-ladder states |k> on a finite index window.

Index k counts photon energies relative to the baseline electron energy.
The ladder operators b and b^dagger shift k down and up by one; anything
pushed past the window edge is dropped and booked as leakage.
"""

import logging
import math
from dataclasses import dataclass
from typing import Iterator, Optional, Tuple

import numpy as np

from .errors import DomainError, NumericalError, OutOfWindowError
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

Window = Tuple[int, int]

# Extra ladder rungs kept beyond n_max in scenario windows.
DEFAULT_MARGIN = 8


@dataclass(frozen=True, eq=False)
class ElectronPure:
    """Electron amplitudes over k in [k_lo, k_hi].

    Attributes:
        k_lo: lowest energy index in the window
        k_hi: highest energy index in the window
        amps: amplitude for each k, amps[0] belongs to k_lo
        leakage: squared norm dropped at the window edges so far
    """

    k_lo: int
    k_hi: int
    amps: np.ndarray
    leakage: float = 0.0

    def __post_init__(self) -> None:
        if self.k_lo > self.k_hi:
            raise OutOfWindowError(f"Empty electron window [{self.k_lo}, {self.k_hi}]")
        amps = np.array(self.amps, dtype=complex)
        if amps.shape != (self.k_hi - self.k_lo + 1,):
            raise ValueError(
                f"Expected {self.k_hi - self.k_lo + 1} amplitudes for window "
                f"[{self.k_lo}, {self.k_hi}], got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def window(self) -> Window:
        return (self.k_lo, self.k_hi)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_lo, self.k_hi + 1)

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def amplitude(self, k: int) -> complex:
        """Amplitude at k, zero outside the window."""
        if k < self.k_lo or k > self.k_hi:
            return 0j
        return complex(self.amps[k - self.k_lo])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def support(self) -> Iterator[int]:
        """Energy indices carrying nonzero amplitude."""
        for offset in np.flatnonzero(self.amps):
            yield self.k_lo + int(offset)

    def validate(self, tol: Tolerances = DEFAULT_TOLERANCES) -> None:
        if abs(self.norm_squared - 1.0) > tol.norm:
            raise NumericalError(f"Electron state norm {self.norm_squared!r} deviates from 1")


def default_window(n_max: int, margin: int = DEFAULT_MARGIN) -> Window:
    """Scenario window [-(n_max + margin), n_max + margin]."""
    reach = n_max + margin
    return (-reach, reach)


def make_delta(k0: int, window: Optional[Window] = None) -> ElectronPure:
    """Single-energy electron |k0>; the window defaults to [k0, k0]."""
    k_lo, k_hi = window if window is not None else (k0, k0)
    if k_lo > k_hi:
        raise OutOfWindowError(f"Empty electron window [{k_lo}, {k_hi}]")
    if not k_lo <= k0 <= k_hi:
        raise OutOfWindowError(f"k0={k0} outside electron window [{k_lo}, {k_hi}]")

    amps = np.zeros(k_hi - k_lo + 1, dtype=complex)
    amps[k0 - k_lo] = 1.0
    return ElectronPure(k_lo, k_hi, amps)


def make_comb(K: int, K_prime: int, beta: complex, tol: float = 1e-12) -> ElectronPure:
    """Equal-weight comb sum_k beta^k |k> / sqrt(K+K'+1) over k in [-K, K'].

    Args:
        K: teeth below k=0
        K_prime: teeth above k=0
        beta: unimodular phase step between neighbouring teeth
        tol: allowed deviation of |beta| from 1

    Returns:
        The comb state on the window [-K, K']
    """
    if K < 0 or K_prime < 0:
        raise DomainError(f"Comb extents must be non-negative, got K={K}, K'={K_prime}")
    beta = complex(beta)
    if abs(abs(beta) - 1.0) > tol:
        raise DomainError(f"Comb phase must satisfy |beta| = 1, got |beta| = {abs(beta)!r}")

    teeth = K + K_prime + 1
    ks = np.arange(-K, K_prime + 1)
    # Unit modulus: only the phase is raised to the power k.
    amps = np.exp(1j * np.angle(beta) * ks) / math.sqrt(teeth)
    return ElectronPure(-K, K_prime, amps)


def _shift(state: ElectronPure, step: int) -> ElectronPure:
    amps = np.zeros_like(state.amps)
    if step > 0:
        amps[step:] = state.amps[:-step]
        lost = state.amps[-step:]
    else:
        amps[:step] = state.amps[-step:]
        lost = state.amps[:-step]
    dropped = float(np.vdot(lost, lost).real)
    return ElectronPure(state.k_lo, state.k_hi, amps, state.leakage + dropped)


def apply_b(state: ElectronPure) -> ElectronPure:
    """b|k> = |k-1>; the amplitude at k_lo leaves the window."""
    return _shift(state, -1)


def apply_b_dagger(state: ElectronPure) -> ElectronPure:
    """b^dagger|k> = |k+1>; the amplitude at k_hi leaves the window."""
    return _shift(state, 1)


def overlap(a: ElectronPure, b: ElectronPure) -> complex:
    """<a|b> over the union of both windows."""
    lo = max(a.k_lo, b.k_lo)
    hi = min(a.k_hi, b.k_hi)
    if lo > hi:
        return 0j
    return complex(
        np.vdot(a.amps[lo - a.k_lo : hi - a.k_lo + 1], b.amps[lo - b.k_lo : hi - b.k_lo + 1])
    )


def embed(state: ElectronPure, window: Window) -> ElectronPure:
    """Place a state into a window that contains its own."""
    k_lo, k_hi = window
    if k_lo > state.k_lo or k_hi < state.k_hi:
        raise OutOfWindowError(
            f"Window [{k_lo}, {k_hi}] does not contain [{state.k_lo}, {state.k_hi}]"
        )
    amps = np.zeros(k_hi - k_lo + 1, dtype=complex)
    amps[state.k_lo - k_lo : state.k_hi - k_lo + 1] = state.amps
    return ElectronPure(k_lo, k_hi, amps, state.leakage)


def eigen_residual(state: ElectronPure, beta: complex) -> float:
    """||b psi - beta psi||^2 including the weight b pushes out of the window.

    For a finite comb this equals 2/(K+K'+1): one tooth leaves the window
    and one position at the top is left empty.
    """
    shifted = apply_b(state)
    in_window = shifted.amps - complex(beta) * state.amps
    return float(np.vdot(in_window, in_window).real) + shifted.leakage - state.leakage


@dataclass(frozen=True)
class ElectronSpec:
    """Recipe for the electron injected at each interaction.

    Attributes:
        kind: "delta" or "comb"
        k0: energy of a delta electron
        K: comb teeth below zero
        K_prime: comb teeth above zero
        beta: comb phase step
    """

    kind: str = "delta"
    k0: int = 0
    K: int = 0
    K_prime: int = 0
    beta: complex = 1.0 + 0j

    def __post_init__(self) -> None:
        if self.kind not in ("delta", "comb"):
            raise DomainError(f"Unknown electron kind '{self.kind}'")

    @classmethod
    def delta(cls, k0: int = 0) -> "ElectronSpec":
        return cls(kind="delta", k0=k0)

    @classmethod
    def comb(cls, K: int, K_prime: int, beta: complex) -> "ElectronSpec":
        return cls(kind="comb", K=K, K_prime=K_prime, beta=complex(beta))

    def build(self) -> ElectronPure:
        match self.kind:
            case "delta":
                return make_delta(self.k0)
            case "comb":
                comb = make_comb(self.K, self.K_prime, self.beta)
                residual = eigen_residual(comb, self.beta)
                if residual > 0.1:
                    logger.warning(
                        "Comb of %d teeth is a poor b eigenstate (residual %.3g)",
                        self.K + self.K_prime + 1,
                        residual,
                    )
                return comb
            case _:
                raise DomainError(f"Unknown electron kind '{self.kind}'")

    def to_dict(self) -> dict:
        if self.kind == "delta":
            return {"kind": "delta", "k0": self.k0}
        return {
            "kind": "comb",
            "K": self.K,
            "K_prime": self.K_prime,
            "beta": [self.beta.real, self.beta.imag],
        }


__all__ = [
    "ElectronPure",
    "ElectronSpec",
    "Window",
    "DEFAULT_MARGIN",
    "default_window",
    "make_delta",
    "make_comb",
    "apply_b",
    "apply_b_dagger",
    "overlap",
    "embed",
    "eigen_residual",
]
