#!/usr/bin/env python3
"""
Photon-mode states over a truncated Fock basis |0>, ..., |n_max>.

Pure states are amplitude vectors, mixed states dense Hermitian
matrices. Both are immutable once built; every constructor renormalizes
over the truncated window and records the weight it had to discard.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import DomainError, NumericalError, TruncationError
from .special import (
    displacement_column,
    displacement_elements,
    log_coherent_amplitudes,
)
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PhotonPure:
    """Pure photon state as amplitudes over Fock indices 0..n_max.

    Attributes:
        amps: complex amplitude per Fock index
        discarded_weight: squared norm removed by truncation before renormalizing
    """

    amps: np.ndarray
    discarded_weight: float = 0.0

    def __post_init__(self) -> None:
        amps = np.array(self.amps, dtype=complex)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("Photon amplitudes must be a non-empty 1D array")
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @property
    def n_max(self) -> int:
        return self.amps.size - 1

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amps, self.amps).real)

    def validate(self, tol: Tolerances = DEFAULT_TOLERANCES) -> None:
        """Raise NumericalError if the state is not normalized."""
        if abs(self.norm_squared - 1.0) > tol.norm:
            raise NumericalError(f"Photon state norm {self.norm_squared!r} deviates from 1")


@dataclass(frozen=True, eq=False)
class PhotonDensity:
    """Mixed photon state as a dense (n_max+1) x (n_max+1) density matrix.

    Attributes:
        mat: Hermitian, positive semidefinite matrix with unit trace
        discarded_weight: trace removed by truncation before renormalizing
    """

    mat: np.ndarray
    discarded_weight: float = 0.0

    def __post_init__(self) -> None:
        mat = np.array(self.mat, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.shape[0] == 0:
            raise ValueError("Density matrix must be square and non-empty")
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)

    @property
    def n_max(self) -> int:
        return self.mat.shape[0] - 1

    @property
    def trace(self) -> float:
        return float(np.trace(self.mat).real)

    def validate(self, tol: Tolerances = DEFAULT_TOLERANCES, check_psd: bool = False) -> None:
        """Check Hermiticity and trace; the eigenvalue test runs only on request."""
        skew = np.max(np.abs(self.mat - self.mat.conj().T))
        if skew > tol.herm:
            raise NumericalError(f"Density matrix is not Hermitian (deviation {skew:.3g})")
        if abs(self.trace - 1.0) > tol.norm:
            raise NumericalError(f"Density matrix trace {self.trace!r} deviates from 1")
        if check_psd:
            smallest = float(np.linalg.eigvalsh(self.mat).min())
            if smallest < -tol.psd:
                raise NumericalError(f"Density matrix has negative eigenvalue {smallest:.3g}")


PhotonState = Union[PhotonPure, PhotonDensity]


def coherent_fits(alpha: complex, n_max: int) -> bool:
    """Truncation adequacy: |a|^2 + 8|a| must fit below n_max."""
    magnitude = abs(alpha)
    return magnitude**2 + 8.0 * magnitude <= n_max


def displaced_fock_fits(n_i: int, alpha: complex, n_max: int) -> bool:
    """Adequacy for D(a)|n_i>: mean plus 8 standard deviations of the photon number."""
    magnitude = abs(alpha)
    return n_i + magnitude**2 + 8.0 * magnitude * math.sqrt(2 * n_i + 1) <= n_max


def _check_n_max(n_max: int) -> None:
    if n_max < 0:
        raise TruncationError(f"n_max must be non-negative, got {n_max}")


def _renormalized(amps: np.ndarray) -> PhotonPure:
    weight = float(np.vdot(amps, amps).real)
    if weight <= 0.0:
        raise NumericalError("State has no weight inside the truncation window")
    discarded = max(0.0, 1.0 - weight)
    if discarded > DEFAULT_TOLERANCES.leakage_warning:
        logger.debug("Truncation discarded %.3g of the state norm", discarded)
    return PhotonPure(amps / math.sqrt(weight), discarded_weight=discarded)


def make_vacuum(n_max: int) -> PhotonPure:
    """Empty cavity |0>."""
    return make_fock(0, n_max)


def make_fock(n: int, n_max: int) -> PhotonPure:
    """Fock state |n> inside the window [0, n_max]."""
    _check_n_max(n_max)
    if n < 0 or n > n_max:
        raise TruncationError(f"Fock index {n} outside truncation [0, {n_max}]")
    amps = np.zeros(n_max + 1, dtype=complex)
    amps[n] = 1.0
    return PhotonPure(amps)


def make_coherent(alpha: complex, n_max: int, allow_truncation: bool = False) -> PhotonPure:
    """Coherent state |alpha>, evaluated in log space and renormalized.

    Args:
        alpha: complex amplitude
        n_max: truncation index
        allow_truncation: skip the |a|^2 + 8|a| <= n_max adequacy check

    Returns:
        The truncated coherent state
    """
    _check_n_max(n_max)
    if not allow_truncation and not coherent_fits(alpha, n_max):
        raise TruncationError(
            f"Coherent state with |alpha|^2={abs(alpha) ** 2:.4g} needs n_max >= "
            f"{math.ceil(abs(alpha) ** 2 + 8 * abs(alpha))}, got {n_max}"
        )
    amps = log_coherent_amplitudes(complex(alpha), np.arange(n_max + 1))
    return _renormalized(amps)


def thermal_theta(mean_n: float) -> float:
    """theta = hbar*omega/kT of a thermal state with the given mean photon number."""
    if mean_n <= 0:
        raise DomainError("Thermal mean photon number must be positive")
    return math.log1p(1.0 / mean_n)


def make_thermal(theta: float, n_max: int) -> PhotonDensity:
    """Thermal state with p_n = (1 - e^{-theta}) e^{-n theta}, renormalized."""
    _check_n_max(n_max)
    if not theta > 0:
        raise DomainError(f"theta must be positive, got {theta}")

    n = np.arange(n_max + 1)
    probs = -math.expm1(-theta) * np.exp(-theta * n)
    weight = float(probs.sum())
    return PhotonDensity(np.diag(probs / weight), discarded_weight=max(0.0, 1.0 - weight))


def displacement_matrix(alpha: complex, n_max: int) -> np.ndarray:
    """Fock-basis matrix of D(alpha) restricted to [0, n_max].

    This is the scattering kernel evaluated with g_Qu replaced by alpha.
    """
    _check_n_max(n_max)
    return displacement_elements(complex(alpha), n_max)


def make_displaced_fock(
    n_i: int, alpha: complex, n_max: int, allow_truncation: bool = False
) -> PhotonPure:
    """Displaced Fock state D(alpha)|n_i>, the n_i-th column of the displacement matrix."""
    _check_n_max(n_max)
    if n_i < 0 or n_i > n_max:
        raise TruncationError(f"Fock index {n_i} outside truncation [0, {n_max}]")
    if not allow_truncation and not displaced_fock_fits(n_i, alpha, n_max):
        raise TruncationError(
            f"Displaced Fock state |{n_i}, alpha={alpha}> does not fit in n_max={n_max}"
        )
    return _renormalized(displacement_column(complex(alpha), n_i, n_max))


def to_density(state: PhotonState) -> PhotonDensity:
    """Density matrix of a state; pure states become |psi><psi|."""
    if isinstance(state, PhotonDensity):
        return state
    return PhotonDensity(np.outer(state.amps, state.amps.conj()), state.discarded_weight)


def distribution(state: PhotonState) -> np.ndarray:
    """Photon-number probabilities p_n."""
    if isinstance(state, PhotonPure):
        return np.abs(state.amps) ** 2
    return np.real(np.diag(state.mat)).copy()


def normalize(state: PhotonState) -> PhotonState:
    """Rescale a state to unit norm (pure) or unit trace (mixed)."""
    if isinstance(state, PhotonPure):
        norm_squared = state.norm_squared
        if norm_squared <= 0:
            raise NumericalError("Cannot normalize a zero state")
        return PhotonPure(state.amps / math.sqrt(norm_squared), state.discarded_weight)

    trace = state.trace
    if trace <= 0:
        raise NumericalError("Cannot normalize a density matrix with non-positive trace")
    return PhotonDensity(state.mat / trace, state.discarded_weight)


def purity(state: PhotonState) -> float:
    """trace(rho^2); exactly 1 for pure states."""
    if isinstance(state, PhotonPure):
        return state.norm_squared**2
    # Hermitian: trace(rho^2) = sum |rho_ij|^2
    return float(np.sum(np.abs(state.mat) ** 2))


def mean_photon(state: PhotonState) -> float:
    """Mean photon number <n>."""
    probs = distribution(state)
    return float(np.dot(np.arange(probs.size), probs))


def expectation(state: PhotonState, operator: np.ndarray) -> complex:
    """<O> for an operator given as a matrix on the truncated space."""
    if isinstance(state, PhotonPure):
        return complex(np.vdot(state.amps, operator @ state.amps))
    return complex(np.trace(operator @ state.mat))


def annihilation(n_max: int) -> np.ndarray:
    """Truncated annihilation operator a."""
    return np.diag(np.sqrt(np.arange(1, n_max + 1)), k=1).astype(complex)


def fock_index(state: PhotonState, tol: float = 1e-10) -> Optional[int]:
    """Index n if the state is a single Fock basis state, otherwise None."""
    probs = distribution(state)
    n = int(np.argmax(probs))
    if probs[n] >= 1.0 - tol and purity(state) >= 1.0 - tol:
        return n
    return None


__all__ = [
    "PhotonPure",
    "PhotonDensity",
    "PhotonState",
    "coherent_fits",
    "displaced_fock_fits",
    "make_vacuum",
    "make_fock",
    "make_coherent",
    "thermal_theta",
    "make_thermal",
    "displacement_matrix",
    "make_displaced_fock",
    "to_density",
    "distribution",
    "normalize",
    "purity",
    "mean_photon",
    "expectation",
    "annihilation",
    "fock_index",
]
