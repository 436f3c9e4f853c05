#!/usr/bin/env python3
"""
Electron-photon scattering: kernel, joint evolution and photon channels.

The scattering operator S = exp(g b a^dagger - g* b^dagger a) conserves
k + n, so in the product basis it acts through a single photon-space
matrix s[n, n'] = <n|D(g)|n'> together with an electron shift of n' - n.
Everything here is built on the diagonals ("bands") of that matrix.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Tuple, Union

import numpy as np
from scipy import constants
from scipy.integrate import trapezoid

from .electron import ElectronPure, Window, embed
from .errors import (
    DomainError,
    OutOfWindowError,
    TruncationError,
    ZeroProbabilityError,
)
from .fockspace import PhotonDensity, PhotonPure
from .special import (
    displacement_column,
    displacement_diagonal,
    displacement_element,
    displacement_elements,
    log_coherent_amplitudes,
)
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Coupling:
    """Dimensionless quantum coupling g_Qu of one electron pass."""

    g_qu: complex

    def __post_init__(self) -> None:
        g_qu = complex(self.g_qu)
        if not (math.isfinite(g_qu.real) and math.isfinite(g_qu.imag)):
            raise DomainError(f"Coupling must be finite, got {g_qu}")
        object.__setattr__(self, "g_qu", g_qu)

    def __abs__(self) -> float:
        return abs(self.g_qu)

    def conventional(self, alpha: complex) -> complex:
        """Semiclassical PINEM strength g = g_Qu |alpha|."""
        return self.g_qu * abs(alpha)

    @classmethod
    def from_conventional(cls, g: complex, alpha: complex) -> "Coupling":
        if abs(alpha) == 0:
            raise DomainError("Conventional coupling is undefined for an empty cavity")
        return cls(complex(g) / abs(alpha))


CouplingLike = Union[Coupling, complex, float]


def as_coupling(g: CouplingLike) -> Coupling:
    return g if isinstance(g, Coupling) else Coupling(complex(g))


def interior_limit(g: CouplingLike, n_max: int) -> int:
    """Largest Fock index whose kernel column is unaffected by truncation."""
    magnitude = abs(as_coupling(g))
    return n_max - math.ceil(8.0 * magnitude * (math.sqrt(n_max) + 1.0))


@dataclass(frozen=True, eq=False)
class ScatteringKernel:
    """Photon-space matrix s[n, n'] of the scattering operator.

    Attributes:
        coupling: the coupling the kernel was built for
        n_max: photon truncation index
        s: dense (n_max+1) x (n_max+1) matrix
        band_tol: diagonals whose magnitude never exceeds this are skipped
        diagnostics: column-norm deviation and band extent
    """

    coupling: Coupling
    n_max: int
    s: np.ndarray
    band_tol: float = DEFAULT_TOLERANCES.band
    diagnostics: Dict[str, float] = field(default_factory=dict)
    bands: List[Tuple[int, np.ndarray]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        s = np.array(self.s, dtype=complex)
        s.setflags(write=False)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "bands", self._extract_bands(s))

    def _extract_bands(self, s: np.ndarray) -> List[Tuple[int, np.ndarray]]:
        # bands hold t_a[n] = s[n, n - a], indexed by the output photon number n
        dim = self.n_max + 1
        bands = []
        for shift in range(-self.n_max, self.n_max + 1):
            values = np.diagonal(s, offset=-shift)
            if values.size == 0 or np.max(np.abs(values)) <= self.band_tol:
                continue
            target = np.zeros(dim, dtype=complex)
            if shift >= 0:
                target[shift:] = values
            else:
                target[: dim + shift] = values
            target.setflags(write=False)
            bands.append((shift, target))
        return bands

    @property
    def shifts(self) -> List[int]:
        return [shift for shift, _ in self.bands]

    @property
    def interior(self) -> int:
        return interior_limit(self.coupling, self.n_max)

    def unitarity_defect(self) -> float:
        """max |(s^dagger s - I)[n', n'']| over the interior block."""
        limit = self.interior
        if limit < 0:
            return float("nan")
        block = self.s[:, : limit + 1]
        gram = block.conj().T @ block
        return float(np.max(np.abs(gram - np.eye(limit + 1))))


def kernel_element(g: CouplingLike, n: int, n_prime: int) -> complex:
    """s[n, n'] = <n|D(g)|n'>, evaluated on its own."""
    return displacement_element(as_coupling(g).g_qu, n, n_prime)


def build_kernel(
    g: CouplingLike, n_max: int, tol: Tolerances = DEFAULT_TOLERANCES
) -> ScatteringKernel:
    """Build the full kernel block for n, n' in [0, n_max].

    Args:
        g: coupling g_Qu
        n_max: photon truncation index
        tol: tolerance set; tol.band sets which diagonals are kept

    Returns:
        The kernel with column-norm diagnostics attached
    """
    if n_max < 0:
        raise TruncationError(f"n_max must be non-negative, got {n_max}")
    coupling = as_coupling(g)
    s = displacement_elements(coupling.g_qu, n_max)

    limit = interior_limit(coupling, n_max)
    column_norms = np.sum(np.abs(s) ** 2, axis=0)
    defect = float(np.max(np.abs(column_norms[: limit + 1] - 1.0))) if limit >= 0 else float("nan")
    kernel = ScatteringKernel(coupling, n_max, s, band_tol=tol.band)
    kernel.diagnostics.update(
        {
            "column_norm_defect": defect,
            "interior": float(limit),
            "band_lo": float(min(kernel.shifts)),
            "band_hi": float(max(kernel.shifts)),
        }
    )
    logger.debug(
        "Kernel g=%s n_max=%d: %d bands, interior column defect %.3g",
        coupling.g_qu,
        n_max,
        len(kernel.bands),
        defect,
    )
    return kernel


@dataclass(frozen=True, eq=False)
class JointPure:
    """Joint electron-photon amplitudes c[k, n] on [k_lo, k_hi] x [0, n_max].

    Attributes:
        k_lo: lowest electron index
        k_hi: highest electron index
        amps: table with rows k and columns n
        leakage: squared norm lost past either window so far
    """

    k_lo: int
    k_hi: int
    amps: np.ndarray
    leakage: float = 0.0

    def __post_init__(self) -> None:
        amps = np.array(self.amps, dtype=complex)
        if amps.ndim != 2 or amps.shape[0] != self.k_hi - self.k_lo + 1 or amps.shape[1] == 0:
            raise ValueError(
                f"Joint table shape {amps.shape} does not match window [{self.k_lo}, {self.k_hi}]"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amps", amps)

    @classmethod
    def product(cls, electron: ElectronPure, photon: PhotonPure) -> "JointPure":
        """|psi_e> (x) |psi_p>."""
        return cls(
            electron.k_lo,
            electron.k_hi,
            np.outer(electron.amps, photon.amps),
            leakage=electron.leakage + photon.discarded_weight,
        )

    @property
    def n_max(self) -> int:
        return self.amps.shape[1] - 1

    @property
    def window(self) -> Window:
        return (self.k_lo, self.k_hi)

    @property
    def ks(self) -> np.ndarray:
        return np.arange(self.k_lo, self.k_hi + 1)

    @property
    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.amps) ** 2))

    def probabilities(self) -> np.ndarray:
        """|c[k, n]|^2 table."""
        return np.abs(self.amps) ** 2

    def electron_marginal(self) -> np.ndarray:
        """P(k), the electron energy spectrum."""
        return np.sum(self.probabilities(), axis=1)

    def photon_distribution(self) -> np.ndarray:
        return np.sum(self.probabilities(), axis=0)

    def photon_marginal(self) -> PhotonDensity:
        """Reduced photon state rho[n, m] = sum_k c[k, n] c*[k, m] (not renormalized)."""
        return PhotonDensity(self.amps.T @ self.amps.conj(), discarded_weight=self.leakage)

    def slice(self, k: int, tol: Tolerances = DEFAULT_TOLERANCES) -> Tuple[PhotonPure, float]:
        """Photon state post-selected on electron energy k, with its probability."""
        if not self.k_lo <= k <= self.k_hi:
            raise OutOfWindowError(f"k={k} outside joint window [{self.k_lo}, {self.k_hi}]")
        row = self.amps[k - self.k_lo]
        probability = float(np.vdot(row, row).real)
        if probability < tol.zero_probability:
            raise ZeroProbabilityError(f"Electron outcome k={k} has probability {probability:.3g}")
        return PhotonPure(row / math.sqrt(probability)), probability


def evolve_pure(state: JointPure, kernel: ScatteringKernel) -> JointPure:
    """Apply S to a joint pure state: c_f[k, n] = sum_n' c_i[k+n-n', n'] s[n, n'].

    The output keeps the input windows. Amplitude that would land outside
    them is dropped and added to the leakage; the table is not renormalized.
    """
    if state.n_max != kernel.n_max:
        raise TruncationError(
            f"Joint state truncation {state.n_max} does not match kernel truncation {kernel.n_max}"
        )
    rows, dim = state.amps.shape
    source = state.amps
    out = np.zeros_like(source)

    for shift, band in kernel.bands:
        # photon gain `shift` pairs with electron index change -shift
        if abs(shift) >= rows or abs(shift) >= dim:
            continue
        if shift >= 0:
            out[: rows - shift, shift:] += source[shift:, : dim - shift] * band[shift:]
        else:
            out[-shift:, : dim + shift] += source[: rows + shift, -shift:] * band[: dim + shift]

    before = state.norm_squared
    after = float(np.sum(np.abs(out) ** 2))
    lost = max(0.0, before - after)
    return JointPure(state.k_lo, state.k_hi, out, leakage=state.leakage + lost)


def _autocorrelation(amps: np.ndarray, lag: int) -> complex:
    # R(d) = sum_k psi(k) psi*(k+d)
    size = amps.size
    if abs(lag) >= size:
        return 0j
    if lag >= 0:
        return complex(np.vdot(amps[lag:], amps[: size - lag]))
    return complex(np.conj(np.vdot(amps[-lag:], amps[: size + lag])))


class ElectronChannel:
    """Photon channel induced by one electron pass.

    Kraus operator for electron outcome j: E_j[n, n'] = s[n, n'] psi_e(j + n - n').
    """

    def __init__(
        self,
        electron: ElectronPure,
        kernel: ScatteringKernel,
        tol: Tolerances = DEFAULT_TOLERANCES,
    ):
        self.electron = electron
        self.kernel = kernel
        self.tol = tol
        shifts = kernel.shifts
        # outcome j = k_e - a for electron k_e and photon gain a
        self.outcome_window: Window = (electron.k_lo - max(shifts), electron.k_hi - min(shifts))

        lags = range(-(electron.amps.size - 1), electron.amps.size)
        self._correlation = {lag: _autocorrelation(electron.amps, lag) for lag in lags}

    @property
    def outcomes(self) -> np.ndarray:
        lo, hi = self.outcome_window
        return np.arange(lo, hi + 1)

    def kraus(self, j: int) -> np.ndarray:
        """Dense Kraus operator E_j."""
        dim = self.kernel.n_max + 1
        op = np.zeros((dim, dim), dtype=complex)
        rows = np.arange(dim)
        for shift, band in self.kernel.bands:
            weight = self.electron.amplitude(j + shift)
            if weight == 0:
                continue
            valid = (rows - shift >= 0) & (rows - shift < dim)
            op[rows[valid], rows[valid] - shift] = weight * band[valid]
        return op

    def kraus_operators(self) -> Dict[int, np.ndarray]:
        """All nonzero Kraus operators keyed by electron outcome, ascending."""
        operators = {}
        for j in self.outcomes:
            op = self.kraus(int(j))
            if np.any(op):
                operators[int(j)] = op
        return operators

    def _band_gram(self, mat: np.ndarray) -> np.ndarray:
        # T[a, b] = sum_n t_a[n] rho[n-a, n-b] conj(t_b[n])
        dim = mat.shape[0]
        n = np.arange(dim)
        bands = self.kernel.bands
        gram = np.zeros((len(bands), len(bands)), dtype=complex)
        for i, (a, t_a) in enumerate(bands):
            for j, (b, t_b) in enumerate(bands):
                valid = (n - a >= 0) & (n - a < dim) & (n - b >= 0) & (n - b < dim)
                if not valid.any():
                    continue
                nv = n[valid]
                gram[i, j] = np.sum(t_a[nv] * mat[nv - a, nv - b] * np.conj(t_b[nv]))
        return gram

    def probabilities(self, rho: PhotonDensity) -> np.ndarray:
        """p_j = trace(E_j rho E_j^dagger) over the outcome window."""
        self._check(rho.n_max)
        gram = self._band_gram(rho.mat)
        shifts = np.array(self.kernel.shifts)
        weights = np.array(
            [[self.electron.amplitude(int(j + a)) for a in shifts] for j in self.outcomes]
        )
        probs = np.einsum("ja,ab,jb->j", weights, gram, weights.conj()).real
        return np.clip(probs, 0.0, None)

    def branch(self, rho: PhotonDensity, j: int) -> np.ndarray:
        """Unnormalized E_j rho E_j^dagger."""
        self._check(rho.n_max)
        op = self.kraus(j)
        return op @ rho.mat @ op.conj().T

    def joint(self, photon: PhotonPure) -> JointPure:
        """S (psi_e (x) psi_p) over the full outcome window."""
        self._check(photon.n_max)
        electron = embed(self.electron, self.outcome_window)
        return evolve_pure(JointPure.product(electron, photon), self.kernel)

    def apply(self, rho: PhotonDensity, ensemble: bool = False) -> np.ndarray:
        """Trace-out channel sum_j E_j rho E_j^dagger, unnormalized.

        Args:
            rho: input photon state
            ensemble: evolve the dominant eigenvectors of rho as pure states
                instead of applying the band-pair sum to the full matrix

        Returns:
            The output density matrix before renormalization
        """
        self._check(rho.n_max)
        if ensemble:
            return self._apply_ensemble(rho)

        mat = rho.mat
        dim = mat.shape[0]
        out = np.zeros_like(mat)
        for a, t_a in self.kernel.bands:
            for b, t_b in self.kernel.bands:
                weight = self._correlation.get(b - a, 0j)
                if weight == 0 or abs(a) >= dim or abs(b) >= dim:
                    continue
                rows_out = slice(max(0, a), dim + min(0, a))
                rows_in = slice(max(0, -a), dim - max(0, a))
                cols_out = slice(max(0, b), dim + min(0, b))
                cols_in = slice(max(0, -b), dim - max(0, b))
                out[rows_out, cols_out] += (
                    weight
                    * t_a[rows_out, None]
                    * mat[rows_in, cols_in]
                    * np.conj(t_b[cols_out])[None, :]
                )
        return out

    def _apply_ensemble(self, rho: PhotonDensity) -> np.ndarray:
        weights, vectors = np.linalg.eigh(rho.mat)
        order = np.argsort(weights)[::-1]
        weights = np.clip(weights[order], 0.0, None)
        vectors = vectors[:, order]

        total = float(weights.sum())
        kept = int(np.searchsorted(np.cumsum(weights), (1.0 - self.tol.ensemble_cutoff) * total)) + 1
        kept = min(kept, weights.size)
        logger.debug("Ensemble mode keeps %d of %d eigenvectors", kept, weights.size)

        out = np.zeros_like(rho.mat)
        for weight, vector in zip(weights[:kept], vectors[:, :kept].T):
            table = self.joint(PhotonPure(vector)).amps
            out += weight * (table.T @ table.conj())
        return out

    def _check(self, n_max: int) -> None:
        if n_max != self.kernel.n_max:
            raise TruncationError(
                f"Photon truncation {n_max} does not match kernel truncation {self.kernel.n_max}"
            )


def kraus_operators(electron: ElectronPure, kernel: ScatteringKernel) -> Dict[int, np.ndarray]:
    """Kraus family {E_j} of the electron-induced photon channel."""
    return ElectronChannel(electron, kernel).kraus_operators()


@dataclass(frozen=True, eq=False)
class FieldProfile:
    """Longitudinal field E_z(z) sampled along the electron path.

    Attributes:
        z: sample positions in meters, strictly increasing
        e_z: complex field samples in V/m
        omega: angular frequency in rad/s
        v: electron speed in m/s
    """

    z: np.ndarray
    e_z: np.ndarray
    omega: float
    v: float

    def __post_init__(self) -> None:
        z = np.asarray(self.z, dtype=float)
        e_z = np.asarray(self.e_z, dtype=complex)
        if z.ndim != 1 or z.size < 2:
            raise DomainError("Field profile needs at least 2 samples")
        if e_z.shape != z.shape:
            raise DomainError(f"Got {z.size} positions but {e_z.size} field samples")
        if np.any(np.diff(z) <= 0):
            raise DomainError("Field sample positions must be strictly increasing")
        if not self.omega > 0:
            raise DomainError(f"omega must be positive, got {self.omega}")
        if not self.v > 0:
            raise DomainError(f"Electron speed must be positive, got {self.v}")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "e_z", e_z)


def compute_g_qu(profile: FieldProfile) -> Coupling:
    """g_Qu = (e / hbar omega) * integral dz e^{-i omega z / v} E_z(z), trapezoidal rule.

    The mode normalization enters only through the supplied E_z samples.
    """
    magnitude = np.abs(profile.e_z)
    peak = float(magnitude.max())
    if peak == 0.0:
        return Coupling(0j)
    if max(magnitude[0], magnitude[-1]) > 1e-6 * peak:
        logger.warning(
            "Field has not decayed at the sampled endpoints (%.3g of peak); "
            "the coupling integral is cut off",
            max(magnitude[0], magnitude[-1]) / peak,
        )

    phase = np.exp(-1j * profile.omega * profile.z / profile.v)
    integral = trapezoid(phase * profile.e_z, profile.z)
    prefactor = constants.e / (constants.hbar * profile.omega)
    return Coupling(complex(prefactor * integral))


def coherent_delta_coeffs(alpha: complex, g: CouplingLike, k: int, n: int) -> complex:
    """Closed-form c[k, n] after a delta electron at k=0 meets |alpha>.

    c[k, n] = <n|D(g)|n+k> <n+k|alpha>, and zero for k + n < 0.
    """
    if n < 0 or k + n < 0:
        return 0j
    g_qu = as_coupling(g).g_qu
    amplitude = log_coherent_amplitudes(complex(alpha), np.array([k + n]))[0]
    return complex(displacement_element(g_qu, n, k + n) * amplitude)


def postselected_photon_state(
    alpha: complex,
    g: CouplingLike,
    k: int,
    n_max: int,
    allow_truncation: bool = False,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> PhotonPure:
    """Photon state heralded by electron outcome k after a delta electron meets |alpha>.

    psi_k[n] ~ <n|D(g)|n+k> <n+k|alpha>, normalized. Kernel elements with
    n + k beyond n_max are evaluated exactly, so only the heralded state
    itself is truncated.
    """
    alpha = complex(alpha)
    g_qu = as_coupling(g).g_qu
    a_abs = abs(alpha)
    if not allow_truncation and a_abs**2 + abs(k) + 8.0 * a_abs > n_max:
        raise TruncationError(
            f"Post-selected state for |alpha|^2={a_abs**2:.4g}, k={k} does not fit in n_max={n_max}"
        )

    amps = np.zeros(n_max + 1, dtype=complex)
    first = max(0, -k)
    if first <= n_max:
        n = np.arange(first, n_max + 1)
        # the diagonal n - n' = -k, indexed by min(n, n + k)
        kernel = displacement_diagonal(g_qu, -k, n.size)
        amps[first:] = kernel * log_coherent_amplitudes(alpha, n + k)

    weight = float(np.vdot(amps, amps).real)
    # weight is the heralding probability P(k) up to truncation
    if weight < tol.zero_probability:
        raise ZeroProbabilityError(f"Electron outcome k={k} is not reachable for g={g_qu}")
    return PhotonPure(amps / math.sqrt(weight))


def fock_transition_prob(n_from: int, n_to: int, g: CouplingLike) -> float:
    """P(n_from -> n_to) = |<n_to|D(g)|n_from>|^2 for a measured delta electron."""
    if n_from < 0 or n_to < 0:
        raise DomainError("Fock indices must be non-negative")
    g_qu = as_coupling(g).g_qu
    if g_qu == 0:
        return float(n_from == n_to)
    return abs(displacement_element(g_qu, n_to, n_from)) ** 2


def fock_gain_distribution(n_from: int, g: CouplingLike, n_max: int) -> np.ndarray:
    """P(n_from -> n) for n in [0, n_max]."""
    if n_from < 0:
        raise DomainError("Fock indices must be non-negative")
    if n_from > n_max:
        raise TruncationError(f"Fock index {n_from} outside truncation [0, {n_max}]")
    return np.abs(displacement_column(as_coupling(g).g_qu, n_from, n_max)) ** 2


__all__ = [
    "Coupling",
    "CouplingLike",
    "as_coupling",
    "interior_limit",
    "ScatteringKernel",
    "kernel_element",
    "build_kernel",
    "JointPure",
    "evolve_pure",
    "ElectronChannel",
    "kraus_operators",
    "FieldProfile",
    "compute_g_qu",
    "coherent_delta_coeffs",
    "postselected_photon_state",
    "fock_transition_prob",
    "fock_gain_distribution",
]
