#!/usr/bin/env python3
"""
Multi-electron interaction chains.

Each step injects a fresh electron, scatters it off the cavity, handles
the electron (trace out, post-select or sample its energy) and optionally
lets the cavity decay before the next arrival. Every step renormalizes
and books the norm it lost to truncation as leakage.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from multiprocessing import Pool
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .analysis import fidelity, moments, summarize
from .electron import ElectronPure, ElectronSpec, Window
from .errors import (
    DomainError,
    NumericalError,
    OutOfWindowError,
    TruncationError,
    ZeroProbabilityError,
)
from .fockspace import (
    PhotonDensity,
    PhotonPure,
    PhotonState,
    distribution,
    fock_index,
    make_displaced_fock,
    make_fock,
    make_vacuum,
    purity,
    to_density,
)
from .scattering import (
    CouplingLike,
    ElectronChannel,
    ScatteringKernel,
    as_coupling,
    build_kernel,
)
from .special import log_factorial
from .tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

MEASUREMENTS = ("trace_out", "postselect", "sample")
LOSS_MODES = ("euler", "exact_damping")

# Smallest eigenvalue an Euler loss step may produce before it is flagged.
POSITIVITY_FLOOR = -1e-6


@dataclass(frozen=True)
class Measurement:
    """What happens to the electron after it leaves the cavity."""

    kind: str = "trace_out"
    k: Optional[int] = None

    def __post_init__(self) -> None:
        if self.kind not in MEASUREMENTS:
            raise DomainError(f"Unknown measurement '{self.kind}', expected one of {MEASUREMENTS}")
        if self.kind == "postselect" and self.k is None:
            raise DomainError("Post-selection needs an electron energy k")

    def to_dict(self) -> dict:
        if self.kind == "postselect":
            return {"kind": self.kind, "k": self.k}
        return {"kind": self.kind}


@dataclass(frozen=True)
class Loss:
    """Cavity decay between electrons.

    Attributes:
        dt_over_tau: electron spacing in units of the photon lifetime
        substeps: equal sub-increments for the euler rule
        mode: "euler" or "exact_damping"
    """

    dt_over_tau: float
    substeps: int = 1
    mode: str = "euler"

    def __post_init__(self) -> None:
        if self.dt_over_tau < 0:
            raise DomainError(f"dt_over_tau must be non-negative, got {self.dt_over_tau}")
        if self.substeps < 1:
            raise DomainError(f"substeps must be at least 1, got {self.substeps}")
        if self.mode not in LOSS_MODES:
            raise DomainError(f"Unknown loss mode '{self.mode}', expected one of {LOSS_MODES}")

    def to_dict(self) -> dict:
        return {"dt_over_tau": self.dt_over_tau, "substeps": self.substeps, "mode": self.mode}


@dataclass(frozen=True)
class StepPolicy:
    """Per-interaction recipe; g_qu falls back to the scenario coupling when None."""

    electron: ElectronSpec = field(default_factory=ElectronSpec)
    measurement: Measurement = field(default_factory=Measurement)
    loss: Optional[Loss] = None
    g_qu: Optional[complex] = None

    def to_dict(self) -> dict:
        out: Dict[str, Any] = {
            "electron": self.electron.to_dict(),
            "measurement": self.measurement.to_dict(),
            "loss": self.loss.to_dict() if self.loss else None,
        }
        if self.g_qu is not None:
            out["g_qu"] = [complex(self.g_qu).real, complex(self.g_qu).imag]
        return out


@dataclass(frozen=True)
class StepRecord:
    """Photon statistics after one interaction (step 0 is the initial state)."""

    step: int
    measured_k: Optional[int]
    distribution: np.ndarray
    mean_n: float
    var_n: float
    mandel_q: Optional[float]
    theta: Optional[float]
    theta_r2: Optional[float]
    eff_alpha: float
    purity: float
    leakage: float
    probability: Optional[float] = None
    expected_n: Optional[float] = None
    min_eigenvalue: Optional[float] = None


@dataclass
class Trajectory:
    """Ordered step records plus run-level metadata.

    Attributes:
        records: one record per step, starting with the initial state
        final_state: photon state after the last step
        metadata: run facts such as hitting_step, complete or fidelity
    """

    records: List[StepRecord] = field(default_factory=list)
    final_state: Optional[PhotonState] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        """Per-step values of one record field; None becomes NaN."""
        values = [getattr(record, name) for record in self.records]
        return np.array([np.nan if value is None else value for value in values], dtype=float)

    @property
    def complete(self) -> bool:
        return bool(self.metadata.get("complete", True))

    @property
    def hitting_step(self) -> Optional[int]:
        return self.metadata.get("hitting_step")

    @property
    def leakage_total(self) -> float:
        return self.records[-1].leakage if self.records else 0.0


def _record(
    step: int,
    state: PhotonState,
    measured_k: Optional[int] = None,
    probability: Optional[float] = None,
    expected_n: Optional[float] = None,
    min_eigenvalue: Optional[float] = None,
    with_fit: bool = True,
) -> StepRecord:
    probs = distribution(state)
    if with_fit:
        report = summarize(probs)
        stats = (report.mean_n, report.var_n, report.mandel_q, report.effective_theta, report.fit_r2)
    else:
        mean, var = moments(probs)
        stats = (mean, var, (var - mean) / mean if mean > 0 else None, None, None)
    mean, var, q, theta, r2 = stats
    return StepRecord(
        step=step,
        measured_k=measured_k,
        distribution=probs,
        mean_n=mean,
        var_n=var,
        mandel_q=q,
        theta=theta,
        theta_r2=r2,
        eff_alpha=math.sqrt(max(mean, 0.0)),
        purity=purity(state),
        leakage=state.discarded_weight,
        probability=probability,
        expected_n=expected_n,
        min_eigenvalue=min_eigenvalue,
    )


def _warn_leakage(lost: float, tol: Tolerances) -> None:
    if lost > tol.leakage_warning:
        logger.warning("Truncation leaked %.3g of the norm in one step; consider a larger n_max", lost)


def _channel(electron: ElectronPure, kernel: ScatteringKernel, tol: Tolerances) -> ElectronChannel:
    return ElectronChannel(electron, kernel, tol)


def _window_mask(outcomes: np.ndarray, window: Optional[Window]) -> np.ndarray:
    """Outcomes kept by an electron window; None keeps every outcome."""
    if window is None:
        return np.ones(outcomes.size, dtype=bool)
    return (outcomes >= window[0]) & (outcomes <= window[1])


def _check_window(k: int, window: Optional[Window]) -> None:
    if window is not None and not window[0] <= k <= window[1]:
        raise OutOfWindowError(f"Electron outcome k={k} outside electron window {list(window)}")


def _renormalized_density(mat: np.ndarray, carried: float, tol: Tolerances) -> PhotonDensity:
    trace = float(np.trace(mat).real)
    if trace <= 0:
        raise NumericalError("Channel output has no weight inside the truncation window")
    lost = max(0.0, 1.0 - trace)
    _warn_leakage(lost, tol)
    mat = 0.5 * (mat + mat.conj().T)
    return PhotonDensity(mat / trace, discarded_weight=carried + lost)


def step_traceout(
    rho: PhotonState,
    electron: ElectronPure,
    kernel: ScatteringKernel,
    ensemble: bool = False,
    tol: Tolerances = DEFAULT_TOLERANCES,
    window: Optional[Window] = None,
) -> PhotonDensity:
    """Interact and discard the electron: rho' = sum_j E_j rho E_j^dagger, renormalized.

    With an electron window only outcomes j inside it enter the sum; the
    weight of the others is booked as leakage.
    """
    channel = _channel(electron, kernel, tol)
    keep = _window_mask(channel.outcomes, window)
    if isinstance(rho, PhotonPure):
        table = channel.joint(rho).amps[keep]
        mat = table.T @ table.conj()
    elif keep.all():
        mat = channel.apply(rho, ensemble=ensemble)
    else:
        mat = np.zeros_like(rho.mat)
        for j in channel.outcomes[keep]:
            mat += channel.branch(rho, int(j))
    return _renormalized_density(mat, rho.discarded_weight, tol)


def _pure_outcomes(
    state: PhotonPure, electron: ElectronPure, kernel: ScatteringKernel, tol: Tolerances
) -> Tuple[np.ndarray, np.ndarray]:
    """Outcome indices and joint table rows S(psi_e (x) psi_p) for a pure photon."""
    support = np.flatnonzero(state.amps)
    if support.size == 1:
        fock = int(support[0])
        # |N>: E_j|N> has entries psi_e(j + n - N) s[n, N]
        column = kernel.s[:, fock] * state.amps[fock]
        n = np.arange(kernel.n_max + 1)
        lo = electron.k_lo - (kernel.n_max - fock)
        hi = electron.k_hi + fock
        outcomes = np.arange(lo, hi + 1)
        table = np.zeros((outcomes.size, n.size), dtype=complex)
        for offset, amp in zip(range(electron.k_lo, electron.k_hi + 1), electron.amps):
            if amp == 0:
                continue
            rows = offset - (n - fock) - lo
            table[rows, n] += amp * column
        return outcomes, table

    joint = _channel(electron, kernel, tol).joint(state)
    return joint.ks, joint.amps


def _outcome_index(outcomes: np.ndarray, k: int) -> int:
    if not outcomes[0] <= k <= outcomes[-1]:
        raise OutOfWindowError(
            f"Electron outcome k={k} outside window [{outcomes[0]}, {outcomes[-1]}]"
        )
    return int(k - outcomes[0])


def _collapse_pure(
    row: np.ndarray, carried: float, lost: float, k: int, tol: Tolerances
) -> Tuple[PhotonPure, float]:
    probability = float(np.vdot(row, row).real)
    if probability < tol.zero_probability:
        raise ZeroProbabilityError(f"Electron outcome k={k} has probability {probability:.3g}")
    return PhotonPure(row / math.sqrt(probability), discarded_weight=carried + lost), probability


def step_postselect(
    rho: PhotonState,
    electron: ElectronPure,
    kernel: ScatteringKernel,
    k: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
    window: Optional[Window] = None,
) -> Tuple[PhotonState, float]:
    """Keep only electron outcome k: (E_k rho E_k^dagger / p, p).

    Pure inputs stay pure.
    """
    _check_window(k, window)
    if isinstance(rho, PhotonPure):
        outcomes, table = _pure_outcomes(rho, electron, kernel, tol)
        index = _outcome_index(outcomes, k)
        lost = max(0.0, 1.0 - float(np.sum(np.abs(table) ** 2)))
        return _collapse_pure(table[index], rho.discarded_weight, lost, k, tol)

    channel = _channel(electron, kernel, tol)
    _outcome_index(channel.outcomes, k)
    branch = channel.branch(rho, k)
    probability = float(np.trace(branch).real)
    if probability < tol.zero_probability:
        raise ZeroProbabilityError(f"Electron outcome k={k} has probability {probability:.3g}")
    branch = 0.5 * (branch + branch.conj().T)
    return PhotonDensity(branch / probability, discarded_weight=rho.discarded_weight), probability


def step_sample(
    rho: PhotonState,
    electron: ElectronPure,
    kernel: ScatteringKernel,
    rng: np.random.Generator,
    tol: Tolerances = DEFAULT_TOLERANCES,
    window: Optional[Window] = None,
) -> Tuple[PhotonState, int]:
    """Measure the electron energy: draw k from p_k and collapse onto it.

    Outcomes outside the electron window are never drawn; their weight is
    booked as leakage.
    """
    if isinstance(rho, PhotonPure):
        outcomes, table = _pure_outcomes(rho, electron, kernel, tol)
        probs = np.sum(np.abs(table) ** 2, axis=1) * _window_mask(outcomes, window)
        total = float(probs.sum())
        if total < tol.zero_probability:
            raise ZeroProbabilityError("No electron outcome inside the electron window")
        index = int(rng.choice(probs.size, p=probs / total))
        k = int(outcomes[index])
        state, _ = _collapse_pure(table[index], rho.discarded_weight, max(0.0, 1.0 - total), k, tol)
        return state, k

    channel = _channel(electron, kernel, tol)
    probs = channel.probabilities(rho) * _window_mask(channel.outcomes, window)
    total = float(probs.sum())
    if total < tol.zero_probability:
        raise ZeroProbabilityError("No electron outcome inside the electron window")
    lost = max(0.0, 1.0 - total)
    _warn_leakage(lost, tol)
    index = int(rng.choice(probs.size, p=probs / total))
    k = int(channel.outcomes[index])
    branch = channel.branch(rho, k)
    probability = float(np.trace(branch).real)
    branch = 0.5 * (branch + branch.conj().T)
    return PhotonDensity(branch / probability, discarded_weight=rho.discarded_weight + lost), k


def _euler_increment(mat: np.ndarray, rate: float) -> np.ndarray:
    # rho - rate (n rho + rho n - 2 a rho a^dagger), elementwise in the Fock basis
    dim = mat.shape[0]
    n = np.arange(dim)
    out = mat - rate * (n[:, None] + n[None, :]) * mat
    root = np.sqrt(n[1:])
    out[:-1, :-1] += 2.0 * rate * root[:, None] * root[None, :] * mat[1:, 1:]
    return out


def _exact_damping(mat: np.ndarray, dt_over_tau: float) -> np.ndarray:
    # photon survival eta = e^{-2 dt/tau}; rho'[i, j] = sum_l sqrt(C(i+l,l) C(j+l,l)) eta^{(i+j)/2} (1-eta)^l rho[i+l, j+l]
    dim = mat.shape[0]
    n = np.arange(dim)
    out = np.zeros_like(mat)
    log_eta = -2.0 * dt_over_tau
    log_decay = math.log(-math.expm1(log_eta))
    for jumps in range(dim):
        top = dim - jumps
        idx = n[:top]
        log_binom = log_factorial(idx + jumps) - log_factorial(idx) - log_factorial(jumps)
        half = 0.5 * log_binom + 0.5 * idx * log_eta + 0.5 * jumps * log_decay
        weight = np.exp(half[:, None] + half[None, :])
        out[:top, :top] += weight * mat[jumps:, jumps:]
    return out


def _lindblad(
    rho: PhotonState, dt_over_tau: float, substeps: int, mode: str
) -> Tuple[PhotonDensity, Optional[float]]:
    density = to_density(rho)
    if dt_over_tau < 0:
        raise DomainError(f"dt_over_tau must be non-negative, got {dt_over_tau}")
    if substeps < 1:
        raise DomainError(f"substeps must be at least 1, got {substeps}")
    if dt_over_tau == 0:
        return density, None

    match mode:
        case "euler":
            mat = density.mat
            for _ in range(substeps):
                mat = _euler_increment(mat, dt_over_tau / substeps)
            mat = 0.5 * (mat + mat.conj().T)
            smallest = float(np.linalg.eigvalsh(mat).min())
            if smallest < POSITIVITY_FLOOR:
                logger.warning(
                    "Euler loss step produced eigenvalue %.3g; use more substeps or exact_damping",
                    smallest,
                )
        case "exact_damping":
            mat = _exact_damping(density.mat, dt_over_tau)
            mat = 0.5 * (mat + mat.conj().T)
            smallest = None
        case _:
            raise DomainError(f"Unknown loss mode '{mode}', expected one of {LOSS_MODES}")

    trace = float(np.trace(mat).real)
    return PhotonDensity(mat / trace, discarded_weight=density.discarded_weight), smallest


def lindblad_step(
    rho: PhotonState, dt_over_tau: float, substeps: int = 1, mode: str = "euler"
) -> PhotonDensity:
    """Cavity decay rho -> rho - (dt/tau)(a^dagger a rho + rho a^dagger a - 2 a rho a^dagger).

    Args:
        rho: photon state before decay
        dt_over_tau: time since the last electron in units of the photon lifetime
        substeps: number of equal euler sub-increments
        mode: "euler" applies the rule literally; "exact_damping" applies the
            amplitude-damping channel that multiplies <n> by e^{-2 dt/tau}

    Returns:
        The decayed state; trace is preserved in both modes
    """
    state, _ = _lindblad(rho, dt_over_tau, substeps, mode)
    return state


class KernelCache:
    """Kernels keyed by coupling, built on first use."""

    def __init__(self, n_max: int, tol: Tolerances = DEFAULT_TOLERANCES):
        self.n_max = n_max
        self.tol = tol
        self._kernels: Dict[complex, ScatteringKernel] = {}

    def get(self, g: CouplingLike) -> ScatteringKernel:
        coupling = as_coupling(g)
        if coupling.g_qu not in self._kernels:
            self._kernels[coupling.g_qu] = build_kernel(coupling, self.n_max, self.tol)
        return self._kernels[coupling.g_qu]


def run_scenario(
    initial: PhotonState,
    policies: Sequence[StepPolicy],
    n_steps: int,
    rng: Optional[np.random.Generator] = None,
    coupling: Optional[CouplingLike] = None,
    ensemble: bool = False,
    tol: Tolerances = DEFAULT_TOLERANCES,
    window: Optional[Window] = None,
) -> Trajectory:
    """Run n_steps interactions, cycling through the policy sequence.

    Args:
        initial: starting photon state
        policies: step recipes, used in order and repeated
        n_steps: number of electrons
        rng: seeded generator; required when any policy samples
        coupling: g_Qu for policies that do not carry their own
        ensemble: use the low-rank ensemble mode for mixed-state trace-out
        tol: tolerance set
        window: electron window [k_lo, k_hi] bounding the outcomes; None keeps all

    Returns:
        Trajectory with the initial record followed by one record per step
    """
    if n_steps < 0:
        raise DomainError(f"n_steps must be non-negative, got {n_steps}")
    if n_steps > 0 and not policies:
        raise DomainError("A scenario with steps needs at least one policy")
    if rng is None and any(p.measurement.kind == "sample" for p in policies):
        raise DomainError("Sampling policies need a seeded random generator")

    kernels = KernelCache(initial.n_max, tol)
    electrons: Dict[ElectronSpec, ElectronPure] = {}
    state = initial
    trajectory = Trajectory(records=[_record(0, state)])

    for step in range(1, n_steps + 1):
        policy = policies[(step - 1) % len(policies)]
        g = policy.g_qu if policy.g_qu is not None else coupling
        if g is None:
            raise DomainError(f"No coupling given for step {step}")
        kernel = kernels.get(g)
        if policy.electron not in electrons:
            electrons[policy.electron] = policy.electron.build()
        electron = electrons[policy.electron]

        measured_k: Optional[int] = None
        probability: Optional[float] = None
        match policy.measurement.kind:
            case "trace_out":
                state = step_traceout(
                    state, electron, kernel, ensemble=ensemble, tol=tol, window=window
                )
            case "postselect":
                measured_k = policy.measurement.k
                state, probability = step_postselect(
                    state, electron, kernel, measured_k, tol=tol, window=window
                )
            case "sample":
                state, measured_k = step_sample(state, electron, kernel, rng, tol=tol, window=window)

        min_eigenvalue = None
        if policy.loss is not None:
            state, min_eigenvalue = _lindblad(
                state, policy.loss.dt_over_tau, policy.loss.substeps, policy.loss.mode
            )

        trajectory.records.append(
            _record(step, state, measured_k, probability, min_eigenvalue=min_eigenvalue)
        )
        logger.debug("Step %d: <n>=%.6g", step, trajectory.records[-1].mean_n)

    trajectory.final_state = state
    trajectory.metadata["steps"] = n_steps
    return trajectory


def _fock_reach(n: int, g: CouplingLike) -> float:
    # highest photon number reached from |n> within 8 standard deviations
    return n + 8.0 * abs(as_coupling(g)) * math.sqrt(2 * n + 1)


def fock_builder_n_max(g: CouplingLike, n_goal: int) -> int:
    """Default truncation for building |n_goal>: reach of the goal column plus 8."""
    return int(math.ceil(_fock_reach(n_goal, g))) + 8


def run_fock_builder(
    g: CouplingLike,
    n_goal: int,
    n_max: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    max_steps: int = 10_000,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Trajectory:
    """Build |n_goal> from vacuum with measured delta electrons.

    Stops at the first step whose Fock index reaches n_goal. The state is
    checked to be a Fock basis state after every step.
    """
    coupling = as_coupling(g)
    if n_goal < 0:
        raise DomainError(f"n_goal must be non-negative, got {n_goal}")
    if n_max is None:
        n_max = fock_builder_n_max(coupling, n_goal)
    if n_goal > 0 and _fock_reach(n_goal - 1, coupling) > n_max:
        raise TruncationError(f"n_goal={n_goal} is too close to the truncation n_max={n_max}")
    if rng is None:
        raise DomainError("The Fock builder needs a seeded random generator")

    kernel = build_kernel(coupling, n_max, tol)
    electron = ElectronSpec.delta(0).build()
    gain = abs(coupling) ** 2

    state: PhotonState = make_vacuum(n_max)
    trajectory = Trajectory(records=[_record(0, state, expected_n=0.0, with_fit=False)])
    current = 0
    step = 0
    while current < n_goal and step < max_steps:
        step += 1
        state, k = step_sample(state, electron, kernel, rng, tol)
        index = fock_index(state)
        if index is None:
            raise NumericalError(f"State left the Fock basis at step {step}")
        current = index
        trajectory.records.append(
            _record(step, state, measured_k=k, expected_n=step * gain, with_fit=False)
        )

    complete = current >= n_goal
    trajectory.final_state = state
    trajectory.metadata.update(
        {
            "n_goal": n_goal,
            "hitting_step": step if complete else None,
            "final_n": current,
            "complete": complete,
        }
    )
    if not complete:
        logger.warning("Fock builder stopped at n=%d after %d steps (goal %d)", current, step, n_goal)
    return trajectory


def _fock_builder_run(
    seed: int, g: complex, n_goal: int, n_max: Optional[int], max_steps: int
) -> Trajectory:
    return run_fock_builder(g, n_goal, n_max, np.random.default_rng(seed), max_steps)


def run_fock_builder_ensemble(
    g: CouplingLike,
    n_goal: int,
    runs: int,
    base_seed: int,
    n_max: Optional[int] = None,
    max_steps: int = 10_000,
    jobs: int = 1,
) -> List[Trajectory]:
    """Independent builder runs seeded base_seed + run_index, in run order."""
    seeds = [base_seed + index for index in range(runs)]
    worker = partial(
        _fock_builder_run,
        g=as_coupling(g).g_qu,
        n_goal=n_goal,
        n_max=n_max,
        max_steps=max_steps,
    )
    if jobs > 1:
        with Pool(processes=jobs) as pool:
            return pool.map(worker, seeds)
    return [worker(seed) for seed in seeds]


def displaced_fock_n_max(n_i: int, alpha: complex, g: CouplingLike) -> int:
    """Truncation for a displaced Fock target plus the kernel's edge margin."""
    magnitude = abs(alpha)
    reach = n_i + magnitude**2 + 8.0 * magnitude * math.sqrt(2 * n_i + 1)
    margin = 8.0 * abs(as_coupling(g)) * (math.sqrt(reach) + 1.0)
    return int(math.ceil(reach + margin))


def run_displaced_fock(
    n_i: int,
    g: CouplingLike,
    beta: complex,
    K: int,
    K_prime: int,
    n_steps: int,
    n_max: Optional[int] = None,
    ensemble: bool = False,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> Trajectory:
    """Trace-out chain of comb electrons acting on |n_i>.

    The final state is compared with D(M beta g)|n_i> and the fidelity is
    stored in the trajectory metadata.
    """
    coupling = as_coupling(g)
    alpha = n_steps * complex(beta) * coupling.g_qu
    required = displaced_fock_n_max(n_i, alpha, coupling)
    if n_max is None:
        n_max = required
    elif n_max < required:
        raise TruncationError(
            f"n_max={n_max} is too small for |{n_i}, alpha={alpha:.4g}>; need {required}"
        )

    policy = StepPolicy(electron=ElectronSpec.comb(K, K_prime, beta))
    trajectory = run_scenario(
        make_fock(n_i, n_max), [policy], n_steps, coupling=coupling, ensemble=ensemble, tol=tol
    )
    target = make_displaced_fock(n_i, alpha, n_max, allow_truncation=True)
    trajectory.metadata.update(
        {
            "n_i": n_i,
            "alpha": [alpha.real, alpha.imag],
            "fidelity": fidelity(trajectory.final_state, target),
            "target_distribution": distribution(target),
        }
    )
    return trajectory


def detect_thermal_convergence(
    trajectory: Trajectory, rel_tol: float = 0.02, window: int = 100
) -> Optional[int]:
    """First step from which Mandel Q stays within rel_tol of <n> for `window` steps."""
    q = trajectory.column("mandel_q")
    mean = trajectory.column("mean_n")
    with np.errstate(invalid="ignore"):
        close = np.abs(q - mean) <= rel_tol * mean
    run = 0
    for index, ok in enumerate(close):
        run = run + 1 if ok else 0
        if run >= window:
            return trajectory.records[index - window + 1].step
    return None


__all__ = [
    "Measurement",
    "Loss",
    "StepPolicy",
    "StepRecord",
    "Trajectory",
    "step_traceout",
    "step_postselect",
    "step_sample",
    "lindblad_step",
    "KernelCache",
    "run_scenario",
    "fock_builder_n_max",
    "run_fock_builder",
    "run_fock_builder_ensemble",
    "displaced_fock_n_max",
    "run_displaced_fock",
    "detect_thermal_convergence",
]
