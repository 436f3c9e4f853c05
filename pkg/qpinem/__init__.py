"""
qpinem - Quantum free-electron / cavity-photon interaction simulator.

This package simulates electrons scattering off a single quantized cavity
mode on truncated Fock and electron-energy ladders: post-selected photon
states, stochastic Fock-state building, thermalization by trace-out and
displacement by electron energy combs.
"""

__version__ = "0.1.0"
__author__ = "qpinem Contributors"

from .analysis import fidelity, mandel_q, moments, peak_count, summarize
from .chain import (
    Loss,
    Measurement,
    StepPolicy,
    Trajectory,
    lindblad_step,
    run_displaced_fock,
    run_fock_builder,
    run_scenario,
    step_postselect,
    step_sample,
    step_traceout,
)
from .electron import ElectronSpec, make_comb, make_delta
from .errors import ConfigError, NumericalError, QpinemError, TruncationError
from .fockspace import (
    PhotonDensity,
    PhotonPure,
    make_coherent,
    make_displaced_fock,
    make_fock,
    make_thermal,
    make_vacuum,
)
from .scattering import Coupling, JointPure, build_kernel, compute_g_qu, evolve_pure

__all__ = [
    "__version__",
    "Coupling",
    "ConfigError",
    "ElectronSpec",
    "JointPure",
    "Loss",
    "Measurement",
    "NumericalError",
    "PhotonDensity",
    "PhotonPure",
    "QpinemError",
    "StepPolicy",
    "Trajectory",
    "TruncationError",
    "build_kernel",
    "compute_g_qu",
    "evolve_pure",
    "fidelity",
    "lindblad_step",
    "make_coherent",
    "make_comb",
    "make_delta",
    "make_displaced_fock",
    "make_fock",
    "make_thermal",
    "make_vacuum",
    "mandel_q",
    "moments",
    "peak_count",
    "run_displaced_fock",
    "run_fock_builder",
    "run_scenario",
    "step_postselect",
    "step_sample",
    "step_traceout",
    "summarize",
]
