#!/usr/bin/env python3
"""Numerical tolerances shared by the state types and channels."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Tolerance set used for validation and pruning.

    Attributes:
        norm: allowed deviation of a state's norm (or trace) from 1
        herm: allowed anti-Hermitian part of a density matrix
        psd: allowed negative eigenvalue magnitude of a density matrix
        zero_probability: branches below this probability cannot be post-selected
        band: kernel diagonals whose largest magnitude is below this are skipped
        ensemble_cutoff: eigen-weight discarded by the low-rank ensemble mode
        leakage_warning: per-step truncation leakage that triggers a log warning
    """

    norm: float = 1e-10
    herm: float = 1e-10
    psd: float = 1e-8
    zero_probability: float = 1e-14
    band: float = 1e-16
    ensemble_cutoff: float = 1e-8
    leakage_warning: float = 1e-6


DEFAULT_TOLERANCES = Tolerances()
