#!/usr/bin/env python3

import math
import os
import sys

import numpy as np
import pytest

# Add parent directory to path to import qpinem
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from qpinem.electron import (
    ElectronPure,
    ElectronSpec,
    apply_b,
    apply_b_dagger,
    default_window,
    eigen_residual,
    embed,
    make_comb,
    make_delta,
    overlap,
)
from qpinem.errors import DomainError, OutOfWindowError


def test_make_delta():
    """A delta electron has a single unit amplitude at k0."""
    state = make_delta(0, (-8, 8))
    assert state.amplitude(0) == 1
    assert state.norm_squared == 1.0
    assert list(state.support()) == [0]

    edge = make_delta(-2, (-2, 0))
    assert edge.amps[0] == 1
    assert edge.amplitude(-2) == 1

    with pytest.raises(OutOfWindowError):
        make_delta(3, (-2, 2))


def test_delta_number_operator():
    """b^dagger b acts as the identity on the ladder."""
    state = make_delta(0, (-3, 3))
    assert overlap(state, apply_b_dagger(apply_b(state))) == pytest.approx(1.0)


def test_make_comb():
    """Comb amplitudes are beta^k / sqrt(K+K'+1)."""
    single = make_comb(0, 0, 1)
    np.testing.assert_allclose(single.amps, make_delta(0).amps)

    comb = make_comb(14, 15, -1j)
    assert comb.window == (-14, 15)
    np.testing.assert_allclose(np.abs(comb.amps), 1 / math.sqrt(30))
    np.testing.assert_allclose(comb.amps[1:] / comb.amps[:-1], -1j)
    assert comb.amplitude(0) == pytest.approx(1 / math.sqrt(30))
    assert comb.norm_squared == pytest.approx(1.0, abs=1e-12)


def test_make_comb_rejects_bad_input():
    """|beta| must be 1 and extents non-negative."""
    with pytest.raises(DomainError, match=r"\|beta\| = 1"):
        make_comb(2, 2, 1.1)
    with pytest.raises(DomainError):
        make_comb(-1, 2, 1)


@pytest.mark.parametrize("K, K_prime, beta", [(0, 0, 1), (5, 5, 1), (14, 15, -1j), (3, 7, np.exp(0.3j))])
def test_comb_eigen_residual(K, K_prime, beta):
    """||b comb - beta comb||^2 = 2 / (K+K'+1)."""
    comb = make_comb(K, K_prime, beta)
    assert eigen_residual(comb, beta) == pytest.approx(2 / (K + K_prime + 1), abs=1e-12)


def test_apply_b_shifts_and_leaks():
    """b lowers k by one and books what leaves the window."""
    shifted = apply_b(make_delta(0, (-2, 2)))
    assert shifted.amplitude(-1) == 1
    assert shifted.leakage == 0.0

    comb = apply_b(make_comb(5, 5, 1))
    assert comb.leakage == pytest.approx(1 / 11, abs=1e-14)
    assert comb.norm_squared == pytest.approx(10 / 11, abs=1e-14)


def test_shift_round_trip_in_interior():
    """b b^dagger is the identity for states away from the edges."""
    amps = np.zeros(9, dtype=complex)
    amps[3:6] = [0.6, 0.0, 0.8j]
    state = ElectronPure(-4, 4, amps)
    np.testing.assert_allclose(apply_b(apply_b_dagger(state)).amps, state.amps, atol=1e-12)
    np.testing.assert_allclose(apply_b_dagger(apply_b(state)).amps, state.amps, atol=1e-12)


def test_embed_and_windows():
    """Embedding keeps amplitudes; windows must contain the state."""
    comb = make_comb(1, 1, 1j)
    wide = embed(comb, (-5, 5))
    assert wide.window == (-5, 5)
    assert overlap(wide, comb) == pytest.approx(1.0)

    with pytest.raises(OutOfWindowError):
        embed(comb, (0, 5))

    assert default_window(10) == (-18, 18)
    assert default_window(10, margin=0) == (-10, 10)


def test_electron_spec():
    """Specs build states and echo as plain dicts."""
    delta = ElectronSpec.delta(2)
    assert delta.build().amplitude(2) == 1
    assert delta.to_dict() == {"kind": "delta", "k0": 2}

    comb = ElectronSpec.comb(1, 2, -1j)
    assert comb.build().window == (-1, 2)
    assert comb.to_dict() == {"kind": "comb", "K": 1, "K_prime": 2, "beta": [0.0, -1.0]}

    with pytest.raises(DomainError):
        ElectronSpec(kind="gaussian")


def test_poor_comb_warns(caplog):
    """A short comb is flagged as a poor ladder eigenstate."""
    with caplog.at_level("WARNING", logger="qpinem.electron"):
        ElectronSpec.comb(1, 1, 1).build()
    assert "poor b eigenstate" in caplog.text
