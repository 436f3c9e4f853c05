#!/usr/bin/env python3

import math
import os
import sys

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.special import eval_genlaguerre

# Add parent directory to path to import qpinem
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from qpinem.analysis import mandel_q, peak_count
from qpinem.errors import DomainError, NumericalError, TruncationError
from qpinem.fockspace import (
    PhotonDensity,
    PhotonPure,
    annihilation,
    displacement_matrix,
    distribution,
    fock_index,
    make_coherent,
    make_displaced_fock,
    make_fock,
    make_thermal,
    make_vacuum,
    mean_photon,
    normalize,
    purity,
    thermal_theta,
    to_density,
)
from qpinem.special import (
    displacement_column,
    displacement_element,
    displacement_elements,
    laguerre_functions,
    log_factorial,
)


def generator(alpha, n_max):
    """alpha a^dagger - alpha* a on the truncated space."""
    a = annihilation(n_max)
    return alpha * a.conj().T - np.conj(alpha) * a


def test_log_factorial():
    """ln(n!) matches math.lgamma for scalars and arrays."""
    assert log_factorial(0) == pytest.approx(0.0)
    assert log_factorial(10) == pytest.approx(math.log(math.factorial(10)))
    np.testing.assert_allclose(log_factorial(np.arange(5)), np.log([1, 1, 2, 6, 24]))


def test_laguerre_functions():
    """Normalized Laguerre functions match scipy's polynomials where both are finite."""
    x = 2.5
    orders = [0, 1, 5]
    table = laguerre_functions(x, orders, 10)
    for k in range(11):
        for column, d in enumerate(orders):
            expected = (
                math.exp(-x / 2) * x ** (d / 2)
                * math.sqrt(math.factorial(k) / math.factorial(k + d))
                * eval_genlaguerre(k, d, x)
            )
            assert table[k, column] == pytest.approx(expected, abs=1e-12)

    np.testing.assert_array_equal(laguerre_functions(0.0, [0, 2], 3), [[1, 0]] * 4)
    with pytest.raises(ValueError):
        laguerre_functions(-1.0, [0], 3)
    with pytest.raises(ValueError):
        laguerre_functions(1.0, [-1], 3)


def test_displacement_column_survives_underflowing_start():
    """e^{-|a|^2/2} underflows at |a|^2 = 2000, yet the column of D|600> stays normalized."""
    column = displacement_column(math.sqrt(2000.0), 600, 5200)
    probs = np.abs(column) ** 2
    assert np.all(np.isfinite(column))
    assert probs.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.dot(np.arange(probs.size), probs) == pytest.approx(2600.0, rel=1e-9)


def test_displacement_element_matches_block():
    """Single elements agree with the full block on both sides of the diagonal."""
    alpha = 0.7 - 0.4j
    block = displacement_elements(alpha, 12)
    for n in range(13):
        for n_prime in range(13):
            assert displacement_element(alpha, n, n_prime) == pytest.approx(block[n, n_prime], abs=1e-12)
    assert displacement_element(alpha, 0, 1) == pytest.approx(-np.conj(alpha) * math.exp(-abs(alpha) ** 2 / 2))
    with pytest.raises(ValueError):
        displacement_element(alpha, -1, 0)


def test_make_vacuum():
    """Vacuum is the unit vector at n=0."""
    np.testing.assert_array_equal(make_vacuum(4).amps, [1, 0, 0, 0, 0])
    np.testing.assert_array_equal(make_vacuum(0).amps, [1])
    assert mean_photon(make_vacuum(64)) == 0.0


def test_make_fock():
    """Fock states are basis vectors; out-of-range indices are rejected."""
    state = make_fock(3, 10)
    assert state.amps[3] == 1
    assert np.count_nonzero(state.amps) == 1
    np.testing.assert_array_equal(make_fock(0, 5).amps, make_vacuum(5).amps)
    assert mandel_q(distribution(make_fock(5, 20))) == pytest.approx(-1.0)

    with pytest.raises(TruncationError):
        make_fock(11, 10)


def test_make_coherent():
    """Coherent states have Poisson statistics."""
    np.testing.assert_allclose(make_coherent(0, 8).amps, make_vacuum(8).amps)

    state = make_coherent(math.sqrt(50), 120)
    assert mean_photon(state) == pytest.approx(50.0, abs=1e-6)
    assert state.norm_squared == pytest.approx(1.0, abs=1e-10)

    assert mandel_q(distribution(make_coherent(math.sqrt(10), 64))) == pytest.approx(0.0, abs=1e-8)


def test_make_coherent_truncation_check():
    """|alpha|^2 + 8|alpha| must fit unless the check is waived."""
    with pytest.raises(TruncationError, match="needs n_max"):
        make_coherent(5.0, 40)

    state = make_coherent(5.0, 40, allow_truncation=True)
    assert state.norm_squared == pytest.approx(1.0)
    assert state.discarded_weight > 0


def test_make_thermal():
    """Thermal states follow the geometric distribution."""
    assert distribution(make_thermal(50.0, 10))[0] == pytest.approx(1.0)

    state = make_thermal(math.log(2), 200)
    probs = distribution(state)
    np.testing.assert_allclose(probs[:5], 0.5 ** np.arange(1, 6), rtol=1e-12)
    assert mean_photon(state) == pytest.approx(1.0, abs=1e-10)

    hot = make_thermal(thermal_theta(5.0), 200)
    assert mandel_q(distribution(hot)) == pytest.approx(5.0, abs=1e-3)
    assert purity(make_thermal(thermal_theta(1.0), 100)) == pytest.approx(1.0 / 3.0, abs=1e-6)

    with pytest.raises(DomainError):
        make_thermal(0.0, 10)


def test_displacement_matrix():
    """D(alpha) in the Fock basis."""
    np.testing.assert_allclose(displacement_matrix(0, 6), np.eye(7))

    alpha = 1.2 + 0.5j
    matrix = displacement_matrix(alpha, 60)
    np.testing.assert_allclose(matrix @ make_vacuum(60).amps, make_coherent(alpha, 60).amps, atol=1e-8)


def test_displacement_matrix_matches_expm():
    """Columns agree with the exponential of the generator on a larger truncation."""
    alpha = 0.3
    reference = expm(generator(alpha, 90))[:31, :31]
    np.testing.assert_allclose(displacement_matrix(alpha, 30), reference, atol=1e-8)


@pytest.mark.parametrize(
    "alpha, n_max, columns, padded",
    [(3.0, 80, 41, 300), (math.sqrt(50) * 1j, 120, 21, 400), (1.5 - 2.0j, 150, 81, 400)],
)
def test_displacement_matrix_large_amplitude(alpha, n_max, columns, padded):
    """Columns deep in the block stay exact for moderate |alpha| sqrt(n)."""
    reference = expm(generator(alpha, padded))[: n_max + 1, :columns]
    np.testing.assert_allclose(displacement_matrix(alpha, n_max)[:, :columns], reference, atol=1e-9)


@pytest.mark.parametrize(
    "alpha, n_max, columns",
    [(10.0, 256, 11), (1.0, 1500, 1001), (math.sqrt(1000.0), 1400, 6)],
)
def test_displacement_matrix_columns_stay_unitary(alpha, n_max, columns):
    """Column norms stay at 1 for columns whose spread fits the block."""
    matrix = displacement_matrix(alpha, n_max)
    assert np.all(np.isfinite(matrix))
    norms = np.sum(np.abs(matrix[:, :columns]) ** 2, axis=0)
    np.testing.assert_allclose(norms, 1.0, atol=1e-9)


def test_displacement_inverse_on_central_block():
    """D(alpha) D(-alpha) is the identity away from the truncation edge."""
    alpha = 0.8 - 0.6j
    n_max = 80
    product = displacement_matrix(alpha, n_max) @ displacement_matrix(-alpha, n_max)
    limit = n_max - 4 * math.ceil(abs(alpha) * (math.sqrt(n_max) + 1))
    np.testing.assert_allclose(product[:limit + 1, :limit + 1], np.eye(limit + 1), atol=1e-6)


@pytest.mark.parametrize("n_i", [0, 1, 2, 4])
def test_displaced_fock_matches_matrix_path(n_i):
    """Binomial expansion agrees with D(alpha) applied to |n_i>."""
    alpha = 1.5 - 0.7j
    n_max = 60
    direct = make_displaced_fock(n_i, alpha, n_max)
    applied = displacement_matrix(alpha, n_max) @ make_fock(n_i, n_max).amps
    np.testing.assert_allclose(direct.amps, applied, atol=1e-8)


def test_displaced_fock_limits_and_peaks():
    """alpha=0 gives |n_i>, n_i=0 gives |alpha>, and n_i+1 peaks appear."""
    np.testing.assert_allclose(make_displaced_fock(3, 0, 20).amps, make_fock(3, 20).amps, atol=1e-14)
    np.testing.assert_allclose(
        make_displaced_fock(0, 2 - 1j, 60).amps, make_coherent(2 - 1j, 60).amps, atol=1e-12
    )
    assert peak_count(distribution(make_displaced_fock(2, 1.5, 40))) == 3
    assert peak_count(distribution(make_displaced_fock(2, 3.0, 80))) == 3
    assert peak_count(distribution(make_displaced_fock(1, 3.0, 60))) == 2


def test_state_utilities():
    """Density conversion, distributions, purity and normalization."""
    state = make_coherent(1.0 + 1.0j, 40)
    assert purity(to_density(state)) == pytest.approx(1.0, abs=1e-10)
    np.testing.assert_array_equal(distribution(make_fock(3, 5)), [0, 0, 0, 1, 0, 0])

    scaled = PhotonDensity(2.0 * to_density(make_fock(1, 3)).mat)
    assert normalize(scaled).trace == pytest.approx(1.0)

    with pytest.raises(NumericalError):
        normalize(PhotonPure(np.zeros(4)))


def test_density_validation():
    """Non-Hermitian or non-positive matrices fail validation."""
    bad = PhotonDensity(np.array([[0.5, 0.1], [0.3, 0.5]], dtype=complex))
    with pytest.raises(NumericalError):
        bad.validate()

    negative = PhotonDensity(np.diag([1.5, -0.5]).astype(complex))
    negative.validate()
    with pytest.raises(NumericalError):
        negative.validate(check_psd=True)


def test_fock_index():
    """Fock basis states are recognized; superpositions are not."""
    assert fock_index(make_fock(7, 10)) == 7
    assert fock_index(make_coherent(1.0, 20)) is None
    assert fock_index(to_density(make_fock(2, 4))) == 2
