import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qispoof.channel import NoiseLossParams
from qispoof.gaussian import (
    CovMatrix,
    RadicandError,
    closed_form_fidelity,
    covariance_params,
    gaussian_fidelity,
    heterodyne_noisy_covariances,
    mc_covariance_oracle,
    symplectic_fidelity,
    tmsv_covariance,
)


def test_example_parameters():
    omega, nu, c, st_ = covariance_params(0.01, NoiseLossParams(1e-6, n_out=1.0))
    assert omega == pytest.approx(1.50000001, abs=1e-12)
    assert nu == pytest.approx(0.51)
    assert c == pytest.approx(1.00499e-4, rel=1e-5)
    assert st_ == pytest.approx(1e-3)


def test_covariances_physical_and_separable_spoof():
    v0, v1 = heterodyne_noisy_covariances(0.5, NoiseLossParams(0.25, n_out=0.1))
    assert v0.is_physical() and v1.is_physical()
    assert v1.partial_transpose().is_physical()
    assert np.trace(v1.entries - v0.entries) == pytest.approx(2 * math.sqrt(0.25))


def test_tmsv_is_pure():
    np.testing.assert_allclose(tmsv_covariance(0.7).symplectic_eigenvalues(), [0.5, 0.5], atol=1e-12)
    assert not tmsv_covariance(0.7).partial_transpose().is_physical()


def test_asymmetric_matrix_rejected():
    m = np.eye(4)
    m[0, 1] = 0.1
    with pytest.raises(ValueError):
        CovMatrix(m)


def test_equal_states_fidelity_one():
    v, _ = heterodyne_noisy_covariances(0.3, NoiseLossParams(0.5, n_out=0.2))
    assert symplectic_fidelity(v, v) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [0.0, 0.01, 0.5, 1.0])
def test_noise_free_limit(n):
    chn = NoiseLossParams.identity()
    v0, v1 = heterodyne_noisy_covariances(n, chn)
    assert gaussian_fidelity(v0, v1, covariance_params(n, chn)) == pytest.approx(1 / math.sqrt(2 * n + 2), abs=1e-7)
    # H0 is pure here; float rounding of c leaves it ~1e-16 from pure, which
    # moves the exact fidelity by ~sqrt(1e-16)
    assert symplectic_fidelity(v0, v1) == pytest.approx(1 / math.sqrt(2 * n + 2), abs=1e-7)


def test_params_must_match_matrices():
    chn = NoiseLossParams(0.5, n_out=0.2)
    v0, v1 = heterodyne_noisy_covariances(0.3, chn)
    with pytest.raises(ValueError):
        gaussian_fidelity(v0, v1, covariance_params(0.4, chn))


def test_radicand_error_reported():
    with pytest.raises(RadicandError):
        closed_form_fidelity(1.371, 1.301, 1.377, 0.778)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 2.0), st.floats(1e-6, 1.0), st.floats(1e-3, 2.0))
def test_closed_form_matches_symplectic(n, tau, n_out):
    if tau == 1.0:
        n_out = 0.0
    chn = NoiseLossParams(tau, n_out=n_out)
    v0, v1 = heterodyne_noisy_covariances(n, chn)
    f = gaussian_fidelity(v0, v1, covariance_params(n, chn))
    assert f == pytest.approx(symplectic_fidelity(v0, v1), abs=1e-9)
    assert f == pytest.approx(symplectic_fidelity(v1, v0), abs=1e-9)
    assert 0.0 < f <= 1.0 + 1e-12


def test_mc_oracle_within_three_sigma():
    chn = NoiseLossParams(0.25, n_out=0.1)
    cov, err = mc_covariance_oracle(0.5, chn, samples=100_000, seed=7)
    _, v1 = heterodyne_noisy_covariances(0.5, chn)
    assert np.all(np.abs(cov.entries - v1.entries) <= 3 * err)


def test_mc_oracle_vacuum_has_no_cross_terms():
    cov, err = mc_covariance_oracle(0.0, NoiseLossParams(0.5, n_out=0.1), samples=100_000, seed=1)
    assert np.all(np.abs(cov.entries[:2, 2:]) <= 4 * err[:2, 2:])
