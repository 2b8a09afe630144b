"""Zero-mean two-mode Gaussian states and their fidelity.

Covariance matrices use the quadrature ordering (x_R, p_R, x_I, p_I) and
vacuum variance 1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .channel import NoiseLossParams, compose_half_trips

OMEGA1 = np.array([[0.0, 1.0], [-1.0, 0.0]])
OMEGA = np.kron(np.eye(2), OMEGA1)


class RadicandError(ArithmeticError):
    """A square root in the closed-form fidelity received a negative argument."""


@dataclass(frozen=True, eq=False)
class CovMatrix:
    entries: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.entries, dtype=float)
        if v.shape != (4, 4):
            raise ValueError(f"expected a 4x4 covariance matrix, got {v.shape}")
        if not np.allclose(v, v.T, atol=1e-14, rtol=0):
            raise ValueError("covariance matrix must be symmetric")
        v.setflags(write=False)
        object.__setattr__(self, "entries", v)

    def is_physical(self, tol: float = 1e-10) -> bool:
        return bool(np.linalg.eigvalsh(self.entries + 0.5j * OMEGA).min() >= -tol)

    def symplectic_eigenvalues(self) -> np.ndarray:
        return symplectic_eigenvalues(self.entries)

    def partial_transpose(self) -> "CovMatrix":
        """Flip the idler momentum (transpose on the idler mode)."""
        flip = np.diag([1.0, 1.0, 1.0, -1.0])
        return CovMatrix(flip @ self.entries @ flip)


def symplectic_eigenvalues(v: np.ndarray) -> np.ndarray:
    ev = np.abs(np.linalg.eigvals(1j * OMEGA @ np.asarray(v)))
    return np.sort(ev)[::2]


def covariance_params(n_mean: float, channel: NoiseLossParams) -> tuple[float, float, float, float]:
    """(omega, nu, c, sqrt_tau) for a TMSV whose signal went through ``channel``."""
    tau = channel.tau
    nu = n_mean + 0.5
    omega = tau * n_mean + channel.n_out + 0.5
    c = math.sqrt(tau * n_mean * (n_mean + 1.0))
    return omega, nu, c, math.sqrt(tau)


def v_from_params(omega: float, nu: float, c: float) -> np.ndarray:
    return np.array([
        [omega, 0.0, c, 0.0],
        [0.0, omega, 0.0, -c],
        [c, 0.0, nu, 0.0],
        [0.0, -c, 0.0, nu],
    ])


def tmsv_covariance(n_mean: float) -> CovMatrix:
    nu = n_mean + 0.5
    return CovMatrix(v_from_params(nu, nu, math.sqrt(n_mean * (n_mean + 1.0))))


def heterodyne_noisy_covariances(n_mean: float, channel: NoiseLossParams) -> tuple[CovMatrix, CovMatrix]:
    """Covariances of the true return and of the heterodyne/coherent spoof.

    The spoof adds one unit of quadrature noise (heterodyne plus coherent
    preparation), attenuated by the return leg's transmissivity sqrt(tau).
    """
    omega, nu, c, st = covariance_params(n_mean, channel)
    v0 = v_from_params(omega, nu, c)
    v1 = v0 + np.diag([st, st, 0.0, 0.0])
    return CovMatrix(v0), CovMatrix(v1)


def _sqrt_checked(x: float, name: str) -> float:
    if x < 0:
        if x > -1e-12 * max(1.0, abs(x)):
            return 0.0
        raise RadicandError(f"negative radicand in {name}: {x!r}")
    return math.sqrt(x)


def delta_gamma_lambda(omega: float, nu: float, c: float, st: float) -> tuple[float, float, float]:
    """Determinant invariants of the pair (V0, V0 + st * 1_R) in the closed-form fidelity."""
    w1 = omega + st
    delta = (2.0 * nu * (2.0 * omega + st) - 4.0 * c**2) ** 2
    gamma = 16.0 * (
        (omega * nu - c**2) * (w1 * nu - c**2)
        + 0.25 * (omega * w1 + nu**2 - 2.0 * c**2)
        + 1.0 / 16.0
    ) ** 2
    lam = 16.0 * (
        ((omega * nu - c**2) ** 2 - 0.25 * (omega**2 + nu**2 - 2.0 * c**2) + 1.0 / 16.0)
        * ((w1 * nu - c**2) ** 2 - 0.25 * (w1**2 + nu**2 - 2.0 * c**2) + 1.0 / 16.0)
    )
    return delta, gamma, lam


def closed_form_fidelity(omega: float, nu: float, c: float, st: float) -> float:
    delta, gamma, lam = delta_gamma_lambda(omega, nu, c, st)
    s = _sqrt_checked(gamma, "Gamma") + _sqrt_checked(lam, "Lambda")
    inner = s - _sqrt_checked(s * s - delta, "(sqrt(Gamma)+sqrt(Lambda))^2 - Delta")
    return 1.0 / _sqrt_checked(inner, "fidelity denominator")


def gaussian_fidelity(v0: CovMatrix, v1: CovMatrix, params: tuple[float, float, float, float] | None = None) -> float:
    """Root fidelity of two zero-mean two-mode Gaussian states.

    With ``params = (omega, nu, c, sqrt_tau)`` the determinant closed form is
    used and ``v0``, ``v1`` must be the matrices those parameters generate.
    Without it the general symplectic formulation is used.
    """
    if params is None:
        return symplectic_fidelity(v0, v1)
    omega, nu, c, st = params
    if not (np.allclose(v0.entries, v_from_params(omega, nu, c), rtol=0, atol=1e-14)
            and np.allclose(v1.entries - v0.entries, np.diag([st, st, 0, 0]), rtol=0, atol=1e-14)):
        raise ValueError("covariance matrices do not match the given (omega, nu, c, sqrt_tau)")
    return closed_form_fidelity(omega, nu, c, st)


def symplectic_fidelity(v0: CovMatrix, v1: CovMatrix, dps: int = 40) -> float:
    """General zero-mean Gaussian root fidelity via the auxiliary-matrix formula.

    F = (F_tot / sqrt(det(V0 + V1)))^(1/2) with
    F_tot^4 = det(2 (sqrt(1 + (V_aux Omega)^-2 / 4) + 1) V_aux) and
    V_aux = Omega^T (V0 + V1)^-1 (Omega / 4 + V1 Omega V0).

    The matrix under the square root is singular for pure states and nearly
    so close to them, so the square root goes through an eigendecomposition
    and everything runs in ``dps``-digit arithmetic.
    """
    with mpmath.workdps(dps):
        a = mpmath.matrix(v0.entries.tolist())
        b = mpmath.matrix(v1.entries.tolist())
        om = mpmath.matrix(OMEGA.tolist())
        eye = mpmath.eye(4)
        vsum = a + b
        vaux = om.T * mpmath.inverse(vsum) * (om / 4 + b * om * a)
        x = mpmath.inverse(vaux * om)
        lam, vec = mpmath.eig(eye + (x * x) / 4)
        root = vec * mpmath.diag([mpmath.sqrt(z) for z in lam]) * mpmath.inverse(vec)
        ftot4 = mpmath.det(2 * (root + eye) * vaux)
        fsq = mpmath.sqrt(abs(mpmath.re(ftot4))) / mpmath.sqrt(mpmath.det(vsum))
        return float(mpmath.sqrt(fsq))


def mc_covariance_oracle(
    n_mean: float,
    channel: NoiseLossParams,
    samples: int = 100_000,
    seed: int = 0,
) -> tuple[CovMatrix, np.ndarray]:
    """Sample the heterodyne spoof chain classically and return its sample covariance.

    Returns the covariance and the per-entry standard error. The chain is:
    TMSV quadratures, first leg (scale + thermal noise), heterodyne outcome
    (signal + vacuum noise), coherent preparation (+ vacuum noise), second leg.
    """
    rng = np.random.default_rng(seed)
    v_tmsv = tmsv_covariance(n_mean).entries
    z = rng.multivariate_normal(np.zeros(4), v_tmsv, size=samples, method="cholesky")
    sig, idl = z[:, :2], z[:, 2:]
    leg, _ = compose_half_trips(channel)
    t = math.sqrt(leg.tau)
    env_sd = math.sqrt(leg.n_in + 0.5)
    vac_sd = math.sqrt(0.5)
    sig = t * sig + math.sqrt(1.0 - leg.tau) * rng.normal(0.0, env_sd, (samples, 2))
    outcome = sig + rng.normal(0.0, vac_sd, (samples, 2))
    prepared = outcome + rng.normal(0.0, vac_sd, (samples, 2))
    rec = t * prepared + math.sqrt(1.0 - leg.tau) * rng.normal(0.0, env_sd, (samples, 2))
    x = np.hstack([rec, idl])
    cov = x.T @ x / samples
    var = np.diag(cov)
    stderr = np.sqrt((np.outer(var, var) + cov**2) / samples)
    return CovMatrix(0.5 * (cov + cov.T)), stderr
