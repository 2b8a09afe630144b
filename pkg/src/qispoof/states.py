"""Number-basis constructors for the states used in the spoofing model."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .fock_core import (
    TRACE_DEFICIT_TOL,
    FockCutoff,
    SingleModeOperator,
    TruncationError,
    TwoModeDensityOperator,
    as_cutoff,
)


@dataclass(frozen=True)
class ModePairParams:
    """Per-mode mean photon number and time-bandwidth product (mode count)."""

    n_mean: float
    m_modes: int = 1

    def __post_init__(self):
        if not self.n_mean >= 0:
            raise ValueError(f"n_mean must be >= 0, got {self.n_mean}")
        if int(self.m_modes) != self.m_modes or self.m_modes < 1:
            raise ValueError(f"m_modes must be a positive integer, got {self.m_modes}")


def thermal_probs(n_mean: float, d: int) -> np.ndarray:
    """P(n) = N^n / (1+N)^(n+1) for n < d."""
    if n_mean < 0:
        raise ValueError(f"n_mean must be >= 0, got {n_mean}")
    n = np.arange(d)
    if n_mean == 0:
        return (n == 0).astype(float)
    return np.exp(n * np.log(n_mean) - (n + 1) * np.log1p(n_mean))


def thermal_tail(n_mean: float, d: int) -> float:
    """Probability mass of thermal(n_mean) at photon numbers >= d."""
    if n_mean == 0:
        return 0.0
    return float((n_mean / (1.0 + n_mean)) ** d)


def cutoff_for_tail(n_mean: float, tail: float = 1e-10, minimum: int = 2) -> int:
    """Smallest d whose thermal(n_mean) tail is below ``tail``."""
    if n_mean == 0:
        return minimum
    d = int(np.ceil(np.log(tail) / np.log(n_mean / (1.0 + n_mean))))
    return max(minimum, d)


def _guard(deficit: float, what: str, strict: bool) -> None:
    if strict and deficit > TRACE_DEFICIT_TOL:
        raise TruncationError(f"{what}: trace deficit {deficit:.3e} exceeds {TRACE_DEFICIT_TOL}")


def tmsv_ket(n_mean: float, cutoff: FockCutoff | int) -> np.ndarray:
    d = as_cutoff(cutoff).d
    amps = np.sqrt(thermal_probs(n_mean, d))
    psi = np.zeros(d * d)
    psi[np.arange(d) * (d + 1)] = amps
    return psi


def tmsv(n_mean: float, cutoff: FockCutoff | int, *, strict: bool = True) -> TwoModeDensityOperator:
    """Two-mode squeezed vacuum with mean photon number ``n_mean`` per mode."""
    cutoff = as_cutoff(cutoff)
    psi = tmsv_ket(n_mean, cutoff)
    rho = TwoModeDensityOperator(cutoff, np.outer(psi, psi).astype(complex), pure_state=psi)
    _guard(rho.trace_deficit, "tmsv", strict)
    return rho


def thermal(n_mean: float, cutoff: FockCutoff | int) -> SingleModeOperator:
    cutoff = as_cutoff(cutoff)
    return SingleModeOperator(cutoff, np.diag(thermal_probs(n_mean, cutoff.d)).astype(complex))


def number_state(n: int, cutoff: FockCutoff | int) -> SingleModeOperator:
    cutoff = as_cutoff(cutoff)
    if not 0 <= n < cutoff.d:
        raise ValueError(f"photon number {n} outside cutoff d={cutoff.d}")
    m = np.zeros((cutoff.d, cutoff.d), dtype=complex)
    m[n, n] = 1.0
    return SingleModeOperator(cutoff, m)


def coherent_amplitudes(alpha, d: int) -> np.ndarray:
    """Number-basis amplitudes of |alpha>; vectorized over ``alpha``.

    Returns shape ``alpha.shape + (d,)``. Magnitudes are built from
    cumulative log-factorials so large ``d`` does not overflow.
    """
    alpha = np.asarray(alpha, dtype=complex)
    n = np.arange(d)
    r = np.abs(alpha)[..., None]
    phase = np.exp(1j * np.angle(alpha))[..., None] ** n
    log_r = np.log(np.where(r > 0, r, 1.0))
    log_mag = -0.5 * r**2 + n * log_r - 0.5 * gammaln(n + 1)
    # alpha = 0 is the vacuum
    log_mag = np.where((r == 0) & (n > 0), -np.inf, log_mag)
    return np.exp(log_mag) * phase


def coherent(alpha: complex, cutoff: FockCutoff | int, *, strict: bool = True) -> SingleModeOperator:
    cutoff = as_cutoff(cutoff)
    v = coherent_amplitudes(alpha, cutoff.d)
    op = SingleModeOperator(cutoff, np.outer(v, v.conj()))
    _guard(op.trace_deficit, f"coherent({alpha})", strict)
    return op


def classically_correlated(weights, cutoff: FockCutoff | int) -> TwoModeDensityOperator:
    """sum_n w_n |n><n|_I (x) |n><n|_R."""
    cutoff = as_cutoff(cutoff)
    d = cutoff.d
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0):
        raise ValueError("weights must be non-negative")
    if w.size > d:
        if np.any(w[d:] > 0):
            raise ValueError(f"weights beyond cutoff d={d} are nonzero")
        w = w[:d]
    if abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {w.sum()!r}")
    diag = np.zeros(d * d)
    diag[np.arange(w.size) * (d + 1)] = w
    return TwoModeDensityOperator(cutoff, np.diag(diag).astype(complex))
