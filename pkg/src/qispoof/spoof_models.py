"""Null/alternate hypothesis state pairs for measure-and-prepare spoofers.

H0 is the true return: the TMSV with its signal mode sent through the
round-trip channel. H1 is the spoof: the signal is intercepted after the
outbound leg, measured, re-prepared and sent back through the return leg.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import channel as ch
from .fock_core import (
    TRACE_DEFICIT_TOL,
    FockCutoff,
    TwoModeDensityOperator,
    as_cutoff,
    embed,
    from_tensor,
    trace_norm,
    truncate,
)
from .gaussian import CovMatrix, heterodyne_noisy_covariances
from .states import ModePairParams, coherent_amplitudes, thermal_probs, tmsv

DEFAULT_QUAD_ORDER = 40
MIN_QUAD_ORDER = 20
QUAD_RESIDUAL_TOL = 1e-8


class Strategy(str, enum.Enum):
    DIRECT_NUMBER = "direct"
    HETERODYNE_COHERENT = "heterodyne"
    COHERENT_BASELINE = "coherent_baseline"


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class HypothesisPair:
    rho_h0: TwoModeDensityOperator
    rho_h1: TwoModeDensityOperator
    params: ModePairParams
    strategy: Strategy
    channel: ch.NoiseLossParams | None = None
    quad_residual: float = 0.0

    def __post_init__(self):
        if self.rho_h0.cutoff != self.rho_h1.cutoff:
            raise ValueError("H0 and H1 operators must share a cutoff")

    @property
    def cutoff(self) -> FockCutoff:
        return self.rho_h0.cutoff

    @property
    def trace_deficit(self) -> float:
        return max(self.rho_h0.trace_deficit, self.rho_h1.trace_deficit)

    @property
    def trusted(self) -> bool:
        return self.trace_deficit < TRACE_DEFICIT_TOL and self.quad_residual <= QUAD_RESIDUAL_TOL


def build_direct_noise_free(n_mean: float, cutoff: FockCutoff | int = 35, *, strict: bool = True) -> HypothesisPair:
    """Direct detection and number-state preparation, no loss or noise."""
    cutoff = as_cutoff(cutoff)
    d = cutoff.d
    rho0 = tmsv(n_mean, cutoff, strict=strict)
    diag = np.zeros(d * d)
    diag[np.arange(d) * (d + 1)] = thermal_probs(n_mean, d)
    rho1 = TwoModeDensityOperator(cutoff, np.diag(diag).astype(complex))
    return HypothesisPair(rho0, rho1, ModePairParams(n_mean), Strategy.DIRECT_NUMBER)


def gauss_hermite_2d(order: int, variance: float):
    """Nodes and weights for E[f(x, p)] with x, p i.i.d. N(0, variance)."""
    t, w = np.polynomial.hermite.hermgauss(order)
    x = math.sqrt(2.0 * variance) * t
    w = w / math.sqrt(math.pi)
    xx, pp = np.meshgrid(x, x, indexing="ij")
    ww = np.outer(w, w)
    return xx.ravel(), pp.ravel(), ww.ravel()


def build_heterodyne_noise_free(
    n_mean: float,
    cutoff: FockCutoff | int = 35,
    quad_order: int = DEFAULT_QUAD_ORDER,
    *,
    strict: bool = True,
) -> HypothesisPair:
    """Heterodyne detection and coherent-state preparation, no loss or noise.

    The outcome alpha = (x + i p) / sqrt(2) has x, p ~ N(0, N + 1); the received
    mode is |alpha> and the idler is left in |kappa alpha*>, kappa = sqrt(N/(N+1)).
    """
    if quad_order < MIN_QUAD_ORDER:
        raise ValueError(f"quad_order must be >= {MIN_QUAD_ORDER}, got {quad_order}")
    cutoff = as_cutoff(cutoff)
    d = cutoff.d
    rho0 = tmsv(n_mean, cutoff, strict=strict)
    x, p, w = gauss_hermite_2d(quad_order, n_mean + 1.0)
    residual = abs(1.0 - math.fsum(w))
    if residual > QUAD_RESIDUAL_TOL:
        raise QuadratureError(f"quadrature weight residual {residual:.3e}")
    alpha = (x + 1j * p) / math.sqrt(2.0)
    kappa = math.sqrt(n_mean / (n_mean + 1.0))
    rec = coherent_amplitudes(alpha, d)
    idl = coherent_amplitudes(kappa * np.conj(alpha), d)
    cols = (idl[:, :, None] * rec[:, None, :]).reshape(len(w), d * d) * np.sqrt(w)[:, None]
    rho1 = TwoModeDensityOperator(cutoff, cols.T @ cols.conj())
    return HypothesisPair(rho0, rho1, ModePairParams(n_mean), Strategy.HETERODYNE_COHERENT, quad_residual=residual)


def dephase_received(rho: TwoModeDensityOperator) -> TwoModeDensityOperator:
    """Number measurement on the received mode, outcome discarded.

    Sum over n of (1 (x) |n><n|) rho (1 (x) |n><n|): received coherences vanish,
    idler correlations with the outcome are kept.
    """
    d = rho.d
    t = rho.as_tensor().copy()
    mask = np.eye(d, dtype=bool)[None, :, None, :]
    t = np.where(mask, t, 0.0)
    return from_tensor(t, rho.cutoff)


def build_direct_noisy(
    n_mean: float,
    cutoff: FockCutoff | int = 35,
    channel: ch.NoiseLossParams | None = None,
    *,
    work_cutoff: int | None = None,
    strict: bool = True,
) -> HypothesisPair:
    """Direct detection spoofer between two half-trip legs of ``channel``.

    Intermediate states are held at ``work_cutoff`` (defaults to the output
    cutoff) and truncated at the end.
    """
    cutoff = as_cutoff(cutoff)
    channel = channel or ch.NoiseLossParams.identity()
    d = cutoff.d
    work = max(d, work_cutoff or d)
    psi = tmsv(n_mean, cutoff, strict=strict)
    start = embed(psi, work) if work > d else psi
    leg, back = ch.compose_half_trips(channel)

    rho0 = ch.apply_closed_form(start, channel)
    rho1 = ch.apply_closed_form(dephase_received(ch.apply_closed_form(start, leg)), back)
    if work > d:
        rho0, rho1 = truncate(rho0, d), truncate(rho1, d)
    if channel.is_identity:
        rho0 = psi
    pair = HypothesisPair(rho0, rho1, ModePairParams(n_mean), Strategy.DIRECT_NUMBER, channel=channel)
    if strict and not pair.trusted:
        raise ch.TruncationError(f"noisy direct pair trace deficit {pair.trace_deficit:.3e}")
    return pair


def reflect_noisy(
    n_mean: float,
    cutoff: FockCutoff | int,
    channel: ch.NoiseLossParams,
    *,
    work_cutoff: int | None = None,
) -> TwoModeDensityOperator:
    """The spoofer just passes the pulse on: outbound leg then return leg."""
    cutoff = as_cutoff(cutoff)
    leg, back = ch.compose_half_trips(channel)
    return ch.apply_sequence(tmsv(n_mean, cutoff, strict=False), [leg, back], work_cutoff=work_cutoff)


def build_heterodyne_noisy_covariance(n_mean: float, channel: ch.NoiseLossParams) -> tuple[CovMatrix, CovMatrix]:
    return heterodyne_noisy_covariances(n_mean, channel)


def _helstrom_vs_coherent(n_spoof: float, shift: float, d: int) -> float:
    """|| thermal(n_spoof) - |shift><shift| ||_1 in a d-dimensional number basis."""
    v = coherent_amplitudes(shift, d)
    return trace_norm(np.diag(thermal_probs(n_spoof, d)) - np.outer(v, v.conj()))


def bayes_gain(n_mean: float) -> float:
    """Posterior-mean gain N / (N + 1) for estimating alpha from a heterodyne outcome."""
    return n_mean / (n_mean + 1.0)


def build_coherent_baseline(
    n_mean: float,
    cutoff: FockCutoff | int = 35,
    quad_order: int = DEFAULT_QUAD_ORDER,
    gain: float = 1.0,
) -> float:
    """Success probability for spotting a spoof of a randomly drawn coherent pulse.

    The radar sends |alpha>, alpha circular Gaussian with E|alpha|^2 = n_mean,
    and knows alpha. The spoofer heterodynes (outcome beta ~ alpha + complex
    vacuum noise with E|beta - alpha|^2 = 1) and sends |gain * beta>. Given
    alpha the spoof is thermal(gain^2) displaced to gain * alpha, so the trace
    distance to |alpha> depends only on (1 - gain) |alpha|; the average over
    |alpha|^2 ~ Exp(n_mean) uses Gauss-Laguerre. With the default unit gain
    every node gives the same trace norm and P_opt = 3/4 up to truncation.
    """
    if not n_mean > 0:
        raise ValueError(f"n_mean must be > 0, got {n_mean}")
    if quad_order < MIN_QUAD_ORDER:
        raise ValueError(f"quad_order must be >= {MIN_QUAD_ORDER}, got {quad_order}")
    d = as_cutoff(cutoff).d
    u, w = np.polynomial.laguerre.laggauss(quad_order)
    residual = abs(1.0 - math.fsum(w))
    if residual > QUAD_RESIDUAL_TOL:
        raise QuadratureError(f"quadrature weight residual {residual:.3e}")
    shifts = np.sqrt(n_mean * u) * (1.0 - gain)
    norms = np.array([_helstrom_vs_coherent(gain**2, s, d) for s in shifts])
    return 0.5 + 0.25 * float(np.dot(w, norms))
