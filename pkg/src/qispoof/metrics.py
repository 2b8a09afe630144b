"""Hypothesis-testing figures of merit with equal priors.

Multi-mode quantities are single-mode values raised to the power M, so they
are carried as logarithms; (2N+2)^(-M/2) underflows long before M = 1e4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fock_core import trace_norm, uhlmann_fidelity
from .spoof_models import HypothesisPair, Strategy, build_direct_noise_free


@dataclass(frozen=True)
class DiscriminationReport:
    """Single-pair figures of merit.

    ``pe_lower``/``pe_upper`` come from the fidelity (always valid);
    the ``*_printed`` columns use the closed-form per-mode bases, which for
    direct detection differ from F^2 except at N = 1.
    """

    fidelity_single_mode: float
    log_fidelity_M: float
    pe_lower: float
    pe_upper: float
    pe_lower_printed: float
    pe_upper_printed: float
    m_star_lower: float
    m_star_upper: int
    pe_helstrom: float | None = None

    def __post_init__(self):
        if self.pe_lower > self.pe_upper + 1e-15:
            raise ValueError(f"pe_lower {self.pe_lower} exceeds pe_upper {self.pe_upper}")

    @property
    def log10_fidelity_M(self) -> float:
        return self.log_fidelity_M / math.log(10.0)


def helstrom_error(pair: HypothesisPair) -> float:
    """(1 - ||rho1 - rho0||_1 / 2) / 2 from the eigenvalues of the difference."""
    diff = pair.rho_h1.entries - pair.rho_h0.entries
    return 0.5 * (1.0 - 0.5 * trace_norm(diff))


def single_mode_fidelity(pair: HypothesisPair) -> float:
    return uhlmann_fidelity(pair.rho_h0, pair.rho_h1)


def log_fidelity(f_single: float, m_modes: int) -> float:
    if f_single <= 0.0:
        return -math.inf
    return m_modes * math.log(f_single)


def _bounds_from_log_base(log_base_m: float) -> tuple[float, float]:
    """(1 - sqrt(1 - b)) / 2 and b / 2 for b = exp(log_base_m) <= 1."""
    b = math.exp(log_base_m)
    # 1 - sqrt(1 - b) = b / (1 + sqrt(1 - b)) keeps precision when b is tiny
    lower = 0.5 * b / (1.0 + math.sqrt(max(0.0, -math.expm1(log_base_m))))
    return lower, 0.5 * b


def log_bound_base(n_mean: float, strategy: Strategy) -> float:
    """log of the per-mode base in the printed error bounds (a number <= 0)."""
    if strategy is Strategy.DIRECT_NUMBER:
        return -math.log1p(n_mean + n_mean * n_mean)
    if strategy is Strategy.HETERODYNE_COHERENT:
        return -math.log(2.0 * n_mean + 2.0)
    raise ValueError(f"no closed-form bounds for {strategy}")


def pe_bounds_direct(n_mean: float, m_modes: int) -> tuple[float, float]:
    """Printed Helstrom-error bounds, base 1/(1 + N + N^2)."""
    return _bounds_from_log_base(m_modes * log_bound_base(n_mean, Strategy.DIRECT_NUMBER))


def pe_bounds_heterodyne(n_mean: float, m_modes: int) -> tuple[float, float]:
    """Printed Helstrom-error bounds, base 1/(2N + 2)."""
    return _bounds_from_log_base(m_modes * log_bound_base(n_mean, Strategy.HETERODYNE_COHERENT))


def pe_bounds(n_mean: float, m_modes: int, strategy: Strategy) -> tuple[float, float]:
    return _bounds_from_log_base(m_modes * log_bound_base(n_mean, strategy))


def pe_bounds_from_fidelity(f_single: float, m_modes: int, *, pure_h0: bool) -> tuple[float, float]:
    """Fuchs-van de Graaf bounds on the Helstrom error for M copies.

    With F = F_single^M: lower (1 - sqrt(1 - F^2)) / 2, upper F^2 / 2 when H0 is
    pure and F / 2 otherwise.
    """
    logf = log_fidelity(f_single, m_modes)
    if logf == -math.inf:
        return 0.0, 0.0
    lower, upper_pure = _bounds_from_log_base(2.0 * logf)
    return lower, (upper_pure if pure_h0 else 0.5 * math.exp(logf))


def m_star_bounds(n_mean: float, pe_target: float, strategy: Strategy) -> tuple[float, int]:
    """Bounds on the smallest mode count reaching error ``pe_target``.

    -ln(4 Pe) / L <= M* <= ceil(-ln(2 Pe) / (L / 2)), L = -log(base).
    """
    if not 0.0 < pe_target < 0.5:
        raise ValueError(f"pe_target must lie in (0, 1/2), got {pe_target}")
    rate = -log_bound_base(n_mean, strategy)
    if rate == 0.0:
        return math.inf, math.inf
    lower = -math.log(4.0 * pe_target) / rate
    upper = math.ceil(-math.log(2.0 * pe_target) / (0.5 * rate))
    return max(lower, 0.0), upper


def report(pair: HypothesisPair, m_modes: int = 1, pe_target: float = 0.01, *, helstrom: bool = True) -> DiscriminationReport:
    """Fidelity, error bounds, sample complexity and (for M = 1) the Helstrom error.

    The Helstrom error is only evaluated for a single mode; M-mode operators
    are never built.
    """
    n = pair.params.n_mean
    f = single_mode_fidelity(pair)
    lo, hi = pe_bounds_from_fidelity(f, m_modes, pure_h0=pair.rho_h0.pure_state is not None)
    plo, phi = pe_bounds(n, m_modes, pair.strategy)
    ms_lo, ms_hi = m_star_bounds(n, pe_target, pair.strategy)
    pe = helstrom_error(pair) if helstrom and m_modes == 1 else None
    return DiscriminationReport(f, log_fidelity(f, m_modes), lo, hi, plo, phi, ms_lo, ms_hi, pe)


def analytic_fidelity(n_mean: float, strategy: Strategy) -> float:
    """Noise-free single-mode fidelity: (2N+1)^(-1/2) direct, (2N+2)^(-1/2) heterodyne."""
    if strategy is Strategy.DIRECT_NUMBER:
        return 1.0 / math.sqrt(2.0 * n_mean + 1.0)
    if strategy is Strategy.HETERODYNE_COHERENT:
        return 1.0 / math.sqrt(2.0 * n_mean + 2.0)
    raise ValueError(f"no analytic fidelity for {strategy}")


def qi_direct_success(n_mean: float, cutoff: int = 35) -> float:
    """P_opt = 1 - Helstrom error for the noise-free direct-detection spoofer."""
    return 1.0 - helstrom_error(build_direct_noise_free(n_mean, cutoff, strict=False))
