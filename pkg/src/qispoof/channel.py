"""Thermal noise-loss channel acting on the received mode of a two-mode state.

Two independent routes are provided. :func:`apply_closed_form` evaluates the
binomial expansion of a beam splitter mixing the mode with a thermal
environment and traces the environment analytically. :func:`apply_dilation_oracle`
builds the beam-splitter unitary numerically (matrix exponential of its
generator in each photon-number sector) and traces out the environment; it
exists to check the first route.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from .fock_core import (
    TRACE_DEFICIT_TOL,
    TruncationError,
    TwoModeDensityOperator,
    embed,
    from_tensor,
    truncate,
)

ENV_WEIGHT_TOL = 1e-12
ORACLE_MEMORY_LIMIT = 2_000_000


@dataclass(frozen=True)
class NoiseLossParams:
    """Transmissivity ``tau`` and thermal noise.

    ``n_out`` is the noise photon number seen at the output and ``n_in`` the
    mean of the injected thermal state, related by ``n_out = n_in * (1 - tau)``.
    Pass either one; the other is derived.
    """

    tau: float
    n_out: float | None = None
    n_in: float | None = None

    def __post_init__(self):
        tau = float(self.tau)
        if not 0.0 <= tau <= 1.0:
            raise ValueError(f"transmissivity must lie in [0, 1], got {tau}")
        n_out, n_in = self.n_out, self.n_in
        if n_out is None and n_in is None:
            raise ValueError("give n_out or n_in")
        if n_out is not None and n_out < 0 or n_in is not None and n_in < 0:
            raise ValueError("noise photon numbers must be >= 0")
        if tau == 1.0:
            if n_out not in (None, 0, 0.0):
                raise ValueError("tau = 1 admits no output noise")
            n_out, n_in = 0.0, (n_in if n_in is not None else 0.0)
        elif n_in is None:
            n_in = n_out / (1.0 - tau)
        elif n_out is None:
            n_out = n_in * (1.0 - tau)
        elif not math.isclose(n_out, n_in * (1.0 - tau), rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError(f"inconsistent noise: n_out={n_out}, n_in*(1-tau)={n_in * (1 - tau)}")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "n_out", float(n_out))
        object.__setattr__(self, "n_in", float(n_in))

    @classmethod
    def identity(cls) -> "NoiseLossParams":
        return cls(1.0, n_out=0.0)

    @property
    def is_identity(self) -> bool:
        return self.tau == 1.0


def compose_half_trips(p_full: NoiseLossParams) -> tuple[NoiseLossParams, NoiseLossParams]:
    """Split a round trip into two legs of transmissivity sqrt(tau).

    Both legs inject the full channel's thermal mean, which makes their
    composition equal to the round-trip channel exactly.
    """
    half = NoiseLossParams(math.sqrt(p_full.tau), n_in=p_full.n_in)
    return half, half


def env_photon_max(n_in: float, tol: float = ENV_WEIGHT_TOL) -> int:
    """Number of environment Fock terms kept: stop once the thermal weight drops below ``tol``."""
    if n_in == 0:
        return 1
    # w_n = (1/(1+N)) x^n with x = N/(1+N); first n with w_n < tol
    x = n_in / (1.0 + n_in)
    n = math.ceil((math.log(tol) + math.log1p(n_in)) / math.log(x))
    return max(1, n + 1)


def _env_weights(n_in: float, n_env: int) -> np.ndarray:
    n = np.arange(n_env)
    if n_in == 0:
        return (n == 0).astype(float)
    return np.exp(n * math.log(n_in) - (n + 1) * math.log1p(n_in))


def _bs_coefficients(tau: float, d: int, n_env: int) -> np.ndarray:
    """coef[n, j, a]: amplitude for signal |j> and environment |n> to leave
    ``a`` photons in the signal port and ``j + n - a`` in the environment port.
    """
    st, sr = math.sqrt(tau), math.sqrt(1.0 - tau)
    n = np.arange(n_env)[:, None, None, None]
    j = np.arange(d)[None, :, None, None]
    a = np.arange(d)[None, None, :, None]
    r = np.arange(d)[None, None, None, :]
    s = a - r
    q = j + n - a
    valid = (r <= j) & (s >= 0) & (s <= n) & (q >= 0)
    r_, s_, q_ = np.where(valid, r, 0), np.where(valid, s, 0), np.where(valid, q, 0)
    jj, nn, aa = np.broadcast_to(j, valid.shape), np.broadcast_to(n, valid.shape), np.broadcast_to(a, valid.shape)
    log_binom = (
        gammaln(jj + 1) - gammaln(r_ + 1) - gammaln(jj - r_ + 1)
        + gammaln(nn + 1) - gammaln(s_ + 1) - gammaln(np.where(valid, nn - s_, 0) + 1)
    )
    log_fact = 0.5 * (gammaln(q_ + 1) + gammaln(aa + 1) - gammaln(jj + 1) - gammaln(nn + 1))
    e_t = np.where(valid, nn - s_ + r_, 0)
    e_r = np.where(valid, jj - r_ + s_, 0)
    sign = np.where((nn - s_) % 2 == 0, 1.0, -1.0)
    terms = sign * np.exp(log_binom + log_fact) * np.power(st, e_t) * np.power(sr, e_r)
    return np.sum(np.where(valid, terms, 0.0), axis=-1)


def _apply_shift_kernels(rho: TwoModeDensityOperator, kernels: dict[int, np.ndarray]) -> TwoModeDensityOperator:
    """out[i, j+h, k, l+h] += T_h[j, l] * rho[i, j, k, l] for each photon shift h."""
    d = rho.d
    t = rho.as_tensor()
    out = np.zeros_like(t, dtype=complex)
    for h, kern in kernels.items():
        lo, hi = max(0, -h), min(d, d - h)
        if lo >= hi:
            continue
        out[:, lo + h:hi + h, :, lo + h:hi + h] += kern[lo:hi, lo:hi][None, :, None, :] * t[:, lo:hi, :, lo:hi]
    return from_tensor(out, rho.cutoff)


def _check_output(out: TwoModeDensityOperator, strict: bool) -> TwoModeDensityOperator:
    if strict and out.trace_deficit > TRACE_DEFICIT_TOL:
        raise TruncationError(f"channel output trace deficit {out.trace_deficit:.3e} exceeds {TRACE_DEFICIT_TOL}")
    return out


def apply_closed_form(
    rho: TwoModeDensityOperator,
    p: NoiseLossParams,
    *,
    n_env_max: int | None = None,
    strict: bool = False,
) -> TwoModeDensityOperator:
    """Send the received mode of ``rho`` through the noise-loss channel ``p``.

    Output photon numbers at or beyond the cutoff are dropped, so leakage
    shows up as ``trace_deficit``. With ``strict`` a deficit above 1e-6 raises.
    """
    if p.is_identity:
        return _check_output(TwoModeDensityOperator(rho.cutoff, rho.entries.copy()), strict)
    d = rho.d
    n_env = n_env_max if n_env_max is not None else env_photon_max(p.n_in)
    w = _env_weights(p.n_in, n_env)
    coef = _bs_coefficients(p.tau, d, n_env)
    kernels = {}
    idx = np.arange(d)
    for h in range(-(d - 1), d):
        a = idx + h
        ok = (a >= 0) & (a < d)
        c = np.zeros((n_env, d))
        c[:, ok] = coef[:, idx[ok], a[ok]]
        kern = np.einsum("n,nj,nl->jl", w, c, c)
        if np.any(kern):
            kernels[h] = kern
    return _check_output(_apply_shift_kernels(rho, kernels), strict)


def _beam_splitter_blocks(tau: float, k_max: int) -> list[np.ndarray]:
    """Beam-splitter unitary in each total-photon sector K <= k_max.

    Block K acts on |p>_signal |K-p>_env, p = 0..K, and is the exponential of
    theta * (a^dag b - a b^dag) with cos(theta) = sqrt(tau).
    """
    theta = math.acos(math.sqrt(tau))
    blocks = []
    for k in range(k_max + 1):
        g = np.zeros((k + 1, k + 1))
        for p in range(k):
            amp = math.sqrt((p + 1) * (k - p))
            g[p + 1, p] = amp
            g[p, p + 1] = -amp
        blocks.append(expm(theta * g))
    return blocks


def apply_dilation_oracle(
    rho: TwoModeDensityOperator,
    p: NoiseLossParams,
    env_cutoff: int | None = None,
    *,
    memory_limit: int = ORACLE_MEMORY_LIMIT,
) -> TwoModeDensityOperator:
    """Reference channel: beam splitter with a thermal environment, environment traced out."""
    d = rho.d
    n_env = env_cutoff if env_cutoff is not None else env_photon_max(p.n_in)
    if d * d * n_env > memory_limit:
        raise MemoryError(f"dilation oracle too large: d^2 * env_cutoff = {d * d * n_env} > {memory_limit}")
    w = _env_weights(p.n_in, n_env)
    blocks = _beam_splitter_blocks(p.tau, d - 1 + n_env - 1)
    # amp[n, q, a, j] = <a, q| U |j, n>
    n_q = d + n_env - 1
    amp = np.zeros((n_env, n_q, d, d))
    for n in range(n_env):
        for j in range(d):
            u = blocks[j + n]
            for a in range(min(d, j + n + 1)):
                amp[n, j + n - a, a, j] = u[a, j]
    sup = np.einsum("n,nqaj,nqbl->abjl", w, amp, amp)
    out = np.einsum("abjl,ijkl->iakb", sup, rho.as_tensor())
    return from_tensor(out, rho.cutoff)


def apply_sequence(
    rho: TwoModeDensityOperator,
    channels,
    *,
    work_cutoff: int | None = None,
    strict: bool = False,
) -> TwoModeDensityOperator:
    """Apply several channels in order, holding intermediates at ``work_cutoff``.

    Photons pushed past the output cutoff by one leg can be brought back by
    the next leg's loss, so composing at the output cutoff is not exact.
    """
    d = rho.d
    work = max(d, work_cutoff or d)
    cur = embed(rho, work) if work > d else rho
    for p in channels:
        cur = apply_closed_form(cur, p)
    out = truncate(cur, d) if work > d else cur
    return _check_output(out, strict)
