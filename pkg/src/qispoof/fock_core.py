"""Truncated Fock-space linear algebra.

Two-mode operators are stored as ``d**2 x d**2`` complex arrays with the
composite index ``idler * d + received``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_CUTOFF = 35

HERMITIAN_TOL = 1e-12
PSD_CLIP = -1e-10
TRACE_DEFICIT_TOL = 1e-6
FIDELITY_OVERSHOOT = 1e-6

IDLER = "idler"
RECEIVED = "received"


class TruncationError(RuntimeError):
    """Raised when a state leaks more probability past the cutoff than allowed."""


class NotHermitianError(ValueError):
    pass


@dataclass(frozen=True)
class FockCutoff:
    """Single-mode Fock dimension; the highest retained photon number is ``d - 1``."""

    d: int = DEFAULT_CUTOFF

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"cutoff dimension must be an integer >= 2, got {self.d!r}")

    @property
    def two_mode_dim(self) -> int:
        return self.d * self.d


def as_cutoff(cutoff: FockCutoff | int) -> FockCutoff:
    if isinstance(cutoff, FockCutoff):
        return cutoff
    return FockCutoff(int(cutoff))


@dataclass(frozen=True, eq=False)
class SingleModeOperator:
    cutoff: FockCutoff
    entries: np.ndarray

    def __post_init__(self):
        d = self.cutoff.d
        if self.entries.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix, got {self.entries.shape}")
        self.entries.setflags(write=False)

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    @property
    def trace_deficit(self) -> float:
        return 1.0 - self.trace

    def mean_photon(self) -> float:
        return float(np.real(np.trace(number_operator(self.cutoff.d) @ self.entries)))


@dataclass(frozen=True, eq=False)
class TwoModeDensityOperator:
    """Dense operator on idler (x) received.

    ``trace_deficit`` is ``1 - tr(rho)``; it measures leakage past the cutoff
    and is never renormalized away.
    """

    cutoff: FockCutoff
    entries: np.ndarray
    pure_state: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        n = self.cutoff.two_mode_dim
        if self.entries.shape != (n, n):
            raise ValueError(f"expected a {n}x{n} matrix, got {self.entries.shape}")
        self.entries.setflags(write=False)

    @property
    def d(self) -> int:
        return self.cutoff.d

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.entries)))

    @property
    def trace_deficit(self) -> float:
        return 1.0 - self.trace

    @property
    def trusted(self) -> bool:
        return self.trace_deficit < TRACE_DEFICIT_TOL

    def as_tensor(self) -> np.ndarray:
        """View as ``rho[i, j, k, l]`` = <i_I j_R| rho |k_I l_R>."""
        d = self.d
        return self.entries.reshape(d, d, d, d)

    def expectation(self, op: np.ndarray) -> complex:
        return complex(np.trace(self.entries @ op))


def from_tensor(t: np.ndarray, cutoff: FockCutoff) -> TwoModeDensityOperator:
    n = cutoff.two_mode_dim
    return TwoModeDensityOperator(cutoff, np.ascontiguousarray(t.reshape(n, n)))


def annihilation(d: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, d, dtype=float)), k=1)


def number_operator(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=float))


def projector(n: int, d: int) -> np.ndarray:
    if not 0 <= n < d:
        raise ValueError(f"photon number {n} outside cutoff d={d}")
    p = np.zeros((d, d))
    p[n, n] = 1.0
    return p


def tensor(a: SingleModeOperator, b: SingleModeOperator) -> TwoModeDensityOperator:
    """Idler operator ``a`` (x) received operator ``b``."""
    if a.cutoff != b.cutoff:
        raise ValueError(f"cutoff mismatch: {a.cutoff.d} vs {b.cutoff.d}")
    return TwoModeDensityOperator(a.cutoff, np.kron(a.entries, b.entries))


def partial_trace(rho: TwoModeDensityOperator, which: str) -> SingleModeOperator:
    """Trace out ``which`` ("idler" or "received"), returning the other mode."""
    t = rho.as_tensor()
    if which == IDLER:
        red = np.einsum("ijil->jl", t)
    elif which == RECEIVED:
        red = np.einsum("ijkj->ik", t)
    else:
        raise ValueError(f"mode selector must be {IDLER!r} or {RECEIVED!r}, got {which!r}")
    return SingleModeOperator(rho.cutoff, red)


def _raw(op) -> np.ndarray:
    return op.entries if hasattr(op, "entries") else np.asarray(op)


def check_hermitian(x: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(x), initial=0.0)))
    err = float(np.max(np.abs(x - x.conj().T), initial=0.0))
    if err > tol * scale:
        raise NotHermitianError(f"operator is not Hermitian (max deviation {err:.3e})")


def psd_eigh(x: np.ndarray, clip: float = PSD_CLIP):
    """Eigendecomposition of a PSD matrix with round-off negativity clipped to 0.

    Raises ValueError when an eigenvalue is more negative than ``clip``.
    Eigenvalues below the numerical rank threshold (dimension * eps * largest)
    are also set to 0; their square roots would otherwise be pure noise.
    """
    w, v = np.linalg.eigh(x)
    if w.size and w[0] < clip:
        raise ValueError(f"operator is not positive semidefinite (min eigenvalue {w[0]:.3e})")
    floor = w.size * np.finfo(float).eps * max(float(w[-1]) if w.size else 0.0, 0.0)
    return np.where(w > floor, w, 0.0), v


def block_indices(*mats: np.ndarray) -> list[np.ndarray]:
    """Index sets of the common block-diagonal structure of ``mats``.

    Found from the exact nonzero pattern; phase-covariant two-mode states split
    by photon-number difference, which keeps every eigenproblem small.
    """
    from scipy.sparse import csr_matrix
    from scipy.sparse.csgraph import connected_components

    pattern = np.zeros(mats[0].shape, dtype=bool)
    for m in mats:
        pattern |= m != 0
    n_comp, labels = connected_components(csr_matrix(pattern), directed=False)
    order = np.argsort(labels, kind="stable")
    splits = np.cumsum(np.bincount(labels, minlength=n_comp))[:-1]
    return [blk for blk in np.split(order, splits)]


def herm_sqrt(op) -> np.ndarray:
    x = _raw(op)
    check_hermitian(x)
    w, v = psd_eigh(0.5 * (x + x.conj().T))
    return (v * np.sqrt(w)) @ v.conj().T


def trace_norm(op) -> float:
    """Sum of absolute eigenvalues of a Hermitian operator."""
    x = _raw(op)
    check_hermitian(x)
    x = 0.5 * (x + x.conj().T)
    total = 0.0
    for blk in block_indices(x):
        total += float(np.sum(np.abs(np.linalg.eigvalsh(x[np.ix_(blk, blk)]))))
    return total


def is_pure(rho: TwoModeDensityOperator) -> bool:
    return rho.pure_state is not None


def pure_fidelity(psi: np.ndarray, r1) -> float:
    """sqrt(<psi| r1 |psi>) for a normalized or truncated ket ``psi``."""
    val = float(np.real(np.vdot(psi, _raw(r1) @ psi)))
    return float(np.sqrt(max(val, 0.0)))


def uhlmann_fidelity(r0, r1, *, use_pure: bool = True) -> float:
    """Root fidelity tr sqrt(sqrt(r0) r1 sqrt(r0)).

    Evaluated blockwise as the nuclear norm of ``sqrt(r0) @ sqrt(r1)``, which
    avoids taking square roots of round-off-level eigenvalues of the sandwich
    product. When ``r0`` carries its ket the rank-one formula is used instead.
    """
    if use_pure and isinstance(r0, TwoModeDensityOperator) and r0.pure_state is not None:
        f = pure_fidelity(r0.pure_state, r1)
    else:
        a, b = _raw(r0), _raw(r1)
        if a.shape != b.shape:
            raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
        f = 0.0
        for blk in block_indices(a, b):
            ix = np.ix_(blk, blk)
            prod = herm_sqrt(a[ix]) @ herm_sqrt(b[ix])
            f += float(np.sum(np.linalg.svd(prod, compute_uv=False)))
    if f > 1.0 + FIDELITY_OVERSHOOT:
        raise TruncationError(f"fidelity {f:.9f} exceeds 1; cutoff too small")
    return f


def embed(rho: TwoModeDensityOperator, d_new: int) -> TwoModeDensityOperator:
    """Zero-pad ``rho`` into a larger cutoff."""
    d = rho.d
    if d_new < d:
        raise ValueError(f"cannot embed d={d} into smaller d={d_new}")
    t = np.zeros((d_new, d_new, d_new, d_new), dtype=complex)
    t[:d, :d, :d, :d] = rho.as_tensor()
    psi = None
    if rho.pure_state is not None:
        psi = np.zeros((d_new, d_new), dtype=rho.pure_state.dtype)
        psi[:d, :d] = rho.pure_state.reshape(d, d)
        psi = psi.reshape(-1)
    n = d_new * d_new
    return TwoModeDensityOperator(FockCutoff(d_new), t.reshape(n, n), pure_state=psi)


def truncate(rho: TwoModeDensityOperator, d_new: int) -> TwoModeDensityOperator:
    """Keep the block with both photon numbers below ``d_new``."""
    d = rho.d
    if d_new > d:
        raise ValueError(f"cannot truncate d={d} to larger d={d_new}")
    t = np.ascontiguousarray(rho.as_tensor()[:d_new, :d_new, :d_new, :d_new])
    return from_tensor(t, FockCutoff(d_new))
