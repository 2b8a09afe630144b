"""Grid sweeps and figure tables.

Every table is a list of ordered dicts written as CSV with floats in
17-significant-digit scientific notation, so equal inputs give byte-identical
files.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import metrics
from .channel import NoiseLossParams
from .fock_core import DEFAULT_CUTOFF, TRACE_DEFICIT_TOL
from .gaussian import covariance_params, gaussian_fidelity, heterodyne_noisy_covariances, mc_covariance_oracle
from .spoof_models import (
    DEFAULT_QUAD_ORDER,
    QUAD_RESIDUAL_TOL,
    Strategy,
    build_coherent_baseline,
    build_direct_noise_free,
    build_direct_noisy,
    build_heterodyne_noise_free,
)

FIGURES = ("fig1", "fig2", "fig3", "fig4", "fig5", "fig6")


class SpecError(ValueError):
    """Malformed sweep specification."""


class UntrustedResult(RuntimeError):
    def __init__(self, rows):
        self.rows = rows
        worst = max(r.get("trace_deficit", 0.0) for r in rows)
        super().__init__(f"{len(rows)} row(s) exceed the truncation tolerance (worst trace deficit {worst:.3e})")


def format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return f"{v:.16e}"
    if v is None:
        return ""
    return str(v)


def to_csv(rows: list[dict]) -> str:
    if not rows:
        raise ValueError("no rows to write")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    header = list(rows[0])
    writer.writerow(header)
    for r in rows:
        writer.writerow([format_value(r[k]) for k in header])
    return buf.getvalue()


def write_csv(rows: list[dict], path: Path) -> None:
    text = to_csv(rows)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _parallel_map(fn, items, workers: int):
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- sweeps


@dataclass
class SweepSpec:
    strategy: Strategy = Strategy.DIRECT_NUMBER
    n_mean: list[float] = field(default_factory=lambda: [0.01])
    m_modes: list[int] = field(default_factory=lambda: [1])
    tau: list[float] = field(default_factory=lambda: [1.0])
    n_out: list[float] | None = None
    snr_min: float | None = None
    snr_max: float | None = None
    snr_points: int | None = None
    pe_target: float = 0.01
    cutoff: int = DEFAULT_CUTOFF
    quad_order: int = DEFAULT_QUAD_ORDER
    seed: int = 0
    mc_samples: int = 0
    out: str = "sweep.csv"

    def validate(self) -> None:
        for name in ("n_mean", "m_modes", "tau"):
            if not getattr(self, name):
                raise SpecError(f"grid {name!r} is empty")
        snr = [self.snr_min, self.snr_max, self.snr_points]
        if any(v is not None for v in snr):
            if any(v is None for v in snr):
                raise SpecError("snr_min, snr_max and snr_points must be given together")
            if self.n_out is not None:
                raise SpecError("give either n_out or an snr range, not both")
            if self.snr_points < 1 or self.snr_min <= 0 or self.snr_max < self.snr_min:
                raise SpecError("snr range must satisfy 0 < snr_min <= snr_max and snr_points >= 1")
        elif self.n_out is not None and not self.n_out:
            raise SpecError("grid 'n_out' is empty")
        if any(n < 0 for n in self.n_mean):
            raise SpecError("n_mean values must be >= 0")
        if any(m < 1 for m in self.m_modes):
            raise SpecError("m_modes values must be >= 1")
        if any(not 0 <= t <= 1 for t in self.tau):
            raise SpecError("tau values must lie in [0, 1]")
        if self.cutoff < 2:
            raise SpecError("cutoff must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise SpecError("seed must be a 64-bit unsigned integer")

    def noise_axis(self, n_mean: float) -> list[tuple[float | None, float]]:
        """(snr, n_out) pairs for one n_mean."""
        if self.snr_points is not None:
            snrs = np.logspace(math.log10(self.snr_min), math.log10(self.snr_max), self.snr_points)
            return [(float(s), n_mean / float(s)) for s in snrs]
        outs = self.n_out if self.n_out is not None else [0.0]
        return [(n_mean / o if o > 0 else math.inf, o) for o in outs]

    def points(self) -> list[dict]:
        self.validate()
        pts = []
        for n, m, tau in itertools.product(self.n_mean, self.m_modes, self.tau):
            for snr, n_out in self.noise_axis(n):
                if tau == 1.0 and n_out > 0:
                    raise SpecError("tau = 1 admits no output noise")
                pts.append({"n_mean": n, "m_modes": m, "tau": tau, "n_out": n_out, "snr": snr})
        if not pts:
            raise SpecError("sweep grid is empty")
        return pts


_LIST_KEYS = {"n_mean": float, "m_modes": int, "tau": float, "n_out": float}
_SCALAR_KEYS = {
    "strategy": Strategy,
    "snr_min": float,
    "snr_max": float,
    "snr_points": int,
    "pe_target": float,
    "cutoff": int,
    "quad_order": int,
    "seed": int,
    "mc_samples": int,
    "out": str,
}


def _convert(key: str, raw: str):
    if key in _LIST_KEYS:
        typ = _LIST_KEYS[key]
        items = [x.strip() for x in raw.split(",") if x.strip()]
        return [typ(x) for x in items]
    return _SCALAR_KEYS[key](raw.strip())


def parse_spec_text(text: str, source: str = "<spec>") -> dict:
    """Parse flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise SpecError(f"{source}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, raw = (x.strip() for x in body.split("=", 1))
        key = key.replace("-", "_")
        if key not in _LIST_KEYS and key not in _SCALAR_KEYS:
            raise SpecError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _convert(key, raw)
        except ValueError as exc:
            raise SpecError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    return values


def make_spec(values: dict) -> SweepSpec:
    known = {f.name for f in fields(SweepSpec)}
    return SweepSpec(**{k: v for k, v in values.items() if k in known and v is not None})


def evaluate_point(point: dict, strategy: Strategy, cutoff: int, quad_order: int, pe_target: float,
                   seed: int = 0, mc_samples: int = 0, index: int = 0) -> dict:
    """Compute one sweep row."""
    n, m, tau, n_out = point["n_mean"], point["m_modes"], point["tau"], point["n_out"]
    row = {"strategy": strategy.value, **point, "cutoff": cutoff, "quad_order": quad_order}
    noise_free = tau == 1.0 and n_out == 0.0
    chn = NoiseLossParams(tau, n_out=n_out)
    row["n_in"] = chn.n_in

    if strategy is Strategy.COHERENT_BASELINE:
        row.update(p_opt=build_coherent_baseline(n, cutoff, quad_order), trace_deficit=0.0,
                   quad_residual=0.0, trusted=True)
        return row

    pair, f = None, None
    quad_residual, deficit = 0.0, 0.0
    if strategy is Strategy.DIRECT_NUMBER:
        pair = (build_direct_noise_free(n, cutoff, strict=False) if noise_free
                else build_direct_noisy(n, cutoff, chn, strict=False))
    elif noise_free:
        pair = build_heterodyne_noise_free(n, cutoff, quad_order, strict=False)
    else:
        v0, v1 = heterodyne_noisy_covariances(n, chn)
        f = gaussian_fidelity(v0, v1, covariance_params(n, chn))

    if pair is not None:
        rep = metrics.report(pair, m, pe_target, helstrom=(m == 1))
        f = rep.fidelity_single_mode
        deficit = pair.trace_deficit
        quad_residual = pair.quad_residual
        pe_hel = rep.pe_helstrom
        lo, hi = rep.pe_lower, rep.pe_upper
    else:
        pe_hel = None
        lo, hi = metrics.pe_bounds_from_fidelity(f, m, pure_h0=False)
    plo, phi = metrics.pe_bounds(n, m, strategy)
    ms_lo, ms_hi = metrics.m_star_bounds(n, pe_target, strategy) if n > 0 else (math.inf, math.inf)
    logf = metrics.log_fidelity(f, m)
    row.update(
        fidelity=f,
        log10_fidelity_M=logf / math.log(10.0),
        fidelity_M=math.exp(logf),
        pe_helstrom=pe_hel,
        pe_lower_fidelity=lo,
        pe_upper_fidelity=hi,
        pe_lower_printed=plo,
        pe_upper_printed=phi,
        pe_target=pe_target,
        m_star_lower=ms_lo,
        m_star_upper=ms_hi,
        trace_deficit=deficit,
        quad_residual=quad_residual,
        trusted=deficit < TRACE_DEFICIT_TOL and quad_residual <= QUAD_RESIDUAL_TOL,
    )
    if mc_samples:
        row["mc_max_zscore"] = _mc_zscore(n, chn, mc_samples, seed, index) if strategy is Strategy.HETERODYNE_COHERENT else None
    return row


def _mc_zscore(n, chn, samples, seed, index) -> float:
    row_seed = int(np.random.SeedSequence([seed, index]).generate_state(1, dtype=np.uint64)[0])
    cov, err = mc_covariance_oracle(n, chn, samples, row_seed)
    _, v1 = heterodyne_noisy_covariances(n, chn)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.abs(cov.entries - v1.entries) / err
    return float(np.nanmax(z))


def _eval_star(args):
    return evaluate_point(*args)


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[dict]:
    pts = spec.points()
    jobs = [(p, spec.strategy, spec.cutoff, spec.quad_order, spec.pe_target, spec.seed, spec.mc_samples, i)
            for i, p in enumerate(pts)]
    return _parallel_map(_eval_star, jobs, workers)


# ---------------------------------------------------------------- figures


def fig1_rows(**_) -> list[dict]:
    rows = []
    for n in np.linspace(0.0, 5.0, 51):
        n = float(n)
        rows.append({
            "n_mean": n,
            "m_modes": 1,
            "fidelity_direct": metrics.analytic_fidelity(n, Strategy.DIRECT_NUMBER),
            "fidelity_heterodyne": metrics.analytic_fidelity(n, Strategy.HETERODYNE_COHERENT),
        })
    return rows


def _m_grid(lo_exp: int = 0, hi_exp: int = 5, per_decade: int = 10) -> list[int]:
    grid = np.unique(np.round(np.logspace(lo_exp, hi_exp, per_decade * (hi_exp - lo_exp) + 1)).astype(int))
    return [int(m) for m in grid]


def fig2_rows(n_mean: float = 0.01, **_) -> list[dict]:
    rows = []
    for m in _m_grid():
        ld = metrics.log_fidelity(metrics.analytic_fidelity(n_mean, Strategy.DIRECT_NUMBER), m)
        lh = metrics.log_fidelity(metrics.analytic_fidelity(n_mean, Strategy.HETERODYNE_COHERENT), m)
        rows.append({
            "n_mean": n_mean,
            "m_modes": m,
            "fidelity_direct": math.exp(ld),
            "fidelity_heterodyne": math.exp(lh),
            "log10_fidelity_direct": ld / math.log(10.0),
            "log10_fidelity_heterodyne": lh / math.log(10.0),
        })
    return rows


def fig3_rows(n_mean: float = 0.01, **_) -> list[dict]:
    rows = []
    f_direct = metrics.analytic_fidelity(n_mean, Strategy.DIRECT_NUMBER)
    for m in _m_grid(0, 4):
        dlo, dhi = metrics.pe_bounds_direct(n_mean, m)
        hlo, hhi = metrics.pe_bounds_heterodyne(n_mean, m)
        flo, fhi = metrics.pe_bounds_from_fidelity(f_direct, m, pure_h0=True)
        rows.append({
            "n_mean": n_mean,
            "m_modes": m,
            "pe_lower_direct": dlo,
            "pe_upper_direct": dhi,
            "pe_lower_heterodyne": hlo,
            "pe_upper_heterodyne": hhi,
            "pe_lower_direct_fidelity": flo,
            "pe_upper_direct_fidelity": fhi,
        })
    return rows


def fig4_rows(n_mean: float = 0.01, **_) -> list[dict]:
    rows = []
    for pe in np.logspace(-6, math.log10(0.24), 41):
        pe = float(pe)
        dlo, dhi = metrics.m_star_bounds(n_mean, pe, Strategy.DIRECT_NUMBER)
        hlo, hhi = metrics.m_star_bounds(n_mean, pe, Strategy.HETERODYNE_COHERENT)
        rows.append({
            "n_mean": n_mean,
            "pe_target": pe,
            "m_star_lower_direct": dlo,
            "m_star_upper_direct": dhi,
            "m_star_lower_heterodyne": hlo,
            "m_star_upper_heterodyne": hhi,
        })
    return rows


def _fig5_point(args) -> dict:
    n, cutoff, quad_order = args
    pair = build_direct_noise_free(n, cutoff, strict=False)
    return {
        "n_mean": n,
        "p_opt_qi_direct": 1.0 - metrics.helstrom_error(pair),
        "p_opt_coherent_baseline": build_coherent_baseline(n, cutoff, quad_order),
        "trace_deficit": pair.trace_deficit,
        "trusted": pair.trusted,
    }


def fig5_rows(cutoff: int = DEFAULT_CUTOFF, quad_order: int = DEFAULT_QUAD_ORDER, workers: int = 1, **_) -> list[dict]:
    grid = [float(n) for n in np.round(np.linspace(0.05, 2.0, 40), 10)]
    return _parallel_map(_fig5_point, [(n, cutoff, quad_order) for n in grid], workers)


FIG6_N_MEAN = 0.01
FIG6_MODES = 10_000
FIG6_TAU = 1e-6


def _fig6_point(args) -> dict:
    snr, cutoff = args
    n = FIG6_N_MEAN
    chn = NoiseLossParams(FIG6_TAU, n_out=n / snr)
    pair = build_direct_noisy(n, cutoff, chn, strict=False)
    fd = metrics.single_mode_fidelity(pair)
    v0, v1 = heterodyne_noisy_covariances(n, chn)
    fh = gaussian_fidelity(v0, v1, covariance_params(n, chn))
    ld = metrics.log_fidelity(fd, FIG6_MODES)
    lh = metrics.log_fidelity(fh, FIG6_MODES)
    return {
        "snr": snr,
        "n_mean": n,
        "m_modes": FIG6_MODES,
        "tau": FIG6_TAU,
        "n_out": chn.n_out,
        "n_in": chn.n_in,
        "fidelity_direct": fd,
        "fidelity_heterodyne": fh,
        "fidelity_direct_M": math.exp(ld),
        "fidelity_heterodyne_M": math.exp(lh),
        "log10_fidelity_direct_M": ld / math.log(10.0),
        "log10_fidelity_heterodyne_M": lh / math.log(10.0),
        "trace_deficit": pair.trace_deficit,
        "trusted": pair.trusted,
    }


def fig6_rows(cutoff: int = DEFAULT_CUTOFF, workers: int = 1, snr_min: float = 1e-2, snr_max: float = 1e2,
              snr_points: int = 9, **_) -> list[dict]:
    snrs = [float(s) for s in np.logspace(math.log10(snr_min), math.log10(snr_max), snr_points)]
    return _parallel_map(_fig6_point, [(s, cutoff) for s in snrs], workers)


FIGURE_BUILDERS = {
    "fig1": fig1_rows,
    "fig2": fig2_rows,
    "fig3": fig3_rows,
    "fig4": fig4_rows,
    "fig5": fig5_rows,
    "fig6": fig6_rows,
}


def run_figure(fig_id: str, **options) -> list[dict]:
    if fig_id not in FIGURE_BUILDERS:
        raise SpecError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURES)}")
    return FIGURE_BUILDERS[fig_id](**options)


def untrusted(rows: list[dict]) -> list[dict]:
    return [r for r in rows if r.get("trusted", True) is False]
