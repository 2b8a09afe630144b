"""Acceptance criteria 1-10.

Each test prints one ``ACCEPTANCE <k> PASS|FAIL`` line, then asserts.
Run alone with ``pytest tests/test_acceptance.py -v`` or as a script.
"""

import itertools
import math
import os
import sys
import time

import numpy as np
import pytest

from qispoof import cli, sweep
from qispoof.channel import NoiseLossParams, apply_closed_form, apply_dilation_oracle, apply_sequence, compose_half_trips
from qispoof.fock_core import uhlmann_fidelity
from qispoof.gaussian import (
    closed_form_fidelity,
    covariance_params,
    heterodyne_noisy_covariances,
    mc_covariance_oracle,
    symplectic_fidelity,
)
from qispoof.metrics import m_star_bounds, report
from qispoof.spoof_models import Strategy, build_direct_noise_free, build_heterodyne_noise_free
from qispoof.states import classically_correlated, cutoff_for_tail, thermal_probs, tmsv

WORKERS = max(1, min(4, os.cpu_count() or 1))


@pytest.fixture
def verdict(capsys):
    start = time.perf_counter()

    def emit(k, ok, detail):
        with capsys.disabled():
            elapsed = time.perf_counter() - start
            print(f"\nACCEPTANCE {k:>2} {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f}s]")
        return ok

    return emit


def test_1_direct_fidelity_matches_analytic(verdict):
    errs = {}
    for n in (0.01, 0.1, 1.0):
        pair = build_direct_noise_free(n, cutoff_for_tail(n, 1e-10))
        errs[n] = abs(uhlmann_fidelity(pair.rho_h0, pair.rho_h1) - 1 / math.sqrt(2 * n + 1))
    worst = max(errs.values())
    assert verdict(1, worst < 1e-6, f"max |F - (2N+1)^-1/2| = {worst:.2e} (tol 1e-6)")


def test_2_heterodyne_fidelity_matches_analytic(verdict):
    errs = {}
    for n in (0.01, 0.1, 1.0):
        pair = build_heterodyne_noise_free(n, cutoff_for_tail(n, 1e-10), quad_order=40)
        errs[n] = abs(uhlmann_fidelity(pair.rho_h0, pair.rho_h1) - 1 / math.sqrt(2 * n + 2))
    pair0 = build_heterodyne_noise_free(0.0, 35, quad_order=40)
    err0 = abs(uhlmann_fidelity(pair0.rho_h0, pair0.rho_h1) - 1 / math.sqrt(2))
    worst = max(errs.values())
    ok = worst < 1e-5 and err0 < 1e-6
    assert verdict(2, ok, f"max |F - (2N+2)^-1/2| = {worst:.2e} (tol 1e-5); N=0 err {err0:.2e} (tol 1e-6)")


def test_3_channel_oracle_and_composition(verdict):
    rho = tmsv(0.5, 8, strict=False)
    oracle_err = 0.0
    comp_err = 0.0
    for tau, n_in in [(1.0, 0.0), (0.5, 0.2), (0.1, 1.0)]:
        p = NoiseLossParams(tau, n_in=n_in)
        fast = apply_closed_form(rho, p)
        oracle_err = max(oracle_err, np.abs(fast.entries - apply_dilation_oracle(rho, p).entries).max())
        composed = apply_sequence(rho, compose_half_trips(p), work_cutoff=40)
        comp_err = max(comp_err, np.abs(fast.entries - composed.entries).max())
    ok = oracle_err < 1e-10 and comp_err < 1e-10
    assert verdict(3, ok, f"closed form vs dilation {oracle_err:.2e}; half-trips vs full {comp_err:.2e} (tol 1e-10)")


def test_4_classical_correlation_gives_unit_fidelity(verdict):
    worst = 0.0
    for n in (0.01, 0.1, 1.0):
        d = cutoff_for_tail(n, 1e-13)
        h0 = classically_correlated(thermal_probs(n, d), d)
        h1 = build_direct_noise_free(n, d).rho_h1
        worst = max(worst, abs(uhlmann_fidelity(h0, h1) - 1.0))
    assert verdict(4, worst < 1e-9, f"max |F - 1| = {worst:.2e} (tol 1e-9)")


def test_5_helstrom_sandwich(verdict):
    violations = []
    pe0 = None
    for n in np.linspace(0.0, 2.0, 20):
        n = float(n)
        for build in (build_direct_noise_free, build_heterodyne_noise_free):
            pair = build(n)
            rep = report(pair, 1)
            pe = rep.pe_helstrom
            if not rep.pe_lower - 1e-9 <= pe <= rep.pe_upper + 1e-9:
                violations.append((n, pair.strategy.value, rep.pe_lower, pe, rep.pe_upper))
            if n == 0.0 and build is build_direct_noise_free:
                pe0 = pe
    ok = not violations and pe0 == 0.5
    assert verdict(5, ok, f"40 pairs, {len(violations)} sandwich violations; direct N=0 P_e = {pe0!r}")


def test_6_sample_complexity_table(verdict):
    lo, hi = m_star_bounds(0.01, 0.01, Strategy.DIRECT_NUMBER)
    ok = abs(lo - 320.28) <= 0.01 and hi == 779
    assert verdict(6, ok, f"(lower, upper) = ({lo:.4f}, {hi}); target (320.28 +- 0.01, 779)")


def test_7_fig5_crossover(verdict):
    rows = sweep.fig5_rows(workers=WORKERS)
    gap = [(r["n_mean"], r["p_opt_qi_direct"] - r["p_opt_coherent_baseline"]) for r in rows]
    crossing = None
    for (n0, g0), (n1, g1) in zip(gap, gap[1:]):
        if g0 < 0 <= g1:
            crossing = n0 + (n1 - n0) * (-g0) / (g1 - g0)
            break
    ok = crossing is not None and 0.3 <= crossing <= 0.8 and all(g > 0 for n, g in gap if n > crossing)
    assert verdict(7, ok, f"crossover at N = {crossing} (window [0.3, 0.8])")


def test_8_fig6_ordering(verdict):
    rows = sweep.fig6_rows(cutoff=35, workers=WORKERS)
    ordered = all(r["fidelity_direct_M"] > r["fidelity_heterodyne_M"] for r in rows)
    floor = min(r["fidelity_direct_M"] for r in rows)
    trusted = all(r["trusted"] for r in rows)
    ok = len(rows) == 9 and ordered and floor > 0.99 and trusted
    assert verdict(8, ok, f"9 SNR points, direct > heterodyne everywhere: {ordered}; min direct F^M = {floor:.6f}")


def test_9_gaussian_closed_form_and_mc(verdict):
    worst = 0.0
    for n, tau, n_out in itertools.product((0.01, 0.1, 1.0), (1e-6, 0.1, 0.5), (0.01, 0.1, 1.0)):
        chn = NoiseLossParams(tau, n_out=n_out)
        v0, v1 = heterodyne_noisy_covariances(n, chn)
        worst = max(worst, abs(closed_form_fidelity(*covariance_params(n, chn)) - symplectic_fidelity(v0, v1)))
    chn = NoiseLossParams(0.25, n_out=0.1)
    cov, err = mc_covariance_oracle(0.5, chn, samples=100_000, seed=0)
    _, v1 = heterodyne_noisy_covariances(0.5, chn)
    z = float(np.max(np.abs(cov.entries - v1.entries) / err))
    ok = worst < 1e-9 and z <= 3.0
    assert verdict(9, ok, f"27-point closed form vs oracle {worst:.2e} (tol 1e-9); MC max |z| = {z:.2f} (tol 3)")


def test_10_determinism(verdict, tmp_path):
    same = {}
    for fig in sweep.FIGURES:
        blobs = []
        for run in ("a", "b"):
            out = tmp_path / run
            assert cli.main(["figure", fig, "--seed", "11", "--out", str(out), "--workers", str(WORKERS)]) == 0
            blobs.append((out / f"{fig}.csv").read_bytes())
        same[fig] = blobs[0] == blobs[1]
    ok = all(same.values())
    assert verdict(10, ok, "byte-identical CSV for " + ", ".join(f"{k}={v}" for k, v in same.items()))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
