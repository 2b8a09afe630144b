"""Command-line front end: ``qispoof figure figN`` and ``qispoof sweep --spec FILE``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import sweep
from .fock_core import DEFAULT_CUTOFF
from .spoof_models import DEFAULT_QUAD_ORDER, Strategy

EXIT_OK = 0
EXIT_SPEC = 2
EXIT_TRUNCATION = 3

_PLOT_COLUMNS = {
    "fig1": ("n_mean", ["fidelity_direct", "fidelity_heterodyne"], "linear", "linear"),
    "fig2": ("m_modes", ["fidelity_direct", "fidelity_heterodyne"], "log", "log"),
    "fig3": ("m_modes", ["pe_lower_direct", "pe_upper_direct", "pe_lower_heterodyne", "pe_upper_heterodyne"], "log", "log"),
    "fig4": ("pe_target", ["m_star_lower_direct", "m_star_upper_direct", "m_star_lower_heterodyne", "m_star_upper_heterodyne"], "log", "log"),
    "fig5": ("n_mean", ["p_opt_qi_direct", "p_opt_coherent_baseline"], "linear", "linear"),
    "fig6": ("snr", ["fidelity_direct_M", "fidelity_heterodyne_M"], "log", "linear"),
}


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x.strip()]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--cutoff", type=int, default=None, help=f"Fock cutoff d (default {DEFAULT_CUTOFF})")
    p.add_argument("--quad-order", type=int, default=None, help=f"quadrature order (default {DEFAULT_QUAD_ORDER})")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--allow-flagged", action="store_true", help="write rows that fail the truncation check")
    p.add_argument("--no-plot", action="store_true", help="skip the SVG")
    p.add_argument("--snr-min", type=float, default=None)
    p.add_argument("--snr-max", type=float, default=None)
    p.add_argument("--snr-points", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qispoof", description="Spoofing-detection simulator for quantum illumination")
    sub = parser.add_subparsers(dest="command", required=True)

    fig = sub.add_parser("figure", help="reproduce one of the figures")
    fig.add_argument("figure_id", choices=sweep.FIGURES)
    fig.add_argument("--n-mean", type=float, default=None, help="mean photon number (fig2-fig4)")
    _add_common(fig)

    sw = sub.add_parser("sweep", help="run a parameter sweep")
    sw.add_argument("--spec", type=Path, default=None, help="key = value spec file")
    sw.add_argument("--strategy", choices=[s.value for s in Strategy], default=None)
    sw.add_argument("--n-mean", type=_floats, default=None, help="comma-separated values")
    sw.add_argument("--modes", type=_ints, default=None, dest="m_modes")
    sw.add_argument("--tau", type=_floats, default=None)
    sw.add_argument("--n-out", type=_floats, default=None)
    sw.add_argument("--pe-target", type=float, default=None)
    sw.add_argument("--mc-samples", type=int, default=None)
    _add_common(sw)
    return parser


def write_svg(rows: list[dict], path: Path, x: str, ys: list[str], xscale: str = "linear", yscale: str = "linear",
              title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "qispoof"
    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [r[x] for r in rows]
    for y in ys:
        pts = [(a, r[y]) for a, r in zip(xs, rows) if r[y] is not None]
        if yscale == "log":
            pts = [(a, b) for a, b in pts if b > 0]
        ax.plot([a for a, _ in pts], [b for _, b in pts], marker=".", label=y)
    ax.set_xscale(xscale)
    ax.set_yscale(yscale)
    ax.set_xlabel(x)
    ax.set_title(title)
    ax.legend(fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _check_trust(rows: list[dict], allow_flagged: bool) -> None:
    bad = sweep.untrusted(rows)
    if bad and not allow_flagged:
        raise sweep.UntrustedResult(bad)


def _run_figure(args) -> Path:
    options = {"workers": args.workers}
    for key in ("cutoff", "quad_order", "n_mean", "snr_min", "snr_max", "snr_points"):
        val = getattr(args, key)
        if val is not None:
            options[key] = val
    rows = sweep.run_figure(args.figure_id, **options)
    _check_trust(rows, args.allow_flagged)
    args.out.mkdir(parents=True, exist_ok=True)
    path = args.out / f"{args.figure_id}.csv"
    sweep.write_csv(rows, path)
    if not args.no_plot:
        x, ys, xs, ysc = _PLOT_COLUMNS[args.figure_id]
        write_svg(rows, path.with_suffix(".svg"), x, ys, xs, ysc, args.figure_id)
    return path


def _run_sweep(args) -> Path:
    values = {}
    if args.spec is not None:
        try:
            text = args.spec.read_text()
        except OSError as exc:
            raise sweep.SpecError(f"cannot read spec file: {exc}") from None
        values = sweep.parse_spec_text(text, str(args.spec))
    overrides = {
        "strategy": Strategy(args.strategy) if args.strategy else None,
        "n_mean": args.n_mean,
        "m_modes": args.m_modes,
        "tau": args.tau,
        "n_out": args.n_out,
        "snr_min": args.snr_min,
        "snr_max": args.snr_max,
        "snr_points": args.snr_points,
        "pe_target": args.pe_target,
        "cutoff": args.cutoff,
        "quad_order": args.quad_order,
        "seed": args.seed,
        "mc_samples": args.mc_samples,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    spec = sweep.make_spec(values)
    rows = sweep.run_sweep(spec, workers=args.workers)
    _check_trust(rows, args.allow_flagged)
    path = args.out / spec.out
    sweep.write_csv(rows, path)
    return path


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        path = _run_figure(args) if args.command == "figure" else _run_sweep(args)
    except sweep.SpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    except sweep.UntrustedResult as exc:
        print(f"truncation: {exc}; raise --cutoff or pass --allow-flagged", file=sys.stderr)
        return EXIT_TRUNCATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SPEC
    print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
