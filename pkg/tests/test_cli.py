import csv
import math

import pytest

from qispoof import cli, sweep
from qispoof.metrics import report
from qispoof.spoof_models import Strategy, build_direct_noise_free


def _read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_figure_csv_is_byte_identical(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["figure", "fig1", "--out", str(a), "--seed", "5"]) == 0
    assert cli.main(["figure", "fig1", "--out", str(b), "--seed", "5"]) == 0
    assert (a / "fig1.csv").read_bytes() == (b / "fig1.csv").read_bytes()
    assert (a / "fig1.svg").read_bytes() == (b / "fig1.svg").read_bytes()


def test_fig1_starts_at_expected_values(tmp_path):
    cli.main(["figure", "fig1", "--out", str(tmp_path), "--no-plot"])
    first = _read(tmp_path / "fig1.csv")[0]
    assert float(first["fidelity_direct"]) == 1.0
    assert float(first["fidelity_heterodyne"]) == pytest.approx(0.70711, abs=1e-5)


def test_floats_have_17_significant_digits():
    assert sweep.format_value(0.1) == "1.0000000000000001e-01"
    assert sweep.format_value(3) == "3"
    assert sweep.format_value(None) == ""


def test_single_point_sweep_matches_library(tmp_path):
    code = cli.main(["sweep", "--n-mean", "0.3", "--modes", "1", "--out", str(tmp_path)])
    assert code == 0
    (row,) = _read(tmp_path / "sweep.csv")
    rep = report(build_direct_noise_free(0.3))
    assert row["fidelity"] == sweep.format_value(rep.fidelity_single_mode)
    assert row["pe_helstrom"] == sweep.format_value(rep.pe_helstrom)
    assert row["m_star_upper"] == str(rep.m_star_upper)


def test_spec_file_and_flag_override(tmp_path):
    spec = tmp_path / "grid.txt"
    spec.write_text("# heterodyne grid\nstrategy = heterodyne\nn_mean = 0.1, 0.2\ntau = 0.5\nn_out = 0.1\nout = g.csv\n")
    assert cli.main(["sweep", "--spec", str(spec), "--n-mean", "0.4", "--out", str(tmp_path)]) == 0
    rows = _read(tmp_path / "g.csv")
    assert [float(r["n_mean"]) for r in rows] == [0.4]
    assert rows[0]["strategy"] == "heterodyne"


def test_snr_axis():
    spec = sweep.make_spec({"n_mean": [0.01], "tau": [1e-6], "snr_min": 0.1, "snr_max": 10.0, "snr_points": 3})
    pts = spec.points()
    assert [p["n_out"] for p in pts] == pytest.approx([0.1, 0.01, 0.001])


@pytest.mark.parametrize("text", ["n_mean 0.1\n", "bogus = 1\n", "n_mean = 0.1\ncutoff = many\n"])
def test_malformed_spec_exits_2(tmp_path, capsys, text):
    spec = tmp_path / "bad.txt"
    spec.write_text(text)
    assert cli.main(["sweep", "--spec", str(spec), "--out", str(tmp_path)]) == cli.EXIT_SPEC
    assert "bad.txt:" in capsys.readouterr().err
    assert not (tmp_path / "sweep.csv").exists()


def test_empty_grid_writes_nothing(tmp_path):
    spec = tmp_path / "empty.txt"
    spec.write_text("n_mean =\n")
    assert cli.main(["sweep", "--spec", str(spec), "--out", str(tmp_path)]) == cli.EXIT_SPEC
    assert not (tmp_path / "sweep.csv").exists()


def test_untrusted_rows_exit_3(tmp_path):
    args = ["sweep", "--n-mean", "3.0", "--cutoff", "8", "--out", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_TRUNCATION
    assert not (tmp_path / "sweep.csv").exists()
    assert cli.main(args + ["--allow-flagged"]) == 0
    (row,) = _read(tmp_path / "sweep.csv")
    assert row["trusted"] == "false"


def test_parallel_matches_serial(tmp_path):
    base = ["sweep", "--strategy", "heterodyne", "--n-mean", "0.1,0.5", "--tau", "0.5",
            "--n-out", "0.1,0.2", "--mc-samples", "100000", "--seed", "9"]
    cli.main(base + ["--out", str(tmp_path / "s")])
    cli.main(base + ["--out", str(tmp_path / "p"), "--workers", "2"])
    assert (tmp_path / "s" / "sweep.csv").read_bytes() == (tmp_path / "p" / "sweep.csv").read_bytes()
    rows = _read(tmp_path / "s" / "sweep.csv")
    assert all(float(r["mc_max_zscore"]) < 4.5 for r in rows)


def test_heterodyne_vacuum_noise_free_row():
    row = sweep.evaluate_point({"n_mean": 0.0, "m_modes": 1, "tau": 1.0, "n_out": 0.0, "snr": math.inf},
                               Strategy.HETERODYNE_COHERENT, 35, 40, 0.01)
    assert row["fidelity"] == pytest.approx(1 / math.sqrt(2), abs=1e-6)
    assert row["m_star_upper"] == math.inf
