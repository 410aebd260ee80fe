import csv
import io
import math

import numpy as np
import pytest

from cavitybell import cli
from cavitybell.bell import scan_curve_fig2


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def records(text, delimiter=","):
    return list(csv.DictReader(io.StringIO(text), delimiter=delimiter))


def test_table1_empty_cavity_row(capsys):
    code, out, _ = run(capsys, "table1", "--n", "0", "--case", "I", "--scheme", "phase", "--subcase", "equal")
    assert code == 0
    (row,) = records(out)
    assert (row["case"], row["scheme"], row["subcase"], row["S_display"]) == ("I", "A", "i", "0.00")


def test_table1_subset_rows_and_order(capsys):
    code, out, _ = run(capsys, "table1", "--n", "0,1", "--scheme", "phase", "--eta-max", "6")
    assert code == 0
    rows = records(out)
    assert [(r["case"], r["subcase"]) for r in rows] == [
        ("I", "i"), ("I", "ii"), ("II", "i"), ("II", "ii"), ("III", "i"), ("III", "ii")]
    assert rows[1]["S_display"] == "2.83"


def test_fig1_default_rows(capsys):
    code, out, _ = run(capsys, "fig1")
    assert code == 0
    rows = records(out)
    assert len(rows) == 25001
    assert float(rows[0]["value"]) == 0
    assert abs(float(rows[3300]["value"])) > 0.98
    assert float(rows[3300]["eta2"]) == pytest.approx(3.3)


def test_fig2_default_matches_library(capsys):
    code, out, _ = run(capsys, "fig2")
    assert code == 0
    rows = records(out)
    data = scan_curve_fig2()
    assert len(rows) == len(data)
    got = np.array([[float(r["eta2"]), float(r["smax"])] for r in rows])
    np.testing.assert_allclose(got, data, rtol=1e-5, atol=1e-12)
    # the expected window 12.0 - 12.7 is approximate; S drops below 2 near 12.68
    window = got[(got[:, 0] >= 12.0) & (got[:, 0] <= 12.65)]
    assert window[:, 1].min() >= 2


def test_fig2_first_atom_idle(capsys):
    # eta1 = 0: alpha vanishes and S = 4 |beta| = 2 |cos(2 eta2)|
    code, out, _ = run(capsys, "fig2", "--eta1", "0", "--step", "0.1")
    assert code == 0
    for r in records(out):
        eta2 = float(r["eta2"])
        assert float(r["smax"]) == pytest.approx(2 * abs(math.cos(2 * eta2)), rel=1e-5, abs=1e-12)


def test_correlate_phase_peak(capsys):
    code, out, _ = run(capsys, "correlate", "--case", "II", "--scheme", "phase", "--n", "0",
                       "--eta", "pi/sqrt(2)", "--a1", "0", "--a2", "0")
    assert code == 0
    (row,) = records(out)
    assert float(row["E_generic"]) == pytest.approx(0.766, abs=2e-3)
    assert row["check"] == "PASS"
    assert float(row["abs_diff"]) < 1e-10


def test_correlate_bloch_single_branch(capsys):
    code, out, _ = run(capsys, "correlate", "--case", "III", "--scheme", "bloch", "--n", "0",
                       "--eta1", "pi/2", "--eta2", "pi/2")
    assert code == 0
    (row,) = records(out)
    assert float(row["E_generic"]) == pytest.approx(-1)


def test_correlate_consistency_failure_exit_code(capsys, monkeypatch):
    monkeypatch.setattr(cli, "correlation_closed_form", lambda sc, m: 9.0)
    code, out, err = run(capsys, "correlate", "--case", "II", "--scheme", "bloch", "--n", "1", "--eta", "1")
    assert code == cli.EXIT_CHECK
    assert records(out)[0]["check"] == "FAIL"
    assert "differ" in err


@pytest.mark.parametrize("argv", [
    ["table1", "--case", "IV"],
    ["fig1", "--step", "0"],
    ["fig1", "--eta-min", "3", "--eta-max", "1"],
    ["correlate", "--case", "II", "--scheme", "phase", "--n", "0"],
    ["fig2", "--n", "x"],
    ["nonsense"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == cli.EXIT_USAGE
    assert "error" in err


def test_unwritable_output(capsys, tmp_path):
    code, _, err = run(capsys, "fig1", "--step", "1", "--out", str(tmp_path / "missing" / "x.csv"))
    assert code == cli.EXIT_USAGE
    assert "cannot write" in err


def test_tsv_and_out_file(capsys, tmp_path):
    path = tmp_path / "fig1.tsv"
    code, out, _ = run(capsys, "fig1", "--step", "1", "--format", "tsv", "--out", str(path))
    assert code == 0 and out == ""
    rows = records(path.read_text(), "\t")
    assert len(rows) == 26


def test_output_is_deterministic(capsys):
    _, a, _ = run(capsys, "fig2", "--step", "0.05")
    _, b, _ = run(capsys, "fig2", "--step", "0.05")
    assert a == b


def test_numeric_cells_have_six_significant_digits(capsys):
    _, out, _ = run(capsys, "fig2", "--step", "0.5")
    for r in records(out):
        for cell in r.values():
            x = float(cell)
            assert float(f"{x:.6g}") == x


def test_plot_written(capsys, tmp_path):
    path = tmp_path / "fig1.svg"
    code, _, _ = run(capsys, "fig1", "--step", "0.1", "--plot", str(path))
    assert code == 0
    assert "<svg" in path.read_text()


# -- scan --------------------------------------------------------------------

FIG2_CONFIG = """\
# same curve as fig2
case = III
scheme = B
subcase = ii
n = 1
eta1 = pi/(4*sqrt(2))
eta_min = 0
eta_max = 18.8
step = 0.1
"""


def test_scan_matches_fig2(capsys, tmp_path):
    cfg = tmp_path / "fig2.cfg"
    cfg.write_text(FIG2_CONFIG)
    code, out, _ = run(capsys, "scan", str(cfg))
    assert code == 0
    scan = {r["eta2"]: r["S"] for r in records(out)}
    _, out2, _ = run(capsys, "fig2", "--step", "0.1")
    fig2 = {r["eta2"]: r["smax"] for r in records(out2)}
    assert scan == fig2


def test_scan_row_order_and_selectors(capsys, tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("case = II, I\nscheme = phase\nsubcase = equal\nn = 2, 0\neta_max = 1\nstep = 0.5\n")
    code, out, _ = run(capsys, "scan", str(cfg))
    assert code == 0
    keys = [(r["case"], r["n"], r["eta2"]) for r in records(out)]
    assert keys == [(c, n, e) for c in ("I", "II") for n in ("0", "2") for e in ("0", "0.5", "1")]


def test_scan_free_first_angle(capsys, tmp_path):
    cfg = tmp_path / "s.cfg"
    cfg.write_text("case = III\nscheme = bloch\nsubcase = ii\nn = 0\neta_max = 4\nstep = 0.5\neta1_step = 0.01\n")
    code, out, _ = run(capsys, "scan", str(cfg))
    assert code == 0
    s = [float(r["S"]) for r in records(out)]
    assert max(s) > 2.8


@pytest.mark.parametrize("text, line", [
    ("case = III\nn =\n", 2),
    ("case = III\n\n# comment\ncolour = red\n", 4),
    ("case = III\nthis line is broken\n", 2),
    ("n = 1\nstep = -1\n", 2),
    ("eta_min = 3\neta_max = 1\n", 2),
    ("case = IV\n", 1),
    ("n = 1\nn = 2\n", 2),
])
def test_scan_config_errors(capsys, tmp_path, text, line):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    code, _, err = run(capsys, "scan", str(cfg))
    assert code == cli.EXIT_CONFIG
    assert f"bad.cfg:{line}:" in err


def test_scan_missing_config(capsys, tmp_path):
    code, _, err = run(capsys, "scan", str(tmp_path / "absent.cfg"))
    assert code == cli.EXIT_CONFIG


def test_parse_number():
    assert cli.parse_number("pi/(4*sqrt(2))") == pytest.approx(math.pi / (4 * math.sqrt(2)))
    assert cli.parse_number("-1.5e-3") == -1.5e-3
    for bad in ("__import__('os')", "1/0", "x", "2**2000.0"):
        with pytest.raises(ValueError):
            cli.parse_number(bad)


@pytest.mark.parametrize("x, shown", [(2.175, "2.18"), (2.825, "2.83"), (2.0, "2.00"), (2.8284271, "2.83")])
def test_display_rounding_half_away_from_zero(x, shown):
    assert cli.display2(x) == shown
