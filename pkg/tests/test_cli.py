"""Command-line contract: argument parsing, grids, output shape, exit codes."""
import io
import os
from contextlib import redirect_stdout, redirect_stderr

import pytest
from mpmath import mp, mpf

from sphwv.cli import (
    EXIT_ARGS,
    EXIT_DOMAIN,
    EXIT_OK,
    _grid,
    main_obl,
    main_pro,
)

BASE = ["-max_memory", "2000", "-prec", "90", "-verbose", "n",
        "-c", "10.0", "-m", "0", "-n", "0"]


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def run_main(main, argv):
    out = io.StringIO()
    err = io.StringIO()
    try:
        with redirect_stdout(out), redirect_stderr(err):
            rc = main(argv)
    except SystemExit as exc:
        rc = exc.code
    return rc, out.getvalue(), err.getvalue()


def test_grid_inclusive_endpoints():
    g = _grid(mpf(-1), mpf(1), mpf("0.125"))
    assert len(g) == 17
    assert g[0] == -1 and g[-1] == 1
    g = _grid(mpf(1), mpf("1.9"), mpf("0.25"))
    assert len(g) == 4  # 1.0 1.25 1.5 1.75; 2.0 overshoots


def test_missing_mandatory_arguments_exit_2(workdir):
    rc, _, _ = run_main(main_pro, ["-w", "lambda"])
    assert rc == EXIT_ARGS


def test_unknown_work_exits_2(workdir):
    rc, _, _ = run_main(main_pro, BASE + ["-w", "nonsense"])
    assert rc == EXIT_ARGS


def test_missing_work_arguments_exit_2(workdir):
    rc, _, err = run_main(main_pro, BASE + ["-w", "S1", "-a", "-1.0"])
    assert rc == EXIT_ARGS
    assert "missing required arguments" in err


def test_prolate_rejects_oblate_only_work(workdir):
    rc, _, err = run_main(main_pro, BASE + ["-w", "Q"])
    assert rc == EXIT_DOMAIN
    rc, _, err = run_main(main_pro, BASE + ["-w", "B2r"])
    assert rc == EXIT_DOMAIN


def test_invalid_arg_type_exits_3(workdir):
    rc, _, _ = run_main(main_obl, BASE + [
        "-w", "R", "-a", "0.0", "-b", "1.0", "-d", "0.5", "-arg_type", "x",
        "-which", "R1_1", "-p", "10"])
    assert rc == EXIT_DOMAIN
    rc, _, _ = run_main(main_pro, BASE + [
        "-w", "S1", "-a", "0.0", "-b", "1.0", "-d", "0.5",
        "-arg_type", "xi", "-p", "10"])
    assert rc == EXIT_DOMAIN


def test_invalid_which_tag_exits_3(workdir):
    rc, _, _ = run_main(main_pro, BASE + [
        "-w", "R", "-a", "1.5", "-b", "2.0", "-d", "0.5", "-arg_type", "xi",
        "-which", "R1_1,R9_9", "-p", "10"])
    assert rc == EXIT_DOMAIN


def test_lambda_writes_cache_file(workdir):
    rc, _, _ = run_main(main_pro, BASE + ["-w", "lambda"])
    assert rc == EXIT_OK
    assert (workdir / "data" / "pro_00010000_000_000_lambda.txt").exists()


def test_s1_grid_shape(workdir):
    rc, out, _ = run_main(main_pro, BASE + [
        "-w", "S1", "-a", "-1.0", "-b", "1.0", "-d", "0.125",
        "-arg_type", "eta", "-p", "20"])
    assert rc == EXIT_OK
    rows = out.strip().splitlines()
    assert len(rows) == 17
    for row in rows:
        assert len(row.split()) == 3
    # S1 of the (0, 0) mode is even: the endpoint values match
    first = rows[0].split()
    last = rows[-1].split()
    assert abs(mpf(first[1]) - mpf(last[1])) <= \
        abs(mpf(last[1])) * mpf("1e-18")


def test_s1_theta_pi_argument(workdir):
    rc, out, _ = run_main(main_pro, BASE + [
        "-w", "S1", "-a", "0.0", "-b", "0.5", "-d", "0.25",
        "-arg_type", "theta/pi", "-p", "20"])
    assert rc == EXIT_OK
    rows = [r.split() for r in out.strip().splitlines()]
    assert len(rows) == 3
    # t = 0.5 maps to eta = cos(pi/2) = 0
    assert rows[0][0] == "0.0"
    assert mpf(rows[2][0]) == mpf("0.5")


def test_r_grid_shape_and_auto_columns(workdir):
    which = ["R1_1", "R1_2", "R2_1", "R2_2"]
    rc, out, _ = run_main(main_pro, BASE + [
        "-w", "R", "-a", "1.5", "-b", "2.5", "-d", "0.5", "-arg_type", "xi",
        "-which", ",".join(which), "-p", "20"])
    assert rc == EXIT_OK
    rows = [r.split() for r in out.strip().splitlines()]
    assert len(rows) == 3
    for row in rows:
        assert len(row) == 1 + 2 * len(which) + 3
        assert row[-3].startswith("R1_")
        assert row[-2].startswith("R2_")
        assert mpf(row[-1]) < mpf("1e-10")


def test_r_inadmissible_points_print_nan(workdir):
    rc, out, _ = run_main(main_obl, BASE + [
        "-w", "R", "-a", "0.0", "-b", "0.5", "-d", "0.5", "-arg_type", "xi",
        "-which", "R1_1,R1_2", "-p", "20"])
    assert rc == EXIT_OK
    rows = [r.split() for r in out.strip().splitlines()]
    # the Bessel-series method has no value at xi = 0
    assert rows[0][1] == "nan" and rows[0][2] == "nan"
    assert rows[0][3] != "nan"
    assert rows[1][1] != "nan"


def test_prolate_x_arg_type(workdir):
    rc, out, _ = run_main(main_pro, BASE + [
        "-w", "R", "-a", "1.0", "-b", "1.0", "-d", "1.0", "-arg_type", "x",
        "-which", "R1_1", "-p", "20"])
    assert rc == EXIT_OK
    row = out.strip().splitlines()[0].split()
    assert mpf(row[0]) == 1  # printed in terms of x, evaluated at sqrt(2)


def test_everything_then_cache_hit(workdir):
    everything = BASE + ["-w", "everything", "-n_dr", "10", "-dr_min",
                         "1.0e-120", "-n_dr_neg", "10", "-dr_neg_min",
                         "1.0e-120", "-n_c2k", "10", "-c2k_min", "1.0e-120"]
    rc, _, _ = run_main(main_pro, everything)
    assert rc == EXIT_OK
    data = workdir / "data"
    names = sorted(p.name for p in data.iterdir())
    for tag in ("lambda", "dr", "dr_neg", "N", "F", "k1", "k2", "c2k"):
        assert f"pro_00010000_000_000_{tag}.txt" in names
    blobs = {p.name: p.read_bytes() for p in data.iterdir()}
    noisy = list(everything)
    noisy[noisy.index("-verbose") + 1] = "y"
    rc, _, err = run_main(main_pro, noisy)
    assert rc == EXIT_OK
    assert "cache hit" in err
    for p in data.iterdir():
        assert p.read_bytes() == blobs[p.name]


def test_low_precision_cache_is_recomputed(workdir):
    rc, _, _ = run_main(main_pro, BASE + ["-w", "lambda"])
    assert rc == EXIT_OK
    argv = list(BASE)
    argv[argv.index("-prec") + 1] = "200"
    rc, _, err = run_main(main_pro, argv + ["-w", "lambda", "-verbose", "y"])
    assert rc == EXIT_OK
    assert "cache hit" not in err
    path = workdir / "data" / "pro_00010000_000_000_lambda.txt"
    assert path.read_text().splitlines()[1] == "200"


def test_verbose_diagnostics_go_to_stderr(workdir):
    argv = list(BASE)
    argv[argv.index("-verbose") + 1] = "y"
    rc, out, err = run_main(main_pro, argv + ["-w", "lambda"])
    assert rc == EXIT_OK
    assert out == ""
    assert "lambda" in err
