import json
import math
import subprocess
import sys

import numpy as np
import pytest
from scipy import integrate

from indefwishart.analysis import cond_cdf
from indefwishart.cli import fmt, main
from indefwishart.densities import cond_density, cond_density_special
from indefwishart.sampling import ModelParams

FIG = ["--L", "4", "--x1", "0.231", "--x2", "-4.4"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.splitlines()
    return lines[0], np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "indefwishart", "limit", "--L", "2", "--x1", "1", "--x2", "-1"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout == "1.00000000000\n"


def test_usage_error_exit_code_subprocess():
    proc = subprocess.run(
        [sys.executable, "-m", "indefwishart", "density", "--L", "2", "--beta", "1",
         "--x1", "1", "--x2", "2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 2
    assert "opposite signs" in proc.stderr
    assert proc.stdout == ""


def test_fmt():
    assert fmt(1.0) == "1"
    assert fmt(0.5) == "0.5"
    assert fmt(1e-300) == "1e-300"
    assert float(fmt(math.pi)) == math.pi
    assert fmt(math.nan) == "nan"


# ----------------------------------------------------------------- density


def test_density_simple_case_first_row(capsys):
    code, out, _ = run(capsys, "density", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "-1")
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "sigma,density"
    assert lines[1] == "1,0.3183098861837902"
    assert len(lines) == 202 and lines[-1] == ""
    assert "\r" not in out


def test_density_matches_special_form(capsys):
    code, out, _ = run(capsys, "density", *FIG, "--beta", "2", "--min", "1", "--max", "50", "--points", "31")
    assert code == 0
    header, data = parse_csv(out)
    assert header == "sigma,density"
    np.testing.assert_allclose(data[:, 0], np.geomspace(1, 50, 31), rtol=1e-15)
    ref = cond_density_special(data[:, 0], ModelParams(4, 2.0, 0.231, -4.4))
    np.testing.assert_allclose(data[:, 1], ref, rtol=1e-9)


def test_density_linear_grid_and_file(capsys, tmp_path):
    path = tmp_path / "d.csv"
    code, out, _ = run(capsys, "density", *FIG, "--beta", "1", "--min", "2", "--max", "4",
                       "--points", "3", "--linear", "--out", str(path))
    assert code == 0 and out == ""
    _, data = parse_csv(path.read_text())
    np.testing.assert_array_equal(data[:, 0], [2.0, 3.0, 4.0])


@pytest.mark.parametrize(
    "argv",
    [
        ["density", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "2"],
        ["density", "--L", "1", "--beta", "1", "--x1", "1", "--x2", "-1"],
        ["density", "--L", "2", "--beta", "0", "--x1", "1", "--x2", "-1"],
        ["density", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "-1", "--min", "0.5"],
        ["density", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "-1", "--max", "0.9"],
    ],
)
def test_density_rejects_bad_input(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2
    assert out == "" and "error" in err


def test_opposite_sign_message(capsys):
    _, _, err = run(capsys, "density", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "2")
    assert "opposite signs" in err


def test_argparse_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as info:
        main(["density", "--L", "2"])
    assert info.value.code == 2
    with pytest.raises(SystemExit) as info:
        main(["sample", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "-1", "--n", "0"])
    assert info.value.code == 2


# ------------------------------------------------------------------ sample


def test_sample_is_reproducible(capsys):
    argv = ["sample", *FIG, "--beta", "2", "--n", "5", "--seed", "7"]
    code, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert code == 0 and a == b
    lines = a.splitlines()
    assert lines[0] == "sigma" and len(lines) == 6
    assert all(float(v) >= 1.0 for v in lines[1:])
    _, c, _ = run(capsys, "sample", *FIG, "--beta", "2", "--n", "5", "--seed", "8")
    assert c != a


def test_sample_workers_do_not_change_output(capsys):
    base = ["sample", *FIG, "--beta", "1", "--n", "70000", "--seed", "3"]
    _, a, _ = run(capsys, *base)
    _, b, _ = run(capsys, *base, "--workers", "2")
    assert a == b


def test_sample_direct_rejects_non_classical_beta(capsys):
    code, _, err = run(capsys, "sample", *FIG, "--beta", "3", "--n", "5", "--sampler", "direct")
    assert code == 2 and "error" in err


def test_sample_histogram(capsys):
    code, out, err = run(capsys, "sample", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "-1",
                         "--n", "20000", "--bins", "40", "--min", "1", "--max", "5")
    assert code == 0
    header, data = parse_csv(out)
    assert header == "sigma,density" and data.shape == (40, 2)
    overflow = int(err.split()[1])
    width = 4 / 40
    assert data[:, 1].sum() * width + overflow / 20000 == pytest.approx(1.0, abs=1e-12)
    # Coarse agreement with the exact density at the bin centres.
    ref = cond_density(data[:, 0], ModelParams(2, 1.0, 1.0, -1.0))
    assert np.max(np.abs(data[:, 1] - ref)) < 0.05


# ------------------------------------------------------------------ verify


def test_verify_passes_on_reference_panel(capsys):
    code, out, _ = run(capsys, "verify", *FIG, "--beta", "2", "--n", "20000", "--seed", "1")
    assert code == 0
    doc = json.loads(out)
    assert doc["pass"] is True
    assert set(doc) == {"params", "n", "seed", "sampler", "ks_statistic", "ks_threshold",
                        "normalization_residual", "pass"}
    assert set(doc["params"]) == {"L", "beta", "x1", "x2"}
    assert doc["sampler"] == "chi_pipeline" and doc["n"] == 20000
    assert doc["ks_threshold"] == pytest.approx(1.95 / math.sqrt(20000))


def test_verify_negative_control_exits_one(capsys):
    code, out, _ = run(capsys, "verify", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "-1",
                       "--cdf-x2", "-10", "--n", "100", "--seed", "0")
    assert code == 1
    assert json.loads(out)["pass"] is False


def test_verify_output_is_deterministic(capsys):
    argv = ["verify", "--L", "2", "--beta", "1", "--x1", "1", "--x2", "-1", "--n", "500", "--seed", "4"]
    _, a, _ = run(capsys, *argv)
    _, b, _ = run(capsys, *argv)
    assert a == b and a.endswith("}\n")


# ------------------------------------------------------------------- limit


def test_limit_values(capsys):
    _, out, _ = run(capsys, "limit", "--L", "2", "--x1", "1", "--x2", "-1")
    assert out == "1.00000000000\n"
    _, out, _ = run(capsys, "limit", *FIG)
    assert float(out) == pytest.approx(24.759770633888107852, rel=1e-11)


def test_limit_is_scale_invariant(capsys):
    _, a, _ = run(capsys, "limit", *FIG)
    _, b, _ = run(capsys, "limit", "--L", "4", "--x1", "2.31", "--x2", "-44")
    assert a == b


# ------------------------------------------------------------------- sweep


def test_sweep_rows_and_normalization(capsys):
    code, out, _ = run(capsys, "sweep", "--L", "2", "--x1", "1", "--x2", "-1", "--betas", "1,2,4",
                       "--min", "1", "--max", "200", "--points", "4001", "--n", "2000")
    assert code == 0
    header, data = parse_csv(out)
    assert header == "beta,sigma,density"
    for beta in (1.0, 2.0, 4.0):
        block = data[data[:, 0] == beta]
        dens, med = block[:-1], block[-1]
        assert dens.shape[0] == 4001
        assert math.isnan(med[2]) and med[1] > 1.0
        # Simpson in log(sigma) on the grid plus the exact mass beyond it.
        mass = integrate.simpson(dens[:, 2] * dens[:, 1], x=np.log(dens[:, 1]))
        tail = 1.0 - cond_cdf(200.0, ModelParams(2, beta, 1.0, -1.0))
        assert mass + tail == pytest.approx(1.0, abs=1e-5)


def test_sweep_matches_density(capsys):
    grid = ["--min", "1", "--max", "30", "--points", "25"]
    _, sweep, _ = run(capsys, "sweep", *FIG, "--betas", "1.7", *grid, "--n", "200")
    _, dens, _ = run(capsys, "density", *FIG, "--beta", "1.7", *grid)
    rows = [ln.split(",", 1)[1] for ln in sweep.splitlines()[1:-1]]
    assert rows == dens.splitlines()[1:]


def test_sweep_rejects_bad_betas(capsys):
    with pytest.raises(SystemExit):
        main(["sweep", *FIG, "--betas", "a,b"])
    code, _, _ = run(capsys, "sweep", *FIG, "--betas", "1,-2", "--n", "100")
    assert code == 2
