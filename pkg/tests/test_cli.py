import os

import pytest

from covertnoma.cli import main


TINY_CFG = """\
num_elements = 4
num_antennas = 2
target_rate = 0.2
max_outer_iters = 3
"""


@pytest.fixture()
def tiny_config(tmp_path):
    p = tmp_path / "tiny.cfg"
    p.write_text(TINY_CFG)
    return str(p)


def test_validate_passes(capsys):
    assert main(["--command", "validate"]) == 0
    out = capsys.readouterr().out
    assert "4/4 checks passed" in out
    assert out.count("PASS") == 4


def test_solve_one_writes_outputs(tiny_config, tmp_path, capsys):
    out = str(tmp_path / "run")
    rc = main(["--command", "solve-one", "--config", tiny_config,
               "--out", out, "--seed", "7"])
    assert rc == 0
    text = capsys.readouterr().out
    assert "covert rate" in text
    assert os.path.exists(os.path.join(out, "rate_trace.csv"))
    resolved = open(os.path.join(out, "resolved_config.txt")).read()
    assert "rng_seed = 7" in resolved


def test_solve_one_rejects_multiple_schemes(tiny_config, tmp_path):
    rc = main(["--command", "solve-one", "--config", tiny_config,
               "--scheme", "HD,proposed_A_FD", "--out", str(tmp_path)])
    assert rc == 2


def test_bad_config_exits_2(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("frobnicate = 1\n")
    assert main(["--command", "validate", "--config", str(bad)]) == 2


def test_sweep_argument_validation(tiny_config, tmp_path):
    out = str(tmp_path)
    base = ["--command", "sweep", "--config", tiny_config, "--out", out]
    assert main(base) == 2  # missing param/grid
    assert main(base + ["--param", "nonsense", "--grid", "1"]) == 2
    assert main(base + ["--param", "budget_jam", "--grid", "10",
                        "--scheme", "nonsense"]) == 2
    assert main(base + ["--param", "budget_jam", "--grid", "10",
                        "--trials", "0"]) == 2


def test_sweep_writes_csvs(tiny_config, tmp_path):
    out = str(tmp_path / "sweep")
    rc = main(["--command", "sweep", "--config", tiny_config,
               "--param", "budget_jam", "--grid=-inf,10",
               "--scheme", "HD", "--trials", "1", "--out", out])
    assert rc == 0
    assert os.path.exists(os.path.join(out, "sweep_budget_jam_HD.csv"))
    summary = open(os.path.join(out, "sweep_budget_jam_summary.csv")).read()
    lines = summary.strip().splitlines()
    assert lines[0] == "scheme,parameter,value,trials,feasible,mean_rate,half_width"
    assert len(lines) == 3  # two grid points
    # "-inf" dBm parses to exactly zero watts
    assert lines[1].split(",")[2] == "0"
