import json
import os

import numpy as np
import pytest

from bucksim.cli import main
from bucksim.output import atomic_write_text, csv_text, format_value

P0_CONFIG = """\
# reference parameter set
alpha_on = 0.5
alpha_off = 0.6
beta = 1.2
x_ref = 1.0
seed = 42
"""


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(P0_CONFIG)
    return str(path)


def test_validate_ok(cfg_file, capsys):
    rc = main(["validate", "--config", cfg_file])
    out = capsys.readouterr().out
    assert rc == 0
    assert "parameter check: ok" in out
    assert "x_star" in out


def test_validate_writes_reports(cfg_file, tmp_path):
    out = tmp_path / "artifacts"
    rc = main(["validate", "--config", cfg_file, "--out", str(out)])
    assert rc == 0
    txt = (out / "derived_constants.txt").read_text()
    assert "x_border = " in txt
    data = json.loads((out / "derived_constants.json").read_text())
    assert data["mu"] == pytest.approx(0.1)


def test_validate_bad_beta_names_violation(cfg_file, capsys):
    rc = main(["validate", "--config", cfg_file, "--set", "beta=0.9"])
    out = capsys.readouterr().out
    assert rc == 3
    assert "beta lower bound" in out


def test_missing_required_key_is_config_error(tmp_path, capsys):
    path = tmp_path / "partial.cfg"
    path.write_text("alpha_on = 0.5\nalpha_off = 0.6\nx_ref = 1.0\n")
    rc = main(["validate", "--config", str(path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "beta" in err


def test_unreadable_config_is_config_error(tmp_path, capsys):
    rc = main(["validate", "--config", str(tmp_path / "missing.cfg")])
    assert rc == 2


def test_malformed_config_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("alpha_on 0.5\n")
    rc = main(["validate", "--config", str(path)])
    assert rc == 2


def test_flag_beats_set_beats_file(cfg_file, capsys):
    # file says 1.2; --set breaks it; the dedicated flag repairs it
    rc = main(["validate", "--config", cfg_file, "--set", "beta=0.9", "--beta", "1.2"])
    assert rc == 0
    rc = main(["validate", "--config", cfg_file, "--set", "beta=0.9"])
    assert rc == 3
    capsys.readouterr()


def test_strobe_cobweb_csv(cfg_file, tmp_path):
    out = tmp_path / "strobe"
    rc = main(["strobe", "--config", cfg_file, "--out", str(out),
               "--x0", "0.1", "--iters", "20"])
    assert rc == 0
    lines = (out / "cobweb.csv").read_text().strip().split("\n")
    assert lines[0] == "iter,x"
    assert len(lines) == 22  # header + x0 + 20 iterates


def test_simulate_det_outputs(cfg_file, tmp_path):
    out = tmp_path / "det"
    rc = main(["simulate-det", "--config", cfg_file, "--out", str(out),
               "--horizon", "3", "--sample-step", "0.01"])
    assert rc == 0
    traj = (out / "trajectory.csv").read_text().strip().split("\n")
    assert traj[0] == "t,x,y"
    sched = (out / "schedule.csv").read_text().strip().split("\n")
    assert sched[0] == "n,t_n,s_n"
    assert len(sched) == 4  # header + 3 cycles


def test_simulate_det_requires_out(cfg_file):
    rc = main(["simulate-det", "--config", cfg_file, "--horizon", "2"])
    assert rc == 2


def test_simulate_sde_outputs(cfg_file, tmp_path):
    out = tmp_path / "sde"
    rc = main(["simulate-sde", "--config", cfg_file, "--out", str(out),
               "--epsilon", "0.05", "--horizon", "3", "--replicas", "2",
               "--emit-paths"])
    assert rc == 0
    sched = (out / "schedule.csv").read_text().strip().split("\n")
    assert sched[0] == "replica,n,tau_n,sigma_n"
    assert (out / "trajectory_0.csv").exists()
    assert (out / "trajectory_1.csv").exists()


def test_simulate_sde_bad_dt_is_config_error(cfg_file, tmp_path):
    rc = main(["simulate-sde", "--config", cfg_file, "--out", str(tmp_path / "x"),
               "--epsilon", "0.05", "--dt", "0.0003"])
    assert rc == 2


def test_distance_output(cfg_file, tmp_path):
    out = tmp_path / "dist"
    rc = main(["distance", "--config", cfg_file, "--out", str(out),
               "--epsilon", "0.02", "--horizon", "3"])
    assert rc == 0
    lines = (out / "distance.csv").read_text().strip().split("\n")
    assert lines[0] == "gamma,sup_r,bound,method"
    fields = lines[1].split(",")
    assert fields[3] in ("deformation", "identity")
    assert float(fields[2]) >= max(float(fields[0]), float(fields[1])) - 1e-15


def test_mc_sweep_outputs_and_determinism(cfg_file, tmp_path):
    args = ["mc-sweep", "--config", cfg_file, "--epsilons", "0.1,0.0",
            "--frak-t", "2", "--replicas", "40", "--dt", "0.01",
            "--batch-size", "16", "--quiet"]
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--out", str(out1)]) == 0
    assert main(args + ["--out", str(out2)]) == 0
    assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
    assert (out1 / "summary.json").read_bytes() == (out2 / "summary.json").read_bytes()
    header = (out1 / "report.csv").read_text().split("\n", 1)[0]
    assert header == ("epsilon,T_eps,delta,n,emp_prob,wilson_lo,wilson_hi,"
                      "bound,emp_d_mean,emp_dp_moment,dp_se,good_freq,anomalies")


def test_quiet_suppresses_stdout(cfg_file, capsys):
    rc = main(["validate", "--config", cfg_file, "--quiet"])
    assert rc == 0
    assert capsys.readouterr().out == ""


def test_format_value_round_trips():
    rng = np.random.default_rng(1)
    for v in rng.uniform(-1e6, 1e6, 100):
        assert float(format_value(float(v))) == float(v)
    assert format_value(3) == "3"
    assert format_value(True) == "true"


def test_csv_text_shape():
    text = csv_text(("a", "b"), [(1, 2.5), (3, 4.5)])
    assert text == "a,b\n1,2.5\n3,4.5\n"


def test_atomic_write_replaces_without_partial(tmp_path):
    target = tmp_path / "data.csv"
    target.write_text("old")
    atomic_write_text(target, "new contents")
    assert target.read_text() == "new contents"
    leftovers = [p for p in os.listdir(tmp_path) if p.startswith(".data")]
    assert leftovers == []
