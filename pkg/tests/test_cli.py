import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigma2graph import cli, config, verify
from sigma2graph.errors import InputError
from sigma2graph.grid import read_grid_csv

SMALL_DIRICHLET = ["--domain.R=1", "--domain.h=0.125"]
SMALL_ENTIRE = ["--domain.R0=1", "--domain.schedule=2,4", "--domain.h=0.125"]


def files(path):
    return sorted(p.name for p in path.iterdir())


# --- config -----------------------------------------------------------------------

finite = st.floats(allow_nan=False, allow_infinity=False)


@given(tol=st.floats(1e-14, 1.0), damping=st.floats(0.01, 1.0), seed=st.integers(0, 2**63),
       sched=st.lists(st.floats(0.1, 1e3), min_size=1, max_size=5), h1=finite,
       name=st.sampled_from(["constant", "pinched_sine", "radial_bump"]),
       stage=st.one_of(st.none(), st.floats(1e-12, 1.0)))
@settings(max_examples=100, deadline=None)
def test_config_round_trip(tol, damping, seed, sched, h1, name, stage):
    cfg = config.RunConfig()
    cfg.solver.tol, cfg.solver.damping, cfg.run.seed = tol, damping, seed
    cfg.domain.schedule = tuple(sorted(sched))
    cfg.barrier.h1, cfg.curvature.name, cfg.solver.stage_tol = h1, name, stage
    once = config.parse_text(cfg.to_text())
    assert once == cfg
    assert config.parse_text(once.to_text()).to_text() == cfg.to_text()


def test_config_file_with_comments(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# example\nsolver.tol = 1e-9   # tighter\n\ndomain.schedule = 3, 6\n")
    cfg = config.load(path)
    assert cfg.solver.tol == 1e-9 and cfg.domain.schedule == (3.0, 6.0)


@pytest.mark.parametrize("text,field", [("solver.tolx = 1", "solver.tolx"),
                                        ("solver.tol = abc", "solver.tol"),
                                        ("just words", "line 1")])
def test_malformed_config_names_field(text, field):
    with pytest.raises(InputError, match=field.replace(".", "\\.")):
        config.parse_text(text)


def test_validation_names_pinching_violation():
    cfg = config.RunConfig()
    cfg.barrier.h1, cfg.barrier.h2 = 0.8, 1.2
    with pytest.raises(InputError, match="barrier.h1: pinching"):
        config.validate(cfg)


def test_digest_ignores_output_location():
    a, b = config.RunConfig(), config.RunConfig()
    b.run.out = "elsewhere"
    assert a.digest() == b.digest()
    b.solver.tol = 1e-9
    assert a.digest() != b.digest()


# --- commands -----------------------------------------------------------------------

def test_solve_dirichlet_artifacts(tmp_path, capsys):
    out = tmp_path / "d"
    assert cli.run(["solve-dirichlet", "--out", str(out)] + SMALL_DIRICHLET) == 0
    assert files(out) == ["config.txt", "manifest.txt", "report.txt", "residual_history.csv", "u.csv"]
    grid, header = read_grid_csv(out / "u.csv")
    assert grid.shape == (17, 17)
    assert header["config_hash"] == config.parse_text((out / "config.txt").read_text().split("\n", 4)[-1]).digest()
    assert "sup_error_vs_exact" in capsys.readouterr().out
    for name in files(out):
        assert (out / name).read_text().startswith("# sigma2graph: ")


def test_outputs_are_deterministic(tmp_path):
    for sub in ("a", "b"):
        assert cli.run(["solve-entire", "--out", str(tmp_path / sub), "--seed", "7"] + SMALL_ENTIRE) == 0
    csvs = [n for n in files(tmp_path / "a") if n.endswith(".csv")]
    assert {"u.csv", "gaps.csv", "residual.csv", "stage_R2.csv", "stage_R4.csv"} <= set(csvs)
    for name in csvs:
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_solve_entire_reports_error_vs_exact(tmp_path, capsys):
    assert cli.run(["solve-entire", "--out", str(tmp_path)] + SMALL_ENTIRE) == 0
    text = (tmp_path / "report.txt").read_text()
    err = float(next(l for l in text.splitlines() if l.startswith("sup_error_vs_exact")).split("=")[1])
    assert err < 5e-2
    gaps = np.loadtxt(tmp_path / "gaps.csv", delimiter=",", comments="#", skiprows=5, ndmin=2)
    assert gaps.shape == (1, 4)


def test_env_var_sets_default_output(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    assert cli.run(["solve-dirichlet"] + SMALL_DIRICHLET) == 0
    assert (tmp_path / "env" / "u.csv").exists()


def test_pinching_violation_exit_code(tmp_path, capsys):
    code = cli.run(["solve-dirichlet", "--out", str(tmp_path), "--barrier.h1=0.8", "--barrier.h2=1.2"])
    assert code == 1
    assert "barrier.h1" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [["solve-dirichlet", "--nonsense=1"], ["bogus"],
                                  ["solve-dirichlet", "--solver.tol"],
                                  ["solve-dirichlet", "--domain.h=0.3"]])
def test_input_errors_exit_one(argv, tmp_path):
    assert cli.run(argv + ["--out", str(tmp_path)]) == 1


def test_solver_failure_exit_code(tmp_path):
    argv = ["solve-dirichlet", "--out", str(tmp_path), "--curvature.name=pinched_sine",
            "--curvature.amp=0.2", "--barrier.h1=1.2", "--barrier.h2=0.8", "--solver.max_newton=1"]
    assert cli.run(argv + SMALL_DIRICHLET) == 2


def test_barrier_check_failure_is_input_error(tmp_path):
    argv = ["solve-dirichlet", "--out", str(tmp_path), "--curvature.h=2"]
    assert cli.run(argv + SMALL_DIRICHLET) == 1


def test_barriers_command_with_sample_file(tmp_path):
    theta = np.linspace(0, 2 * np.pi, 360, endpoint=False)
    np.savetxt(tmp_path / "f.csv", np.c_[theta, 0.3 * np.cos(theta)], delimiter=",",
               header="theta,value")
    argv = ["barriers", "--out", str(tmp_path / "o"), "--barrier.kind=treibergs",
            f"--barrier.f_file={tmp_path / 'f.csv'}", "--barrier.h1=1.2", "--barrier.h2=0.8",
            "--domain.R=3", "--domain.h=0.25"]
    assert cli.run(argv) == 0
    lower, _ = read_grid_csv(tmp_path / "o" / "lower.csv")
    upper, _ = read_grid_csv(tmp_path / "o" / "upper.csv")
    assert np.all(lower.values < upper.values)
    assert "kind=treibergs_lower" in (tmp_path / "o" / "barriers.txt").read_text()


def test_grid_barriers_round_trip(tmp_path):
    first = tmp_path / "b"
    assert cli.run(["barriers", "--out", str(first), "--barrier.h1=1.2", "--barrier.h2=0.8",
                    "--domain.R=1", "--domain.h=0.0625"]) == 0
    argv = ["solve-dirichlet", "--out", str(tmp_path / "s"), "--barrier.kind=grid",
            f"--barrier.lower_file={first / 'lower.csv'}", f"--barrier.upper_file={first / 'upper.csv'}",
            "--domain.R=1", "--domain.h=0.0625"]
    assert cli.run(argv) == 0


def test_oracle_radial_command(tmp_path):
    argv = ["oracle-radial", "--out", str(tmp_path), "--curvature.name=radial_bump",
            "--barrier.h1=1.1", "--domain.R=1"]
    assert cli.run(argv) == 0
    prof = np.loadtxt(tmp_path / "profile.csv", delimiter=",", skiprows=5)
    assert prof.shape[1] == 6 and prof[0, 0] == 0.0
    assert cli.run(["oracle-radial", "--out", str(tmp_path), "--curvature.name=pinched_sine"]) == 1


def test_verify_command(tmp_path):
    argv = ["verify", "--out", str(tmp_path), "--verify.samples=500", "--verify.ilt_samples=10000",
            "--verify.pairs=3", "--verify.radial_cases=2"]
    assert cli.run(argv) == 0
    table = (tmp_path / "verify_table.txt").read_text()
    assert "FAIL" not in table and table.count("PASS") == 7
    assert (tmp_path / "verify_samples.csv").exists()


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(verify, "battery",
                        lambda *a, **k: [verify.SuiteResult("broken", False, 1, 0)])
    assert cli.run(["verify", "--out", str(tmp_path)]) == 3
