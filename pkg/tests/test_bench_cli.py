import math

import pytest

from ucgs import bench
from ucgs.cli import main
from ucgs.objectives import make_instance
from ucgs.sets import Simplex
from ucgs.trace import RunTrace


def cli(*argv):
    return main(list(argv))


# -- config parsing


def test_parse_defaults_and_overrides():
    cfg = bench.parse_config("objective = pnorm\nn = 12  # small\n\n", ["p=1.6", "epsilon=1e-3"])
    assert cfg["objective"] == "pnorm" and cfg["n"] == 12 and cfg["p"] == 1.6
    assert cfg.where("n") == "config line 2"
    assert cfg.where("p") == "--set p"
    assert cfg.where("seed") == "default"


@pytest.mark.parametrize(
    "text, overrides, needle",
    [
        ("n = 10\nbogus = 3", [], "line 2: unknown field 'bogus'"),
        ("n = ten", [], "line 1: field 'n'"),
        ("just words", [], "line 1: expected key = value"),
        ("", ["sigma"], "expected KEY=VALUE"),
        ("", ["sigma=-1"], "field 'sigma'"),
        ("set = sphere", [], "field 'set'"),
        ("objective = pnorm\np = 2.5", [], "field 'p'"),
        ("method = ucgs\nnu = 0.5", [], "field 'nu'"),
        ("method = gug-sliding", [], "nu = 1"),
        ("method = gug-sliding\nobjective = pnorm\nnu = 1.0", [], "field 'nu'"),
        ("certify = maybe", [], "field 'certify'"),
    ],
)
def test_config_errors_name_the_culprit(text, overrides, needle):
    with pytest.raises(bench.ConfigError, match=needle):
        bench.parse_config(text, overrides)


def test_compare_validates_method_list():
    # nu is fine for compare as long as a method that uses it is listed
    bench.parse_config("objective = pnorm\nnu = 0.5\nmethods = cg, gug-sliding", command="compare")
    with pytest.raises(bench.ConfigError, match="methods"):
        bench.parse_config("methods = cg, newton", command="compare")


def test_built_instance_matches_direct_construction():
    cfg = bench.parse_config("n = 7\nseed = 4\nobjective = pnorm")
    a = bench.build_instance(cfg)
    b = make_instance("pnorm", Simplex(7), seed=4)
    assert a.objective.M == b.objective.M
    assert (a.x0 == b.x0).all()


# -- run


def test_cg_run_writes_trace(tmp_path, capsys):
    out = tmp_path / "cg.csv"
    assert cli("run", "--set", "method=cg", "--set", "N=2000", "--out", str(out)) == 0
    t = RunTrace.read_csv(out)
    assert len(t) == 2000
    assert t[-1].lmo_calls_cum == 2000
    assert "method=cg k=2000" in capsys.readouterr().out


def test_ucgs_run_reaches_target(tmp_path, capsys):
    out = tmp_path / "u.csv"
    assert cli("run", "--set", "epsilon=1e-3", "--out", str(out)) == 0
    last = RunTrace.read_csv(out)[-1]
    assert last.certified_gap <= 1e-3 and last.true_gap <= 1e-3
    assert "converged=yes" in capsys.readouterr().out


def test_runs_are_byte_identical(tmp_path):
    paths = [tmp_path / "a.csv", tmp_path / "b.csv"]
    for p in paths:
        assert cli("run", "--set", "objective=pnorm", "--set", "epsilon=1e-2", "--set", "sigma=1",
                   "--out", str(p)) == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_timing_column_is_zero_by_default(tmp_path):
    out = tmp_path / "t.csv"
    cli("run", "--set", "epsilon=1e-2", "--out", str(out))
    assert set(RunTrace.read_csv(out).column("wall_ns")) == {0}
    cli("run", "--set", "epsilon=1e-2", "--set", "timing=true", "--out", str(out))
    assert max(RunTrace.read_csv(out).column("wall_ns")) > 0


def test_sigma_two_respects_inner_cap():
    cfg = bench.parse_config("", ["epsilon=1e-3", "sigma=2"])
    out = bench.execute(cfg)
    for row in out.trace:
        assert row.inner_iters <= 1 + math.ceil(20 * row.k)


def test_config_file(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("method = cg\nN = 10\n")
    assert cli("run", "--config", str(cfg), "--out", str(tmp_path / "o.csv")) == 0
    cfg.write_text("method = cg\nN = -1\n")
    assert cli("run", "--config", str(cfg), "--out", str(tmp_path / "o.csv")) == 2
    assert cli("run", "--config", str(tmp_path / "missing.cfg")) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ("run", "--set", "nu=0.5"),
        ("run", "--set", "method=gug-sliding"),
        ("run", "--set", "n=0"),
        ("compare", "--set", "methods=ucgs"),
        ("compare", "--set", "eps_grid=1e-1,1e-2,5e-3,1e-4"),
        ("compare", "--jobs", "0"),
    ],
)
def test_config_errors_exit_two(argv, capsys):
    assert cli(*argv) == 2
    assert "config error" in capsys.readouterr().err


def test_corrupted_eta_exits_three(tmp_path, capsys):
    assert cli("run", "--set", "epsilon=1e-3", "--set", "eta_scale=1e-6", "--out", str(tmp_path / "x.csv")) == 3
    assert "solver abort" in capsys.readouterr().err
    assert cli("certify", "--set", "n=20", "--set", "eta_scale=1e-6") == 3


# -- certify


def test_certify_all_hold(capsys):
    assert cli("certify", "--set", "n=20", "--set", "epsilon=1e-2", "--set", "sigma=1") == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.strip().endswith("19/19 invariants hold")


def test_certify_pnorm_holds():
    verdicts = bench.certify(bench.parse_config("objective=pnorm\nn=15\nepsilon=1e-2"))
    assert all(v.passed for v in verdicts), [v.line() for v in verdicts if not v.passed]


def test_certify_failure_exits_four(monkeypatch, capsys):
    # inject a ceiling that no accepted L can meet
    monkeypatch.setattr(bench, "L_ceiling", lambda *a: 0.0)
    assert cli("certify", "--set", "n=20", "--set", "epsilon=1e-2") == 4
    assert "FAIL L ceiling" in capsys.readouterr().out


# -- compare


def test_single_epsilon_refuses_to_fit(capsys):
    assert cli("compare", "--set", "n=20", "--set", "eps_grid=1e-2") == 0
    assert "no slopes fitted" in capsys.readouterr().out


def test_compare_small_grid(tmp_path):
    cfg = bench.parse_config("n = 20\nobjective = pnorm\neps_grid = 1e-1, 0.03162277660168379, 1e-2, 0.0031622776601683794", command="compare")
    rep = bench.compare(cfg)
    assert rep.fitted and set(rep.slopes) == {"cg", "ucgs"}
    for r in rep.rows:
        assert not r.censored and r.lmo_certified >= 1
    # first hits along one cg run can only move later as the target shrinks
    counts = [r.lmo_certified for r in rep.rows_for("cg")]
    assert counts == sorted(counts)
    text = rep.to_csv()
    assert text.splitlines()[0] == "method,epsilon,lmo_certified,censored,lmo_true_gap,grad_evals"
    assert len(text.splitlines()) == 9


def test_compare_censors_over_budget():
    cfg = bench.parse_config("n = 20\nobjective = pnorm\neps_grid = 1e-2\nbudget = 5", command="compare")
    rep = bench.compare(cfg)
    assert all(r.censored for r in rep.rows)
    assert "censoring" in rep.render(5)


def test_compare_jobs_match_serial(tmp_path):
    args = ["compare", "--set", "n=15", "--set", "eps_grid=1e-1,1e-2"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert cli(*args, "--out", str(a)) == 0
    assert cli(*args, "--jobs", "2", "--out", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
