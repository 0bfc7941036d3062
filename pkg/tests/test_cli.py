import csv
import io
import json

import numpy as np
import pytest

from replica_portfolio.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_predict_case_1a(capsys):
    code, out, _ = run(capsys, "predict", "--preset", "1A", "--alpha", "1.5:10:50")
    assert code == 0
    table = rows(out)
    assert len(table) == 50
    # 1.5 + k * 8.5/49 never hits 2 exactly; query the analytic row directly
    code, out, _ = run(capsys, "predict", "--preset", "1A", "--alpha", "2")
    (row,) = rows(out)
    assert float(row["eps_quenched"]) == pytest.approx(1 / 6)
    assert float(row["qw_quenched"]) == pytest.approx(13 / 3)


def test_predict_identical(capsys):
    code, out, _ = run(capsys, "predict", "--variance", "identical:s=1", "--alpha", "2", "--format", "json")
    assert code == 0
    (row,) = json.loads(out)
    assert row["eps_quenched"] == pytest.approx(0.5)
    assert row["qw_quenched"] == pytest.approx(2.0)


def test_predict_rejects_alpha_below_one(capsys):
    code, out, err = run(capsys, "predict", "--alpha", "0.5:2:10")
    assert code == 2 and out == ""
    assert "alpha" in err and "1" in err


def test_no_arguments_is_usage_error(capsys):
    code, _, err = run(capsys)
    assert code == 2 and "usage" in err


def test_preset_and_variance_are_exclusive(capsys):
    code, _, err = run(capsys, "predict", "--preset", "1A", "--variance", "identical:s=1")
    assert code == 2 and "not allowed" in err


def test_missing_matrix_names_path(capsys, tmp_path):
    missing = tmp_path / "missing.csv"
    code, out, err = run(capsys, "solve", "--matrix", str(missing))
    assert code == 1 and out == ""
    assert str(missing) in err


def test_gen_then_solve(capsys, tmp_path):
    m, v, w = tmp_path / "x.csv", tmp_path / "s.txt", tmp_path / "w.txt"
    code, _, _ = run(capsys, "gen", "--preset", "1B", "--n-assets", "30", "--alpha", "2",
                     "--seed", "4", "-o", str(m), "--variances-output", str(v))
    assert code == 0
    assert np.loadtxt(m, delimiter=",").shape == (30, 60)
    reports = {}
    for method in ("exact", "sd", "bp"):
        code, out, _ = run(capsys, "solve", "--matrix", str(m), "--variances", str(v),
                           "--method", method, "--weights-output", str(w))
        assert code == 0
        reports[method] = json.loads(out)
        assert np.loadtxt(w).sum() == pytest.approx(30)
    for method in ("sd", "bp"):
        assert reports[method]["epsilon"] == pytest.approx(reports["exact"]["epsilon"], rel=1e-6)


def test_solve_non_convergence_exits_1(capsys, tmp_path):
    m = tmp_path / "x.csv"
    run(capsys, "gen", "--n-assets", "10", "--alpha", "2", "-o", str(m))
    code, out, err = run(capsys, "solve", "--matrix", str(m), "--method", "sd", "--max-iters", "2")
    assert code == 1
    assert json.loads(out)["converged"] is False
    assert "did not converge" in err


def test_solve_singular_exits_1(capsys, tmp_path):
    m = tmp_path / "x.csv"
    np.savetxt(m, np.ones((3, 5)), delimiter=",")
    code, _, err = run(capsys, "solve", "--matrix", str(m))
    assert code == 1 and "error" in err


SIM = ("simulate", "--preset", "1B", "--n-assets", "100", "--samples", "10", "--alpha", "2:4:3", "--seed", "1")


def test_simulate_is_deterministic(capsys):
    _, first, _ = run(capsys, *SIM)
    _, second, _ = run(capsys, *SIM)
    assert first == second and len(rows(first)) == 3


def test_simulate_json_and_csv_carry_same_values(capsys, tmp_path):
    _, text_csv, _ = run(capsys, *SIM)
    saved = tmp_path / "r.json"
    _, text_json, _ = run(capsys, *SIM, "--format", "json", "--save", str(saved))
    assert saved.read_text() == text_json
    records = json.loads(text_json)["records"]
    for row, rec in zip(rows(text_csv), records):
        for key in ("alpha", "eps_mean", "eps_stderr", "qw_mean", "qw_stderr"):
            assert float(row[key]) == rec[key]
        assert float(row["eps_quenched"]) == rec["prediction"]["eps_quenched"]

    code, out, err = run(capsys, "compare", "--result", str(saved))
    assert code == 0 and len(rows(out)) == 3
    assert "within 3 standard errors" in err


def test_compare_malformed_result(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{"config": \n  oops}\n')
    code, _, err = run(capsys, "compare", "--result", str(bad))
    assert code == 1 and f"{bad}:2" in err


def test_seed_from_environment(capsys, monkeypatch):
    args = ("gen", "--n-assets", "3", "--n-scenarios", "5")
    _, explicit, _ = run(capsys, *args, "--seed", "42")
    monkeypatch.setenv("REPLICA_PORTFOLIO_SEED", "42")
    _, from_env, _ = run(capsys, *args)
    assert from_env == explicit
    monkeypatch.setenv("REPLICA_PORTFOLIO_SEED", "forty-two")
    code, _, _ = run(capsys, *args)
    assert code == 2


def test_config_file_supplies_defaults(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("preset = 1A\nalpha = 2\nformat = json\n")
    code, out, _ = run(capsys, "predict", "--config", str(cfg))
    assert code == 0
    assert json.loads(out)[0]["eps_quenched"] == pytest.approx(1 / 6)
    # explicit flags still win
    _, out, _ = run(capsys, "predict", "--config", str(cfg), "--alpha", "3")
    assert json.loads(out)[0]["alpha"] == 3.0

    cfg.write_text("no_such_key = 1\n")
    code, _, err = run(capsys, "predict", "--config", str(cfg))
    assert code == 2 and "no_such_key" in err


def _eps_at(path, alpha):
    for row in rows(path.read_text()):
        if float(row["alpha"]) == alpha:
            return float(row["eps_mean"])
    raise KeyError(alpha)


@pytest.mark.parametrize(
    "figure, names, descending",
    [("fig2", ("1A", "1B", "1C"), True), ("fig4", ("2Aprime", "2Bprime", "2Cprime"), False)],
)
def test_reproduce_orderings(capsys, tmp_path, figure, names, descending):
    code, out, _ = run(capsys, "reproduce", figure, "--n-assets", "50", "--samples", "4",
                       "--alpha", "2:6:3", "--output-dir", str(tmp_path))
    assert code == 0
    written = out.split()
    assert len(written) == 4
    files = [tmp_path / f"{figure}_{n}.csv" for n in names]
    assert all(str(f) in written for f in files)
    for alpha in (2.0, 4.0, 6.0):
        eps = [_eps_at(f, alpha) for f in files]
        assert eps == sorted(eps, reverse=descending)
    curves = rows((tmp_path / f"{figure}_predictions.csv").read_text())
    assert len(curves) == 3 * 200
