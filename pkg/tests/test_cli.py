import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from prospect import cli
from prospect.cli import EXIT_INVALID, EXIT_NUMERICAL, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == EXIT_OK, err
    return json.loads(out)


def write_csv(path, rows):
    path.write_text("\n".join(",".join(repr(float(v)) for v in np.atleast_1d(r)) for r in rows) + "\n")
    return str(path)


# ------------------------------------------------------------ prox-eval


def test_prox_eval_huber_gate(capsys):
    out = run_json(capsys, "prox-eval", "--kind", "huber", "--rho", "1", "--gamma", "1", "--eta", "-1", "--y", "0.5")
    assert out["eta"] == 0.0
    assert out["y"] == [0.0]
    assert out["input"]["rho"] == 1.0


def test_prox_eval_quadratic_cardano(capsys):
    out = run_json(capsys, "prox-eval", "--kind", "quadratic", "--alpha", "2", "--gamma", "1", "--eta", "0",
                   "--y", "2,0")
    # radial part t solves t^3 + 2t - 4 = 0, y = (2 - t, 0), eta = alpha t^2 / 4
    t = 2.0 - out["y"][0]
    assert t**3 + 2 * t - 4 == pytest.approx(0.0, abs=1e-12)
    assert t == pytest.approx(1.17951, abs=1e-5)
    assert out["eta"] == pytest.approx(0.5 * t * t, abs=1e-12)
    assert out["eta"] == pytest.approx(0.69562, abs=1e-5)
    assert out["y"][1] == 0.0


def test_prox_eval_vapnik_inside_tube(capsys):
    out = run_json(capsys, "prox-eval", "--kind", "vapnik", "--epsilon", "0.5", "--gamma", "1", "--eta", "1",
                   "--y", "0.3")
    assert out["eta"] == pytest.approx(1.0, abs=1e-15)
    assert out["y"] == pytest.approx([0.3], abs=1e-15)


def test_prox_eval_writes_file(capsys, tmp_path):
    dest = tmp_path / "p.json"
    code, out, _ = run(capsys, "prox-eval", "--kind", "sqrt", "--gamma", "1", "--eta", "0.2", "--y", "1,1",
                       "--out", str(dest))
    assert code == EXIT_OK and out == ""
    data = json.loads(dest.read_text())
    assert data["input"]["kind"] == "sqrt"


def test_prox_eval_separable(capsys):
    out = run_json(capsys, "prox-eval", "--kind", "separable", "--gamma", "1", "--eta=-5,1", "--y", "0.1,3")
    assert len(out["eta"]) == 2 and len(out["y"]) == 2
    assert out["eta"][0] == 0.0 and out["y"][0] == 0.0


@pytest.mark.parametrize("argv, needle", [
    (["--kind", "huber", "--gamma", "1", "--eta", "0", "--y", "1,2"], "scalar"),
    (["--kind", "power", "--q", "1", "--gamma", "1", "--eta", "0", "--y", "1"], "q"),
    (["--kind", "quadratic", "--gamma", "-1", "--eta", "0", "--y", "1"], "gamma"),
    (["--kind", "separable", "--gamma", "1", "--eta", "0", "--y", "1,2"], "same number"),
    (["--kind", "quadratic", "--gamma", "1", "--eta", "0", "--y", "1,x"], ""),
])
def test_prox_eval_invalid(capsys, argv, needle):
    code, _, err = run(capsys, "prox-eval", *argv)
    assert code == EXIT_INVALID
    assert needle in err


# ------------------------------------------------------------ trex


def identity_data(tmp_path):
    X = np.vstack([np.eye(4), np.eye(4)])
    b = np.array([2.0, 0.0, -1.5, 0.0])
    return write_csv(tmp_path / "X.csv", X), write_csv(tmp_path / "z.csv", X @ b)


def test_trex_rejects_q_one(capsys, tmp_path):
    xp, zp = identity_data(tmp_path)
    code, _, err = run(capsys, "trex", "--X", xp, "--z", zp, "--q", "1")
    assert code == EXIT_INVALID
    assert "square-root Lasso" in err


def test_trex_noiseless_identity_support(capsys, tmp_path):
    xp, zp = identity_data(tmp_path)
    stem = tmp_path / "fit"
    code, out, err = run(capsys, "trex", "--X", xp, "--z", zp, "--alpha", "0.5", "--q", "2", "--out", str(stem))
    assert code == EXIT_OK, err
    assert out == ""
    data = json.loads((tmp_path / "fit.json").read_text())
    assert data["result"]["support"] == [0, 2]
    assert data["result"]["converged"] is True
    assert data["config"]["problem"] == {"alpha": 0.5, "q": 2.0}
    with open(tmp_path / "fit.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["j", "coef"]
    coef = np.array([float(r[1]) for r in rows[1:]])
    np.testing.assert_array_equal(coef, np.array(data["result"]["b_hat"]))
    assert [int(r[0]) for r in rows[1:]] == [0, 1, 2, 3]


def test_trex_parallel_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 3, "model": {"n": 20, "p": 8, "m": 2, "sigma": 0.5},
                               "problem": {"alpha": 0.5, "q": 1.5}, "solver": {"tol": 1e-8}}))
    outs = []
    for par in ("1", "2"):
        stem = tmp_path / f"r{par}"
        assert main(["trex", "--config", str(cfg), "--parallel", par, "--out", str(stem)]) == EXIT_OK
        outs.append(((tmp_path / f"r{par}.json").read_bytes(), (tmp_path / f"r{par}.csv").read_bytes()))
    assert outs[0] == outs[1]


def test_trex_nonconverged_exit_code(capsys, tmp_path):
    xp, zp = identity_data(tmp_path)
    code, out, _ = run(capsys, "trex", "--X", xp, "--z", zp, "--q", "1.5", "--max-iter", "2")
    assert code == EXIT_NUMERICAL
    assert json.loads(out)["result"]["converged"] is False


def test_trex_malformed_csv_names_line(capsys, tmp_path):
    xp = tmp_path / "X.csv"
    xp.write_text("1,0\n0,1\n1,oops\n")
    zp = write_csv(tmp_path / "z.csv", [1.0, 2.0, 3.0])
    code, _, err = run(capsys, "trex", "--X", str(xp), "--z", zp)
    assert code == EXIT_INVALID
    assert "line 3" in err


@pytest.mark.parametrize("body, needle", [
    ("1,0\n0,1,2\n", "line 2"),
    ("1,nan\n", "line 1"),
    ("", "no data"),
])
def test_read_matrix_csv_errors(tmp_path, body, needle):
    path = tmp_path / "bad.csv"
    path.write_text(body)
    with pytest.raises(cli.InvalidInput, match=needle):
        cli.read_matrix_csv(str(path))


def test_trex_mismatched_rows(capsys, tmp_path):
    xp, _ = identity_data(tmp_path)
    zp = write_csv(tmp_path / "z3.csv", [1.0, 2.0, 3.0])
    code, _, err = run(capsys, "trex", "--X", xp, "--z", zp)
    assert code == EXIT_INVALID and "rows" in err


def test_unknown_config_keys(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"solver": {"gama": 1.0}}))
    xp, zp = identity_data(tmp_path)
    code, _, err = run(capsys, "trex", "--config", str(cfg), "--X", xp, "--z", zp)
    assert code == EXIT_INVALID and "gama" in err
    cfg.write_text(json.dumps({"bogus": {}}))
    code, _, err = run(capsys, "trex", "--config", str(cfg), "--X", xp, "--z", zp)
    assert code == EXIT_INVALID and "bogus" in err


def test_config_not_json(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text("{not json")
    code, _, _ = run(capsys, "scaling", "--config", str(cfg))
    assert code == EXIT_INVALID


def test_bad_log_level(capsys, monkeypatch):
    monkeypatch.setenv("PROSPECT_LOG", "shouty")
    code, _, err = run(capsys, "prox-eval", "--kind", "sqrt", "--gamma", "1", "--eta", "0", "--y", "1")
    assert code == EXIT_INVALID and "PROSPECT_LOG" in err


def test_parallel_must_be_positive(capsys):
    code, _, _ = run(capsys, "scaling", "--parallel", "0")
    assert code == EXIT_INVALID


def test_unknown_flag_exits_two(capsys):
    assert main(["trex", "--frobnicate"]) == 2


# ------------------------------------------------------------ experiments


def test_scaling_rows(capsys, tmp_path):
    out = tmp_path / "s.csv"
    code, stdout, err = run(capsys, "scaling", "--dims", "20,50", "--n", "20", "--reps", "2", "--seed", "1",
                            "--out", str(out))
    assert code == EXIT_OK, err
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    times = [r for r in rows if r["metric"].startswith("time")]
    assert len(times) == 2 * 2 * 2  # two dims, two variants, two reps
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["summary"]["config"]["dims"] == [20, 50]
    assert json.loads(stdout)["config"]["repetitions"] == 2


def test_phase_transition_smoke(capsys, tmp_path):
    out = tmp_path / "pt.csv"
    argv = ["phase-transition", "--theta", "0.4,1.6", "--q", "3/2,2", "--reps", "2", "--p", "16",
            "--alpha-grid", "0.2,0.5,1.0", "--seed", "0", "--out", str(out)]
    code, stdout, err = run(capsys, *argv)
    assert code == EXIT_OK, err
    summary = json.loads(stdout)
    rates = summary["recovery_rate"]
    assert set(rates) == {"1.5", "2.0"} or len(rates) == 2
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert rows and {"config_id", "seed", "metric", "value"} <= set(rows[0])
    side = json.loads(out.with_suffix(".json").read_text())
    assert side["summary"]["config"]["theta_grid"] == [0.4, 1.6]
    # without --out the table goes to stdout unchanged
    code, stdout2, _ = run(capsys, *argv[:-2])
    assert code == EXIT_OK
    assert stdout2 == out.read_text()


def test_phase_transition_keep_flag(capsys):
    code, _, err = run(capsys, "phase-transition", "--keep", "-1", "--reps", "1")
    assert code == EXIT_INVALID and "keep" in err


# ------------------------------------------------------------ selftest


def test_selftest_small(capsys, tmp_path):
    out = tmp_path / "st.csv"
    code, stdout, err = run(capsys, "selftest", "--kinds", "huber,quadratic", "--draws", "20", "--pairs", "200",
                            "--out", str(out))
    assert code == EXIT_OK, err
    summary = json.loads(stdout)
    assert summary["passed"] is True
    assert summary["max_firm_nonexpansive_violation"] <= 1e-10
    assert {s["kind"] for s in summary["suites"]} == {"huber", "quadratic"}
    assert out.exists()


def test_selftest_failure_exit_code(capsys, monkeypatch):
    from prospect import selftest

    real = selftest.firm_nonexpansive_suite

    def broken(name, *a, **k):
        r = real(name, *a, **k)
        r.max_violation = 1.0
        return r

    monkeypatch.setattr(selftest, "firm_nonexpansive_suite", broken)
    code, stdout, _ = run(capsys, "selftest", "--kinds", "sqrt", "--pairs", "50", "--no-oracle")
    assert code == EXIT_NUMERICAL
    assert json.loads(stdout)["passed"] is False


def test_selftest_unknown_kind(capsys):
    code, _, err = run(capsys, "selftest", "--kinds", "nope")
    assert code == EXIT_INVALID and "nope" in err


def test_console_script_version():
    res = subprocess.run([sys.executable, "-m", "prospect.cli", "--version"], capture_output=True, text=True)
    assert res.returncode == 0
    assert res.stdout.startswith("prospect ")
