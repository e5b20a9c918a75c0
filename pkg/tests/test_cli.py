import json

import pandas as pd
import pytest

from cli import main


def _json(capsys):
    return json.loads(capsys.readouterr().out)


def test_integrate(capsys):
    code = main(["integrate", "--kernel", "power-singular", "--alpha", "0.5",
                 "--order", "3", "--N", "20", "--f", "t"])
    assert code == 0
    data = _json(capsys)
    assert len(data["values"]) == 20
    assert data["error"] < 1e-12


def test_weights_csv(capsys):
    assert main(["weights", "--alpha", "0.5", "--order", "3", "--N", "8", "--raw"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0] == "k,w_tilde,w_0,w_1,w_2"
    assert len(lines) == 10


def test_weights_to_file(tmp_path):
    out = tmp_path / "w.csv"
    assert main(["weights", "--order", "alpha", "--alpha", "0.3", "--N", "5", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["k", "w_tilde"]
    assert len(frame) == 6


def test_stability_table(capsys):
    assert main(["stability", "--order", "3", "4", "5", "6"]) == 0
    out = capsys.readouterr().out
    assert "sigma_star" in out
    assert "False" in out


def test_stability_audit_and_schur(capsys):
    assert main(["stability", "--order", "3", "--kernel", "const", "--alpha", "0.5",
                 "--N", "8", "--lam", "0.1"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    audit = json.loads(lines[-2])
    schur = json.loads(lines[-1])
    assert audit["violations"] == []
    assert schur["order"] == 3
    assert "sufficient_bound" in schur


def test_stability_schur_uses_rule_weights(capsys):
    assert main(["stability", "--order", "2", "--kernel", "const", "--alpha", "0.5",
                 "--N", "10", "--lam", "2"]) == 0
    schur = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert schur["sufficient_bound"] == pytest.approx(2.0)
    assert schur["is_schur_by_bound"] is False
    assert schur["max_root_modulus"] > 1.0


def test_solve(capsys):
    assert main(["solve", "--example", "1", "--alpha", "0.5", "--order", "3", "--N", "40"]) == 0
    data = _json(capsys)
    assert data["E_inf"] < 1e-5
    assert len(data["u"]) == 41


def test_solve_error_exit_code(capsys):
    assert main(["solve", "--example", "custom", "--N", "10"]) == 2
    data = _json(capsys)
    assert data["success"] is False


def test_fracdiff(capsys):
    assert main(["--quiet", "fracdiff", "--alpha", "0.5", "--M", "9", "--N", "10", "20"]) == 0
    data = _json(capsys)
    assert data["kernel"] == "caputo"
    assert [row["N"] for row in data["rows"]] == [10, 20]


def _write_spec(tmp_path, golden):
    spec = {"name": "mini", "example": 1, "order": 2, "alphas": [0.5],
            "ladder": [10, 20], "golden": golden}
    path = tmp_path / "mini.json"
    path.write_text(json.dumps(spec))
    return path


def test_converge_check_passes(tmp_path, capsys):
    path = _write_spec(tmp_path, {"0.5": [{"N": 20, "rate_min": 1.0}]})
    out = tmp_path / "mini.csv"
    assert main(["--quiet", "converge", "--spec", str(path), "--out", str(out), "--check"]) == 0
    frame = pd.read_csv(out)
    assert frame["N"].tolist() == [10, 20]


def test_converge_check_fails(tmp_path, capsys):
    path = _write_spec(tmp_path, {"0.5": [{"N": 20, "rate": 9.0}]})
    assert main(["--quiet", "converge", "--spec", str(path), "--check"]) == 1
    reports = _json(capsys)
    assert reports[0]["experiment"] == "mini"


def test_converge_missing_spec(tmp_path, capsys):
    assert main(["converge", "--spec", str(tmp_path / "nope.json")]) == 2


def test_bare_out_name_goes_to_results_dir(tmp_path, monkeypatch):
    monkeypatch.setenv("QUAD_RESULTS_DIR", str(tmp_path / "results"))
    assert main(["integrate", "--N", "5", "--f", "one", "--out", "one.json"]) == 0
    assert (tmp_path / "results" / "one.json").exists()


def test_unknown_subcommand():
    with pytest.raises(SystemExit):
        main(["plot"])
