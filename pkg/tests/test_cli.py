import json
import subprocess
import sys

import pytest

from hypcocycles import cli


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def records(out):
    return [json.loads(line) for line in out.splitlines()]


def test_gamma_eval(capsys):
    code, out, _ = run(["gamma-eval", "--word", "a1 a2^-1", "--point", "0,0"], capsys)
    assert code == 0
    r = records(out)[0]
    assert r["gamma"] == "a1 a2^-1" and r["region"].startswith("Core")
    assert r["command"] == "gamma-eval" and len(r["config_hash"]) == 16


def test_volume_eval(capsys):
    code, out, _ = run(["volume-eval", "--words", "e;a1;a2"], capsys)
    # o, a1 o, a2 o run counterclockwise
    assert code == 0 and records(out)[0]["volume"] > 0
    code, out, _ = run(["volume-eval", "--dim", "3", "--words", "e;a;b^-1;a b"], capsys)
    assert code == 0 and 0 < abs(records(out)[0]["volume"]) < 1.01495


def test_checks_pass(capsys):
    for argv in (["cocycle-check", "--trials", "50"], ["euler-eval", "--trials", "100"],
                 ["fan-pairing"], ["build-surface"], ["dirac-check", "--trials", "20"]):
        code, out, _ = run(argv, capsys)
        assert code == 0, argv
        assert records(out)[-1]["pass"] is True


def test_rotation_number(capsys):
    code, out, _ = run(["rotation-number", "--iters", "300000"], capsys)
    assert records(out)[0]["rotation_number"] == 1 / 3
    code, out, _ = run(["rotation-number", "--word", "a1 b1", "--iters", "1000"], capsys)
    assert code == 0


def test_failed_check_exits_1(capsys):
    # 1e3 samples cannot reach the stderr target of 0.02
    code, out, _ = run(["sample-area", "--n", "1000"], capsys)
    assert code == 1 and records(out)[0]["pass"] is False


def test_validation_errors_exit_2(capsys, tmp_path):
    assert run(["sample-area", "--n", "0"], capsys)[0] == 2
    assert run(["gamma-eval", "--word", "a1", "--set", "eta=2"], capsys)[0] == 2
    assert run(["gamma-eval", "--word", "a1", "--set", "bogus=1"], capsys)[0] == 2
    assert run(["gamma-eval", "--word", "b7"], capsys)[0] == 2
    assert run(["gamma-eval", "--word", "a1", "--point", "1,2,3"], capsys)[0] == 2
    assert run(["no-such-command"], capsys)[0] == 2
    bad = tmp_path / "c.json"
    bad.write_text('{"widths": [0.1]}')
    code, _, err = run(["build-surface", "--config", str(bad)], capsys)
    assert code == 2 and json.loads(err)["error"] == "validation"


def test_quadrature_budget_exits_3(capsys, monkeypatch):
    from hypcocycles import simplex_volume as sv

    orig = sv.integrate_geodesic_tetrahedron
    monkeypatch.setattr(sv, "integrate_geodesic_tetrahedron", lambda x, tol, max_cells=0, **kw: orig(x, tol, max_cells=8))
    code, _, err = run(["volume-eval", "--dim", "3", "--words", "e;a;b^-1;a b"], capsys)
    assert code == 3
    e = json.loads(err)
    assert e["error"] == "quadrature" and e["partial_estimate"] != 0


def test_config_file_and_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"eta": 0.2, "r_B": 0.15}))
    code, out, _ = run(["gamma-eval", "--word", "a1", "--config", str(cfg), "--set", "widths=[0.07,0.07]"], capsys)
    assert code == 0
    loaded = cli.load_config(str(cfg), ["widths=[0.07,0.07]"])
    assert records(out)[0]["config_hash"] == cli.config_hash(loaded)
    assert loaded["eta"] == 0.2 and loaded["widths"] == [0.07, 0.07]


def test_out_file(tmp_path, capsys):
    path = tmp_path / "o.jsonl"
    code, out, _ = run(["fan-pairing", "--out", str(path)], capsys)
    assert code == 0 and out == ""
    assert records(path.read_text())[0]["pass"] is True


def test_reruns_are_byte_identical(capsys):
    argv = ["gamma-b", "--n-samples", "3000", "--seed", "9"]
    a = run(argv, capsys)[1]
    b = run(argv, capsys)[1]
    assert a == b and a


def test_console_entry_point():
    p = subprocess.run([sys.executable, "-m", "hypcocycles.cli", "fan-pairing"], capture_output=True, text=True)
    assert p.returncode == 0
    assert json.loads(p.stdout)["command"] == "fan-pairing"


def test_witness_reports_missing_elliptic_product(capsys):
    code, out, _ = run(["witness", "--max-length", "3"], capsys)
    recs = [json.loads(line) for line in out.splitlines()]
    assert recs[0]["pass"] and recs[0]["gap"] > 0.01
    assert recs[1]["elliptic_product"] is False and recs[1]["min_abs_trace"] > 2
    assert code == 1


def test_sample_failure_exits_3(capsys, monkeypatch):
    from hypcocycles import finger_push as fp

    def boom(*args, **kw):
        raise fp.SampleFailure("cocycle failed at 1 sample point")

    monkeypatch.setattr(fp, "inequality_report", boom)
    code, _, err = run(["inequality", "--n-samples", "1000"], capsys)
    assert code == 3 and json.loads(err)["error"] == "numerical"
