import csv
import io
import json
import math

import pytest

from ladderepoch import __version__
from ladderepoch.cli import EXIT_CONFIG, EXIT_CONSISTENCY, EXIT_OK, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_exact_three_eighths(capsys):
    code, out, _ = run(capsys, "exact", "--model", "pm1", "--a", "0", "--n", "3")
    assert code == EXIT_OK
    (row,) = rows(out)
    assert float(row["dp"]) == 0.375 and float(row["spitzer"]) == 0.375
    assert row["code_version"] == __version__ and row["seed"] == "0"


def test_exact_genf_column(capsys):
    code, out, _ = run(capsys, "exact", "--model", "biased", "--a", "0.1,0.3", "--n", "5,20,50")
    assert code == EXIT_OK
    for row in rows(out):
        assert float(row["genf_check"]) < 1e-10
        assert float(row["rel_diff"]) <= 1e-10


def test_exact_bruteforce_route(capsys):
    code, out, _ = run(capsys, "exact", "--model", "pm1", "--a", "0.5", "--n", "6",
                       "--routes", "dp,spitzer,bruteforce")
    assert code == EXIT_OK
    (row,) = rows(out)
    assert float(row["bruteforce"]) == pytest.approx(float(row["dp"]), abs=1e-12)


def test_exact_disagreement_exit(capsys):
    code, _, err = run(capsys, "exact", "--model", "biased", "--a", "0.1", "--n", "50",
                       "--tolerance", "0")
    assert code in (EXIT_OK, EXIT_CONSISTENCY)
    code, _, err = run(capsys, "exact", "--model", "biased", "--a", "0.1", "--n", "50",
                       "--tolerance", "-1")
    assert code == EXIT_CONSISTENCY and err


def test_empty_n_grid(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"drifts": [0.1], "ns": []}))
    code, _, err = run(capsys, "exact", "--config", str(cfg))
    assert code == EXIT_CONFIG and "n grid" in err


def test_unknown_config_key(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"drift": [0.1]}))
    code, _, err = run(capsys, "exact", "--config", str(cfg))
    assert code == EXIT_CONFIG and "unknown" in err


def test_bad_model(capsys):
    code, _, err = run(capsys, "exact", "--model", "nope", "--a", "0", "--n", "3")
    assert code == EXIT_CONFIG
    code, _, _ = run(capsys, "exact", "--model", "gaussian", "--a", "0", "--n", "3")
    assert code == EXIT_CONFIG


def test_usage_error(capsys):
    assert run(capsys, "frobnicate")[0] == EXIT_CONFIG
    assert run(capsys, "exact", "--n", "x")[0] == EXIT_CONFIG


def test_config_plus_overrides(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"model": {"kind": "biased"}, "drifts": [0.2], "ns": [10], "seed": 4}))
    code, out, _ = run(capsys, "exact", "--config", str(cfg), "--n", "7")
    assert code == EXIT_OK
    (row,) = rows(out)
    assert row["n"] == "7" and row["seed"] == "4"


def test_byte_identical_reruns(tmp_path, capsys):
    for sub, extra in (("exact", ["--n", "10,40"]),
                       ("mc", ["--n", "10", "--paths", "20000", "--seed", "3", "--routes", "tilted"]),
                       ("transition-scan", ["--v", "0.25,1"])):
        outs = []
        for k in range(2):
            path = tmp_path / f"{sub}{k}.out"
            code = main([sub, "--model", "biased", "--a", "0.2", *extra, "--output", str(path)])
            assert code == EXIT_OK
            outs.append(path.read_bytes())
        assert outs[0] == outs[1] and outs[0]


def test_output_directory(tmp_path, capsys):
    d = tmp_path / "out"
    d.mkdir()
    assert main(["exact", "--a", "0", "--n", "3", "--output", str(d)]) == EXIT_OK
    assert (d / "exact.csv").exists()


def test_mc_json(capsys):
    code, out, _ = run(capsys, "mc", "--model", "pm1", "--a", "0", "--n", "3",
                       "--paths", "200000", "--seed", "5")
    assert code == EXIT_OK
    doc = json.loads(out)
    rec = doc["estimates"][0] if "estimates" in doc else doc[0]
    assert abs(rec["value"] - 0.375) < 4 * rec["stderr"]
    assert rec["seed"] == 5


def test_transition_scan_trend(capsys):
    code, out, _ = run(capsys, "transition-scan", "--model", "biased", "--a", "0.1,0.05,0.02",
                       "--v", "0,0.25,1,4")
    assert code == EXIT_OK
    table = rows(out)
    by_a = {}
    for r in table:
        by_a.setdefault(float(r["a"]), []).append(r)
    for a, rs in by_a.items():
        ratios = [float(r["ratio"]) for r in rs]
        assert ratios[0] == 1.0
        assert all(x > y for x, y in zip(ratios, ratios[1:]))
    v1 = [float(r["ratio"]) for r in table if float(r["v"]) == 1]
    lim = float(next(r for r in table if float(r["v"]) == 1)["limit_correction"])
    assert lim == pytest.approx(0.2088, abs=1e-4)
    errs = [abs(x - lim) for x in v1]
    assert errs[0] > errs[1] > errs[2]


def test_transition_scan_needs_v(capsys):
    assert run(capsys, "transition-scan", "--a", "0.1")[0] == EXIT_CONFIG


def test_regime_scan(capsys):
    code, out, _ = run(capsys, "regime-scan", "--model", "biased", "--a", "0.02",
                       "--n", "1,2500,40000", "--routes", "dp")
    assert code == EXIT_OK
    labels = [r["label"] for r in rows(out)]
    assert labels == ["zero-drift", "transition", "LD-normal"]
    assert all(r["exact"] for r in rows(out))


def test_decide_transition(capsys):
    code, out, err = run(capsys, "decide", "--model", "pm1", "--a", "0.001", "--n", "100000")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["label"] == "transition"
    assert doc["u"] == pytest.approx(math.sqrt(0.1), rel=1e-12)
    assert doc["inputs"]["correction"] == pytest.approx(0.65325, abs=1e-5)
    assert "regime" in err and "recommended" in err


def test_decide_zero_drift(capsys):
    for model in ("pm1", "biased", "gaussian"):
        code, out, _ = run(capsys, "decide", "--model", model, "--a", "0.001", "--n", "100")
        assert code == EXIT_OK and json.loads(out)["label"] == "zero-drift"


def test_decide_ld_tail(capsys):
    code, out, _ = run(capsys, "decide", "--model", "pareto3.5", "--a", "0.3", "--n", "10000")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["label"] == "LD-tail"
    assert doc["predictor"] == pytest.approx(doc["inputs"]["etau"] * 0.1 * 3000**-3.5, rel=0.01)


def test_decide_needs_single_point(capsys):
    assert run(capsys, "decide", "--a", "0.1,0.2", "--n", "10")[0] == EXIT_CONFIG


def test_verify_subset(capsys):
    code, out, _ = run(capsys, "verify", "--only", "golden,cramer")
    assert code == EXIT_OK
    assert "golden" in out and "cramer" in out
    assert run(capsys, "verify", "--only", "bogus")[0] == EXIT_CONFIG


def test_calibrate_fn(capsys):
    code, out, _ = run(capsys, "calibrate-fn", "--model", "pm1", "--n", "50")
    assert code == EXIT_OK
    assert out


def test_version(capsys):
    code, out, _ = run(capsys, "--version")
    assert code == EXIT_OK and __version__ in out
