import math

import orjson
import pandas as pd

from sdirng.app import run
from sdirng.data.bloch import behavior_from_strategy
from sdirng.analysis.witness import evaluate, r43_witness
from sdirng.persistence.files import load_strategy


def _json(text: str):
    return orjson.loads(text)


def test_bounds_builtin_r43(tmp_path, capsys):
    strategy_path = tmp_path / "optimum.json"
    assert run(["bounds", "--builtin", "r43", "--strategy-out", str(strategy_path)]) == 0
    payload = _json(capsys.readouterr().out)
    assert payload["name"] == "R43"
    assert payload["classical"] == 3.0
    assert abs(payload["quantum_seesaw"] - 2 * math.sqrt(3)) <= 1e-9
    assert payload["quantum_grid"] <= 2 * math.sqrt(3) + 1e-9
    optimum = load_strategy(strategy_path)
    assert abs(evaluate(r43_witness(), behavior_from_strategy(optimum)) - payload["quantum_seesaw"]) <= 1e-12


def test_bounds_from_witness_file(tmp_path, capsys):
    path = tmp_path / "w.json"
    path.write_bytes(orjson.dumps({"name": "wide", "coeffs": [[1, -1, 1, 1], [1, 1, -1, 1]]}))
    assert run(["bounds", "--witness", str(path), "--restarts", "5"]) == 0
    payload = _json(capsys.readouterr().out)
    assert payload["name"] == "wide"
    assert payload["quantum_grid"] is None
    assert payload["classical"] <= payload["quantum_seesaw"] + 1e-9


def test_curve_endpoints_to_stdout(capsys):
    assert run(["curve", "--points", "2"]) == 0
    out = capsys.readouterr().out
    lines = out.strip().splitlines()
    assert lines[0] == "witness_value,p_lb_bound,min_entropy_bits"
    assert lines[1] == "3,1,0"
    last = [float(v) for v in lines[2].split(",")]
    assert last[0] == 2 * math.sqrt(3)
    assert abs(last[2] - 0.3424938) <= 1e-6


def test_curve_output_is_byte_identical(tmp_path):
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(["curve", "--points", "50", "--out", str(first)]) == 0
    assert run(["curve", "--points", "50", "--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    assert len(pd.read_csv(first)) == 50


def test_simulate_certify_extract_commands(tmp_path, capsys):
    log_path = tmp_path / "rounds.csv"
    cert_path = tmp_path / "cert.json"
    out_path = tmp_path / "random.bin"

    args = ["simulate", "--protocol", "r43", "--rounds", "400000", "--test-fraction", "0.2", "--noise", "0", "--seed", "9", "--out", str(log_path)]
    assert run(args) == 0
    summary = _json(capsys.readouterr().out)
    assert summary["rounds"] == 400_000
    first_bytes = log_path.read_bytes()
    assert run(args) == 0
    capsys.readouterr()
    assert log_path.read_bytes() == first_bytes

    assert run(["certify", "--log", str(log_path), "--confidence", "0.99", "--out", str(cert_path)]) == 0
    cert = _json(capsys.readouterr().out)
    assert cert["certified_entropy_per_round"] > 0.0
    assert _json(cert_path.read_text()) == cert

    assert run(["extract", "--log", str(log_path), "--cert", str(cert_path), "--out", str(out_path), "--seed-hex", "c0ffee"]) == 0
    report = _json(capsys.readouterr().out)
    assert report["output_bytes"] == len(out_path.read_bytes())
    assert report["output_bits"] == math.floor(cert["certified_bits"]) - 64


def test_missing_log_is_reported_as_json(tmp_path, capsys):
    assert run(["certify", "--log", str(tmp_path / "nope.csv")]) == 1
    error = _json(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "FileNotFoundError"


def test_domain_errors_exit_with_one(tmp_path, capsys):
    code = run(["simulate", "--rounds", "10", "--generation-setting", "9", "0", "--out", str(tmp_path / "x.csv")])
    assert code == 1
    error = _json(capsys.readouterr().err.strip().splitlines()[-1])
    assert error["error"] == "SettingRangeError"


def test_usage_errors_exit_with_two(capsys):
    assert run(["bounds", "--builtin", "r43", "--bogus"]) == 2
    assert run(["curve", "--points", "two"]) == 2
    assert run([]) == 2


def test_verify_quick_passes(capsys):
    assert run(["verify", "--quick"]) == 0
    lines = [_json(line) for line in capsys.readouterr().out.strip().splitlines()]
    assert len(lines) == 7
    assert all(line["passed"] for line in lines)


def _last_error(capsys) -> dict:
    return _json(capsys.readouterr().err.strip().splitlines()[-1])


def test_ragged_witness_file_is_reported_as_json(tmp_path, capsys):
    path = tmp_path / "ragged.json"
    path.write_bytes(orjson.dumps({"coeffs": [[1, 1, 1], [1, -1]]}))
    assert run(["bounds", "--witness", str(path)]) == 1
    assert _last_error(capsys)["error"] == "ShapeError"


def test_non_integer_round_log_is_reported_as_json(tmp_path, capsys):
    path = tmp_path / "bad.csv"
    path.write_text("round,x,y,b,is_test\n0,zero,0,1,1\n1,0,0,0,0\n")
    assert run(["certify", "--log", str(path)]) == 1
    assert _last_error(capsys)["error"] == "ShapeError"


def test_invalid_json_documents_are_reported(tmp_path, capsys):
    witness = tmp_path / "w.json"
    witness.write_text("{not json")
    assert run(["bounds", "--witness", str(witness)]) == 1
    assert _last_error(capsys)["error"] == "ShapeError"

    log_path = tmp_path / "rounds.csv"
    assert run(["simulate", "--rounds", "2000", "--out", str(log_path)]) == 0
    capsys.readouterr()
    cert = tmp_path / "cert.json"
    cert.write_text("[1, 2, 3]")
    assert run(["extract", "--log", str(log_path), "--cert", str(cert), "--out", str(tmp_path / "o.bin"), "--seed-hex", "ab"]) == 1
    assert _last_error(capsys)["error"] == "ShapeError"


def test_unreadable_path_is_reported(tmp_path, capsys):
    assert run(["bounds", "--witness", str(tmp_path)]) == 1
    assert _last_error(capsys)["error"] == "IsADirectoryError"
