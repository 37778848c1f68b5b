import math

import numpy as np
import orjson
import pandas as pd
import pytest

from sdirng.core.errors import ShapeError
from sdirng.data.bloch import behavior_from_strategy
from sdirng.analysis.protocol import CertificationResult
from sdirng.analysis.witness import evaluate, quantum_bound_seesaw, i4_witness
from sdirng.persistence.files import (
    dumps_json,
    load_certification,
    load_strategy,
    load_witness,
    save_certification,
    save_strategy,
    save_witness,
    write_csv,
)


def _result(**overrides) -> CertificationResult:
    values = dict(
        witness_estimate=3.4,
        confidence_radius=0.1 / 3,
        confidence_level=0.99,
        certified_entropy_per_round=0.05,
        input_entropy_per_round=0.6,
        net_expansion_per_round=-0.55,
        rounds_used=1000,
        test_rounds=100,
        generation_rounds=900,
        witness_lower_edge=3.4 - 0.1 / 3,
        certified_bits=45.0,
        witness_name="R43",
    )
    values.update(overrides)
    return CertificationResult(**values)


def test_witness_json_round_trip(tmp_path, r43):
    path = tmp_path / "r43.json"
    save_witness(r43, path)
    restored = load_witness(path)
    assert restored.same_coefficients(r43, atol=0.0)
    assert restored.labels == r43.labels
    assert restored.name == "R43"


def test_witness_from_yaml(tmp_path):
    path = tmp_path / "custom.yml"
    path.write_text('name: "custom"\ncoeffs:\n  - [1, -1]\n  - [1, 1]\n')
    witness = load_witness(path)
    assert witness.shape == (2, 2)
    assert witness.labels is None


def test_witness_without_coefficients(tmp_path):
    path = tmp_path / "bad.json"
    path.write_bytes(orjson.dumps({"name": "empty"}))
    with pytest.raises(ShapeError):
        load_witness(path)


def test_strategy_file_keeps_value(tmp_path):
    witness = i4_witness()
    optimum = quantum_bound_seesaw(witness, restarts=5, seed=0)
    path = tmp_path / "strategy.json"
    save_strategy(optimum.argmax_strategy, path)
    restored = load_strategy(path)
    assert restored.fixed_outcomes == optimum.argmax_strategy.fixed_outcomes
    assert math.isclose(evaluate(witness, behavior_from_strategy(restored)), optimum.value, abs_tol=1e-12)


def test_certification_round_trip_is_exact(tmp_path):
    path = tmp_path / "cert.json"
    result = _result()
    save_certification(result, path)
    assert load_certification(path) == result
    assert path.read_bytes().endswith(b"\n")


def test_certification_missing_field(tmp_path):
    path = tmp_path / "cert.json"
    payload = orjson.loads(dumps_json(_result().to_dict()))
    del payload["certified_bits"]
    path.write_bytes(orjson.dumps(payload))
    with pytest.raises(ShapeError):
        load_certification(path)


def test_json_is_sorted_and_numpy_aware():
    text = dumps_json({"b": np.float64(0.1), "a": np.arange(2)}, compact=True)
    assert text == b'{"a":[0,1],"b":0.1}'


def test_csv_floats_survive_round_trip(tmp_path):
    frame = pd.DataFrame({"value": [1 / 3, 2 * math.sqrt(3), 0.0]})
    path = tmp_path / "values.csv"
    write_csv(frame, path)
    assert pd.read_csv(path, float_precision="round_trip")["value"].tolist() == frame["value"].tolist()


def test_malformed_documents_raise_shape_errors(tmp_path):
    ragged = tmp_path / "ragged.yaml"
    ragged.write_text("coeffs:\n  - [1, 1]\n  - [1]\n")
    with pytest.raises(ShapeError):
        load_witness(ragged)

    broken = tmp_path / "broken.yaml"
    broken.write_text("coeffs: [[1, 1]\n")
    with pytest.raises(ShapeError):
        load_witness(broken)

    strategy = tmp_path / "strategy.json"
    strategy.write_bytes(orjson.dumps({"preparations": [[1, 0, 0], [0, 1]], "measurements": [[0, 0, 1], [1, 0, 0]]}))
    with pytest.raises(ShapeError):
        load_strategy(strategy)

    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(ShapeError):
        load_witness(listing)
    with pytest.raises(ShapeError):
        load_certification(listing)
