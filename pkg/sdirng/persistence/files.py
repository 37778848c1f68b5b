from __future__ import annotations

from dataclasses import asdict
from pathlib import Path
from typing import Any, TextIO

import orjson
import pandas as pd
import yaml

from sdirng.core.errors import ShapeError
from sdirng.analysis.protocol import CertificationResult
from sdirng.analysis.witness import WitnessSpec, witness_from_dict, witness_to_dict
from sdirng.data.bloch import Strategy, strategy_from_dict, strategy_to_dict

CSV_FLOAT_FORMAT = "%.17g"


def dumps_json(payload: Any, *, compact: bool = False) -> bytes:
    option = orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY
    if not compact:
        option |= orjson.OPT_INDENT_2
    return orjson.dumps(payload, option=option)


def write_json(payload: Any, path: Path) -> None:
    path.write_bytes(dumps_json(payload) + b"\n")


def read_json(path: Path) -> Any:
    try:
        return orjson.loads(path.read_bytes())
    except orjson.JSONDecodeError as exc:
        raise ShapeError(f"{path} is not valid JSON: {exc}") from exc


def _read_document(path: Path) -> dict[str, Any]:
    if path.suffix.lower() in (".yaml", ".yml"):
        try:
            return yaml.safe_load(path.read_text())
        except yaml.YAMLError as exc:
            raise ShapeError(f"{path} is not valid YAML: {exc}") from exc
    return read_json(path)


def load_witness(path: Path) -> WitnessSpec:
    return witness_from_dict(_read_document(path))


def save_witness(witness: WitnessSpec, path: Path) -> None:
    write_json(witness_to_dict(witness), path)


def load_strategy(path: Path) -> Strategy:
    return strategy_from_dict(_read_document(path))


def save_strategy(strategy: Strategy, path: Path) -> None:
    write_json(strategy_to_dict(strategy), path)


def save_certification(result: CertificationResult, path: Path) -> None:
    write_json(asdict(result), path)


def load_certification(path: Path) -> CertificationResult:
    return CertificationResult.from_dict(read_json(path))


def write_csv(frame: pd.DataFrame, target: Path | TextIO) -> None:
    frame.to_csv(target, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
