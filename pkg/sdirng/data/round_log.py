from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any
import logging

import numpy as np
import orjson
import pandas as pd
import pyarrow as pa
import pyarrow.parquet as pq

from sdirng.core.errors import SettingRangeError, ShapeError

logger = logging.getLogger(__name__)

ROUND_COLUMNS = ["round", "x", "y", "b", "is_test"]
_META_PREFIX = "# sdirng "
_META_KEY = b"sdirng"


@dataclass
class RoundLog:
    rounds: pd.DataFrame
    seed: int | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        missing = [c for c in ROUND_COLUMNS if c not in self.rounds.columns]
        if missing:
            raise ShapeError(f"Round log missing columns: {', '.join(missing)}")
        df = self.rounds[ROUND_COLUMNS].reset_index(drop=True)
        try:
            df = df.astype({"round": "int64", "x": "int64", "y": "int64", "b": "int8", "is_test": "bool"})
        except (TypeError, ValueError) as exc:
            raise ShapeError(f"Round log columns must hold integers: {exc}") from exc
        if len(df) and (df["x"].min() < 0 or df["y"].min() < 0):
            raise SettingRangeError("Setting indices must be non-negative")
        if len(df) and not df["b"].isin([0, 1]).all():
            raise SettingRangeError("Outcomes must be 0 or 1")
        self.rounds = df

    def __len__(self) -> int:
        return len(self.rounds)

    @property
    def test_rounds(self) -> pd.DataFrame:
        return self.rounds[self.rounds["is_test"]]

    @property
    def generation_rounds(self) -> pd.DataFrame:
        return self.rounds[~self.rounds["is_test"]]

    @property
    def test_fraction(self) -> float:
        if not len(self.rounds):
            return 0.0
        return float(self.rounds["is_test"].mean())

    def check_settings(self, num_preparations: int, num_measurements: int) -> None:
        if not len(self.rounds):
            return
        if self.rounds["x"].max() >= num_preparations or self.rounds["y"].max() >= num_measurements:
            raise ShapeError(
                f"Round log uses settings beyond a {num_preparations}x{num_measurements} protocol"
            )

    def cell_statistics(self, num_preparations: int, num_measurements: int) -> pd.DataFrame:
        """Per-cell test-round counts and estimated p(b=0|x,y) over the full grid."""
        self.check_settings(num_preparations, num_measurements)
        tests = self.test_rounds
        grouped = (
            tests.assign(zero=(tests["b"] == 0).astype("int64"))
            .groupby(["x", "y"])["zero"]
            .agg(["count", "sum"])
        )
        grid = pd.MultiIndex.from_product([range(num_preparations), range(num_measurements)], names=["x", "y"])
        stats = grouped.reindex(grid, fill_value=0).rename(columns={"count": "n", "sum": "zeros"})
        stats["p0"] = np.where(stats["n"] > 0, stats["zeros"] / stats["n"].where(stats["n"] > 0, 1), np.nan)
        return stats.reset_index()

    def generation_bits(self) -> np.ndarray:
        return self.generation_rounds["b"].to_numpy(dtype=np.uint8)


def write_round_log(log: RoundLog, path: Path) -> None:
    meta = {"seed": log.seed, **log.metadata}
    if path.suffix.lower() == ".parquet":
        table = pa.Table.from_pandas(log.rounds, preserve_index=False)
        schema_meta = dict(table.schema.metadata or {})
        schema_meta[_META_KEY] = orjson.dumps(meta)
        pq.write_table(table.replace_schema_metadata(schema_meta), path)
    else:
        with path.open("w", encoding="utf-8", newline="") as handle:
            handle.write(_META_PREFIX + orjson.dumps(meta, option=orjson.OPT_SORT_KEYS).decode() + "\n")
            log.rounds.assign(
                b=log.rounds["b"].astype("int64"),
                is_test=log.rounds["is_test"].astype("int64"),
            ).to_csv(handle, index=False)
    logger.debug("wrote %d rounds to %s", len(log), path)


def read_round_log(path: Path) -> RoundLog:
    if not path.exists():
        raise FileNotFoundError(f"Round log not found: {path}")
    try:
        df, meta = _read_frame(path)
    except (orjson.JSONDecodeError, pd.errors.ParserError, pd.errors.EmptyDataError, pa.ArrowInvalid) as exc:
        raise ShapeError(f"Unreadable round log {path}: {exc}") from exc
    seed = meta.pop("seed", None)
    return RoundLog(rounds=df, seed=seed, metadata=meta)


def _read_frame(path: Path) -> tuple[pd.DataFrame, dict[str, Any]]:
    meta: dict[str, Any] = {}
    if path.suffix.lower() == ".parquet":
        table = pq.read_table(path)
        raw = (table.schema.metadata or {}).get(_META_KEY)
        if raw:
            meta = orjson.loads(raw)
        df = table.to_pandas()
    else:
        with path.open("r", encoding="utf-8") as handle:
            first = handle.readline()
        if first.startswith(_META_PREFIX):
            meta = orjson.loads(first[len(_META_PREFIX):])
        df = pd.read_csv(path, comment="#")
        df.columns = [c.strip() for c in df.columns]
        if "is_test" in df.columns:
            df["is_test"] = df["is_test"].astype(str).str.strip().str.lower().isin(["1", "true"])
    return df, meta
