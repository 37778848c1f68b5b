from __future__ import annotations

from dataclasses import dataclass


STATE_TOL = 1e-12
NORMALIZE_TOL = 1e-9

CLASSICAL_ENUM_LIMIT = 20
GRID_MAX_RESOLUTION = 200
GRID_MAX_SETTINGS = 3
LEMMA_MAX_SETTINGS = 9

EXTRACTOR_MARGIN_BITS = 64


@dataclass
class SeesawConfig:
    restarts: int = 20
    seed: int = 0
    tolerance: float = 1e-12
    max_iterations: int = 10_000
    trivial_measurements: bool = True
    classical_start: bool = True
    workers: int = 1


@dataclass
class GridConfig:
    resolution: int = 60


@dataclass
class LemmaConfig:
    trials: int = 200
    iterations: int = 4000
    seed: int = 0


@dataclass
class SimulationConfig:
    rounds: int = 1_000_000
    test_fraction: float = 0.1
    noise: float = 0.0
    generation_setting: tuple[int, int] = (0, 0)
    seed: int = 0
    shard_size: int = 65_536
    workers: int = 1


@dataclass
class CertifyConfig:
    confidence_level: float = 0.99


@dataclass
class ExtractConfig:
    security_margin: int = EXTRACTOR_MARGIN_BITS


@dataclass
class VerifyConfig:
    seed: int = 0
    lemma_trials: int = 200
    floor_max_settings: int = 300
    curve_points: int = 20
    curve_restarts: int = 6
    scan_samples: int = 10_000
    scan_max_settings: int = 6
    scan_restarts: int = 5
    random_witnesses: int = 100

    @classmethod
    def quick(cls, seed: int = 0) -> "VerifyConfig":
        return cls(
            seed=seed,
            lemma_trials=60,
            curve_points=5,
            curve_restarts=3,
            scan_samples=300,
            random_witnesses=20,
        )
