from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any
import logging
import math

import numpy as np
import pandas as pd

from sdirng.core.config import SeesawConfig, SimulationConfig
from sdirng.core.errors import InsufficientDataError, SettingRangeError, ShapeError
from sdirng.data.bloch import Strategy, behavior_from_strategy, depolarize
from sdirng.data.round_log import RoundLog
from sdirng.analysis.entropy import (
    R43_CLASSICAL,
    R43_QUANTUM,
    max_certifiable_entropy,
    min_entropy,
    r43_entropy_curve,
)
from sdirng.analysis.witness import (
    WitnessSpec,
    evaluate,
    i4_witness,
    quantum_bound_seesaw,
    r33_witness,
    r43_ideal_strategy,
    r43_witness,
)

logger = logging.getLogger(__name__)

BUILTIN_PROTOCOLS = ("r43", "r33")
R33_TASK_AVERAGE = (6 * 0.5 * (1 + 1 / math.sqrt(2)) + 2) / 9


@dataclass(frozen=True)
class ProtocolSpec:
    strategy: Strategy
    witness: WitnessSpec
    labels: tuple[str, ...] | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        shape = (self.strategy.num_preparations, self.strategy.num_measurements)
        if shape != self.witness.shape:
            raise ShapeError(f"Strategy shape {shape} does not match witness shape {self.witness.shape}")
        if self.labels is not None and len(self.labels) != shape[0]:
            raise ShapeError("Protocol labels must name every preparation")


@dataclass(frozen=True)
class CertificationResult:
    witness_estimate: float
    confidence_radius: float
    confidence_level: float
    certified_entropy_per_round: float
    input_entropy_per_round: float
    net_expansion_per_round: float
    rounds_used: int
    test_rounds: int
    generation_rounds: int
    witness_lower_edge: float
    certified_bits: float
    witness_name: str

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CertificationResult":
        if not isinstance(data, dict):
            raise ShapeError("Certification document must be a mapping")
        try:
            return cls(**{name: data[name] for name in cls.__dataclass_fields__})
        except KeyError as exc:
            raise ShapeError(f"Certification document is missing {exc.args[0]!r}") from exc


@dataclass
class ThreePreparationCheck:
    witness_value: float
    task_average: float
    min_entropy: float
    ceiling: float

    @property
    def passed(self) -> bool:
        return self.task_average >= R33_TASK_AVERAGE - 1e-9 and self.min_entropy < self.ceiling


def r43_ideal() -> ProtocolSpec:
    witness = r43_witness()
    return ProtocolSpec(r43_ideal_strategy(), witness, labels=witness.labels, name="r43")


def r33_construction() -> ProtocolSpec:
    """Three strings on three of the four 2->1 QRAC states, the third bit read along their bisector."""
    h = 1.0 / math.sqrt(2.0)
    preparations = np.array([[h, h, 0.0], [h, -h, 0.0], [-h, h, 0.0]])
    axes = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [h, h, 0.0]])
    witness = r33_witness()
    return ProtocolSpec(Strategy.from_arrays(preparations, axes), witness, labels=witness.labels, name="r33")


def builtin_protocol(name: str) -> ProtocolSpec:
    key = name.lower()
    if key == "r43":
        return r43_ideal()
    if key == "r33":
        return r33_construction()
    raise SettingRangeError(f"Unknown protocol {name!r}; choose from {', '.join(BUILTIN_PROTOCOLS)}")


def guessing_average(spec: ProtocolSpec) -> float:
    """Success rate of the guessing task the witness signs define (positive -> 0, negative -> 1)."""
    w = spec.witness.coeffs
    probs = behavior_from_strategy(spec.strategy).probs
    success = np.where(w > 0, probs, 1.0 - probs)
    return float(success[w != 0].mean())


def expected_witness(spec: ProtocolSpec, noise: float = 0.0) -> float:
    if not 0.0 <= noise <= 1.0:
        raise SettingRangeError(f"Noise must lie in [0, 1], got {noise}")
    offset = 0.5 * float(spec.witness.coeffs.sum())
    ideal = evaluate(spec.witness, behavior_from_strategy(spec.strategy))
    return (1.0 - noise) * (ideal - offset) + offset


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _simulate_shard(
    probs: np.ndarray,
    shard: int,
    size: int,
    seed: int,
    test_fraction: float,
    generation_setting: tuple[int, int],
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(shard,)))
    num_x, num_y = probs.shape
    is_test = rng.random(size) < test_fraction
    x = np.where(is_test, rng.integers(0, num_x, size), generation_setting[0])
    y = np.where(is_test, rng.integers(0, num_y, size), generation_setting[1])
    b = (rng.random(size) >= probs[x, y]).astype(np.int8)
    return x, y, b, is_test


def simulate_rounds(
    spec: ProtocolSpec,
    n: int,
    test_fraction: float = 0.1,
    generation_setting: tuple[int, int] = (0, 0),
    noise: float = 0.0,
    seed: int = 0,
    *,
    config: SimulationConfig | None = None,
) -> RoundLog:
    """Sample ``n`` rounds; shard k draws from SeedSequence(seed, spawn_key=(k,))."""
    config = config or SimulationConfig(
        rounds=n,
        test_fraction=test_fraction,
        noise=noise,
        generation_setting=generation_setting,
        seed=seed,
    )
    n, test_fraction, noise, seed = config.rounds, config.test_fraction, config.noise, config.seed
    gx, gy = (int(v) for v in config.generation_setting)
    num_x, num_y = spec.witness.shape
    if n < 1:
        raise SettingRangeError(f"Round count must be positive, got {n}")
    if not 0.0 <= test_fraction <= 1.0:
        raise SettingRangeError(f"Test fraction must lie in [0, 1], got {test_fraction}")
    if not (0 <= gx < num_x and 0 <= gy < num_y):
        raise SettingRangeError(f"Generation setting ({gx}, {gy}) outside a {num_x}x{num_y} protocol")
    if config.shard_size < 1:
        raise SettingRangeError(f"Shard size must be positive, got {config.shard_size}")

    probs = behavior_from_strategy(depolarize(spec.strategy, noise)).probs
    sizes = [min(config.shard_size, n - start) for start in range(0, n, config.shard_size)]

    def _run(item: tuple[int, int]):
        shard, size = item
        return _simulate_shard(probs, shard, size, seed, test_fraction, (gx, gy))

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            shards = list(pool.map(_run, enumerate(sizes)))
    else:
        shards = [_run(item) for item in enumerate(sizes)]
    logger.debug("simulated %d rounds in %d shards", n, len(shards))

    rounds = pd.DataFrame(
        {
            "round": np.arange(n, dtype=np.int64),
            "x": np.concatenate([s[0] for s in shards]),
            "y": np.concatenate([s[1] for s in shards]),
            "b": np.concatenate([s[2] for s in shards]),
            "is_test": np.concatenate([s[3] for s in shards]),
        }
    )
    metadata = {
        "protocol": spec.name,
        "witness_name": spec.witness.name,
        "test_fraction": test_fraction,
        "noise": noise,
        "generation_setting": [gx, gy],
    }
    return RoundLog(rounds=rounds, seed=seed, metadata=metadata)


def certify(log: RoundLog, spec: ProtocolSpec, confidence_level: float = 0.99) -> CertificationResult:
    """Certified min-entropy per generation round from the test rounds of a log.

    Each cell mean carries a Hoeffding radius at the union-bound level
    (1 - confidence) / (2 X Y); the witness radius is their |w|-weighted sum.
    """
    if not 0.0 < confidence_level < 1.0:
        raise SettingRangeError(f"Confidence level must lie in (0, 1), got {confidence_level}")
    witness = spec.witness
    num_x, num_y = witness.shape
    stats = log.cell_statistics(num_x, num_y)

    w = witness.coeffs[stats["x"].to_numpy(), stats["y"].to_numpy()]
    counts = stats["n"].to_numpy()
    used = w != 0
    empty = used & (counts == 0)
    if np.any(empty):
        cells = ", ".join(f"({x},{y})" for x, y in zip(stats["x"][empty], stats["y"][empty]))
        raise InsufficientDataError(f"No test rounds in witness cells {cells}")

    estimates = stats["p0"].to_numpy()[used]
    estimate = float(np.sum(w[used] * estimates))
    log_term = math.log(2.0 * num_x * num_y / (1.0 - confidence_level))
    radius = float(np.sum(np.abs(w[used]) * np.sqrt(log_term / (2.0 * counts[used]))))

    lower_edge = estimate - radius
    if witness.same_coefficients(r43_witness()):
        edge = min(max(lower_edge, R43_CLASSICAL), R43_QUANTUM)
        certified = r43_entropy_curve(edge).min_entropy_bound
        if lower_edge <= R43_CLASSICAL:
            logger.warning(
                "witness lower edge %.6g does not exceed the classical bound %.6g; nothing certified",
                lower_edge,
                R43_CLASSICAL,
            )
    else:
        certified = 0.0
        logger.warning("no entropy curve for witness %s; certified rate set to 0", witness.name)

    fraction = log.test_fraction
    input_entropy = fraction * (math.log2(num_x) + math.log2(num_y)) + binary_entropy(fraction)
    generation = int((~log.rounds["is_test"]).sum())
    result = CertificationResult(
        witness_estimate=estimate,
        confidence_radius=radius,
        confidence_level=confidence_level,
        certified_entropy_per_round=certified,
        input_entropy_per_round=input_entropy,
        net_expansion_per_round=certified - input_entropy,
        rounds_used=len(log),
        test_rounds=len(log) - generation,
        generation_rounds=generation,
        witness_lower_edge=lower_edge,
        certified_bits=certified * generation,
        witness_name=witness.name,
    )
    logger.debug("certified %.6g bits/round from %d rounds", certified, len(log))
    return result


def i4_counterexample_entropy(restarts: int = 20, seed: int = 0) -> float:
    """Min-entropy of the see-saw optimum of I4; the fourth state ends up antiparallel to the first axis."""
    result = quantum_bound_seesaw(i4_witness(), restarts=restarts, seed=seed)
    return min_entropy(behavior_from_strategy(result.argmax_strategy))


def i4_truncated_entropy(restarts: int = 20, seed: int = 0) -> float:
    witness = i4_witness().without_row(3)
    config = SeesawConfig(restarts=restarts, seed=seed, trivial_measurements=False)
    result = quantum_bound_seesaw(witness, config=config)
    return min_entropy(behavior_from_strategy(result.argmax_strategy))


def three_preparation_check(restarts: int = 20, seed: int = 0) -> ThreePreparationCheck:
    construction = r33_construction()
    result = quantum_bound_seesaw(
        construction.witness,
        restarts=restarts,
        seed=seed,
        starts=[construction.strategy],
    )
    optimum = ProtocolSpec(result.argmax_strategy, construction.witness, name="r33-optimum")
    return ThreePreparationCheck(
        witness_value=result.value,
        task_average=guessing_average(optimum),
        min_entropy=min_entropy(behavior_from_strategy(result.argmax_strategy)),
        ceiling=max_certifiable_entropy(),
    )
