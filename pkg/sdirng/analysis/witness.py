from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import product
from pathlib import Path
from typing import Any, Sequence
import logging
import math

import numpy as np
import yaml

from sdirng.core.config import (
    CLASSICAL_ENUM_LIMIT,
    GRID_MAX_RESOLUTION,
    GRID_MAX_SETTINGS,
    SeesawConfig,
)
from sdirng.core.errors import CapacityError, SettingRangeError, ShapeError
from sdirng.data.bloch import (
    BehaviorTable,
    Strategy,
    behavior_arrays,
    random_unit_vectors,
)

logger = logging.getLogger(__name__)

WITNESS_DIR = Path(__file__).resolve().parents[1] / "resources" / "witnesses"
BUILTIN_WITNESSES = ("r43", "r33", "i4")

_ZERO_RESULTANT = 1e-14
_ENUM_BLOCK = 1 << 16


@dataclass(frozen=True, eq=False)
class WitnessSpec:
    coeffs: np.ndarray
    name: str = "custom"
    labels: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        coeffs = np.array(self.coeffs, dtype=float)
        if coeffs.ndim != 2 or coeffs.shape[0] < 2 or coeffs.shape[1] < 2:
            raise ShapeError(f"Witness needs an X x Y coefficient matrix with X, Y >= 2, got {coeffs.shape}")
        if not np.all(np.isfinite(coeffs)):
            raise ShapeError("Witness coefficients must be finite")
        if not np.any(coeffs != 0):
            raise ShapeError("Witness needs at least one nonzero coefficient")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if self.labels is not None:
            labels = tuple(str(label) for label in self.labels)
            if len(labels) != coeffs.shape[0]:
                raise ShapeError("Witness labels must name every preparation")
            object.__setattr__(self, "labels", labels)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape  # type: ignore[return-value]

    @property
    def num_preparations(self) -> int:
        return self.coeffs.shape[0]

    @property
    def num_measurements(self) -> int:
        return self.coeffs.shape[1]

    def same_coefficients(self, other: "WitnessSpec", atol: float = 1e-12) -> bool:
        return self.shape == other.shape and bool(np.allclose(self.coeffs, other.coeffs, rtol=0.0, atol=atol))

    def without_row(self, x: int) -> "WitnessSpec":
        labels = None if self.labels is None else tuple(l for i, l in enumerate(self.labels) if i != x)
        return WitnessSpec(np.delete(self.coeffs, x, axis=0), name=f"{self.name}-without-row-{x + 1}", labels=labels)

    def negate_row(self, x: int) -> "WitnessSpec":
        coeffs = np.array(self.coeffs)
        coeffs[x] *= -1.0
        return WitnessSpec(coeffs, name=f"{self.name}-negated-row-{x + 1}", labels=self.labels)


@dataclass(frozen=True)
class DeterministicStrategy:
    """One-bit classical strategy: encoding[x] is the message, response[y][m] the outcome."""

    encoding: tuple[int, ...]
    response: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        if any(m not in (0, 1) for m in self.encoding):
            raise SettingRangeError("Encoded messages must be bits")
        if any(len(row) != 2 or any(b not in (0, 1) for b in row) for row in self.response):
            raise SettingRangeError("Responses must map both messages to a bit")

    def behavior(self) -> BehaviorTable:
        probs = np.array(
            [[1.0 if self.response[y][m] == 0 else 0.0 for y in range(len(self.response))] for m in self.encoding]
        )
        return BehaviorTable(probs)

    def to_strategy(self) -> Strategy:
        """Embed in a qubit strategy with the same behavior (messages on +-z)."""
        preparations = np.array([[0.0, 0.0, 1.0 if m == 0 else -1.0] for m in self.encoding])
        axes = np.zeros((len(self.response), 3))
        fixed: list[int | None] = []
        for y, (b0, b1) in enumerate(self.response):
            if b0 == b1:
                axes[y] = (0.0, 0.0, 1.0)
                fixed.append(b0)
            else:
                axes[y] = (0.0, 0.0, 1.0 if b0 == 0 else -1.0)
                fixed.append(None)
        return Strategy.from_arrays(preparations, axes, fixed)


@dataclass
class BoundResult:
    value: float
    argmax_strategy: Strategy | DeterministicStrategy
    iterations: int
    converged: bool
    restart_values: list[float] = field(default_factory=list)


def witness_from_dict(data: dict[str, Any]) -> WitnessSpec:
    if not isinstance(data, dict) or "coeffs" not in data:
        raise ShapeError("Witness document is missing 'coeffs'")
    try:
        coeffs = np.asarray(data["coeffs"], dtype=float)
    except (TypeError, ValueError) as exc:
        raise ShapeError(f"Witness coefficients must form a numeric matrix: {exc}") from exc
    labels = data.get("labels")
    return WitnessSpec(
        coeffs,
        name=str(data.get("name", "custom")),
        labels=tuple(labels) if labels else None,
    )


def witness_to_dict(witness: WitnessSpec) -> dict[str, Any]:
    payload: dict[str, Any] = {"name": witness.name, "coeffs": witness.coeffs.tolist()}
    if witness.labels is not None:
        payload["labels"] = list(witness.labels)
    return payload


def load_builtin(name: str) -> WitnessSpec:
    key = name.lower()
    if key not in BUILTIN_WITNESSES:
        raise SettingRangeError(f"Unknown built-in witness {name!r}; choose from {', '.join(BUILTIN_WITNESSES)}")
    data = yaml.safe_load((WITNESS_DIR / f"{key}.yaml").read_text())
    return witness_from_dict(data)


def r43_witness() -> WitnessSpec:
    return load_builtin("r43")


def r33_witness() -> WitnessSpec:
    return load_builtin("r33")


def i4_witness() -> WitnessSpec:
    return load_builtin("i4")


def r43_ideal_strategy() -> Strategy:
    """Tetrahedron preparations read out along the three Pauli axes."""
    signs = r43_witness().coeffs
    return Strategy.from_arrays(signs / math.sqrt(3.0), np.eye(3))


def random_witness(rng: np.random.Generator, num_preparations: int, num_measurements: int) -> WitnessSpec:
    coeffs = rng.uniform(-1.0, 1.0, size=(num_preparations, num_measurements))
    return WitnessSpec(coeffs, name=f"random-{num_preparations}x{num_measurements}")


def combine(alpha: float, first: WitnessSpec, beta: float, second: WitnessSpec) -> WitnessSpec:
    if first.shape != second.shape:
        raise ShapeError(f"Cannot combine witnesses of shapes {first.shape} and {second.shape}")
    return WitnessSpec(alpha * first.coeffs + beta * second.coeffs, name=f"{first.name}+{second.name}")


def evaluate(witness: WitnessSpec, behavior: BehaviorTable) -> float:
    if witness.shape != behavior.shape:
        raise ShapeError(f"Witness shape {witness.shape} does not match behavior shape {behavior.shape}")
    return float(np.sum(witness.coeffs * behavior.probs))


def classical_bound(witness: WitnessSpec) -> BoundResult:
    """Exact one-bit classical maximum.

    For a fixed encoding the best response to (y, m) outputs b=0 exactly when the
    coefficients of the preparations sending m sum to a positive number, so the
    search over responses collapses to a sum of positive parts. Encodings are
    enumerated exhaustively.
    """
    num_x, num_y = witness.shape
    if num_x > CLASSICAL_ENUM_LIMIT or num_y > CLASSICAL_ENUM_LIMIT:
        raise CapacityError(
            f"Classical enumeration is limited to {CLASSICAL_ENUM_LIMIT} settings per side, got {witness.shape}"
        )
    w = witness.coeffs
    col_sums = w.sum(axis=0)
    shifts = np.arange(num_x)
    total = 1 << num_x

    best_value = -math.inf
    best_index = 0
    for start in range(0, total, _ENUM_BLOCK):
        idx = np.arange(start, min(start + _ENUM_BLOCK, total), dtype=np.int64)
        bits = ((idx[:, None] >> shifts) & 1).astype(float)
        sums_one = bits @ w
        sums_zero = col_sums - sums_one
        values = np.maximum(sums_zero, 0.0).sum(axis=1) + np.maximum(sums_one, 0.0).sum(axis=1)
        pos = int(np.argmax(values))
        if values[pos] > best_value:
            best_value = float(values[pos])
            best_index = int(idx[pos])

    encoding = tuple(int((best_index >> x) & 1) for x in range(num_x))
    enc = np.array(encoding)
    response = []
    for y in range(num_y):
        group_zero = float(w[enc == 0, y].sum())
        group_one = float(w[enc == 1, y].sum())
        response.append((0 if group_zero > 0 else 1, 0 if group_one > 0 else 1))
    strategy = DeterministicStrategy(encoding=encoding, response=tuple(response))
    value = evaluate(witness, strategy.behavior())
    logger.debug("classical bound of %s: %.17g (encoding %s)", witness.name, value, encoding)
    return BoundResult(value=value, argmax_strategy=strategy, iterations=total, converged=True)


@dataclass
class _SeesawRun:
    value: float
    preparations: np.ndarray
    axes: np.ndarray
    fixed: list[int | None]
    iterations: int
    converged: bool


def _witness_value(w: np.ndarray, preparations: np.ndarray, axes: np.ndarray, fixed: Sequence[int | None]) -> float:
    return float(np.sum(w * behavior_arrays(preparations, axes, fixed)))


def _seesaw_run(
    w: np.ndarray,
    preparations: np.ndarray,
    axes: np.ndarray,
    fixed: list[int | None],
    config: SeesawConfig,
) -> _SeesawRun:
    preparations = preparations.copy()
    axes = axes.copy()
    fixed = list(fixed)
    col_sums = w.sum(axis=0)
    value = _witness_value(w, preparations, axes, fixed)

    iterations = 0
    converged = False
    while iterations < config.max_iterations:
        iterations += 1

        active = np.array([f is None for f in fixed])
        resultants = w[:, active] @ axes[active]
        norms = np.linalg.norm(resultants, axis=1)
        moving = norms > _ZERO_RESULTANT
        preparations[moving] = resultants[moving] / norms[moving, None]

        resultants = w.T @ preparations
        norms = np.linalg.norm(resultants, axis=1)
        for y in range(w.shape[1]):
            if config.trivial_measurements and abs(col_sums[y]) > norms[y]:
                fixed[y] = 0 if col_sums[y] > 0 else 1
                continue
            fixed[y] = None
            if norms[y] > _ZERO_RESULTANT:
                axes[y] = resultants[y] / norms[y]

        new_value = _witness_value(w, preparations, axes, fixed)
        improvement = new_value - value
        value = max(value, new_value)
        if improvement < config.tolerance:
            converged = True
            break

    return _SeesawRun(value, preparations, axes, fixed, iterations, converged)


def _restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))


def quantum_bound_seesaw(
    witness: WitnessSpec,
    restarts: int = 20,
    seed: int = 0,
    *,
    config: SeesawConfig | None = None,
    starts: Sequence[Strategy] = (),
) -> BoundResult:
    """Lower bound on the qubit maximum by alternating closed-form updates.

    States follow the normalized resultant of their row, axes the normalized
    resultant of their column (or the constant trivial measurement when that
    scores higher). Each half-step is an exact block maximization, so the value
    never decreases.
    """
    config = config or SeesawConfig(restarts=restarts, seed=seed)
    restarts, seed = config.restarts, config.seed
    if restarts < 1:
        raise SettingRangeError(f"See-saw needs at least one restart, got {restarts}")
    w = witness.coeffs
    num_x, num_y = witness.shape

    initial: list[tuple[np.ndarray, np.ndarray, list[int | None]]] = []
    for restart in range(restarts):
        rng = _restart_rng(seed, restart)
        initial.append((random_unit_vectors(rng, num_x), random_unit_vectors(rng, num_y), [None] * num_y))
    for strategy in starts:
        if (strategy.num_preparations, strategy.num_measurements) != witness.shape:
            raise ShapeError("Start strategy does not match the witness shape")
        fixed = list(strategy.fixed_outcomes) if strategy.fixed_outcomes else [None] * num_y
        initial.append((strategy.preparation_array(), strategy.axis_array(), fixed))
    if config.classical_start and config.trivial_measurements and max(num_x, num_y) <= CLASSICAL_ENUM_LIMIT:
        embedded = classical_bound(witness).argmax_strategy.to_strategy()
        initial.append((embedded.preparation_array(), embedded.axis_array(), list(embedded.fixed_outcomes or [None] * num_y)))

    def _run(start: tuple[np.ndarray, np.ndarray, list[int | None]]) -> _SeesawRun:
        return _seesaw_run(w, start[0], start[1], start[2], config)

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            runs = list(pool.map(_run, initial))
    else:
        runs = [_run(start) for start in initial]

    best = max(runs, key=lambda run: run.value)
    for i, run in enumerate(runs):
        logger.debug("see-saw %s start %d: %.17g after %d iterations", witness.name, i, run.value, run.iterations)
    if not best.converged:
        logger.warning("see-saw on %s stopped at the iteration cap (%d)", witness.name, config.max_iterations)

    strategy = Strategy.from_arrays(best.preparations, best.axes, best.fixed)
    return BoundResult(
        value=_witness_value(w, best.preparations, best.axes, best.fixed),
        argmax_strategy=strategy,
        iterations=best.iterations,
        converged=best.converged,
        restart_values=[run.value for run in runs],
    )


def fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count, dtype=float) + 0.5
    z = 1.0 - 2.0 * i / count
    radius = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])


def quantum_bound_grid(witness: WitnessSpec, resolution: int) -> float:
    """Brute-force qubit value over Fibonacci-grid axes with optimal states."""
    num_x, num_y = witness.shape
    if num_y > GRID_MAX_SETTINGS:
        raise CapacityError(f"Grid search supports at most {GRID_MAX_SETTINGS} measurements, got {num_y}")
    if not 1 <= resolution <= GRID_MAX_RESOLUTION:
        raise CapacityError(f"Grid resolution must lie in [1, {GRID_MAX_RESOLUTION}], got {resolution}")

    w = witness.coeffs
    points = fibonacci_sphere(resolution)
    offset = 0.5 * float(w.sum())
    # Row resultants from the last two axes, shape (res, res, X, 3).
    tail = (
        w[None, None, :, num_y - 2, None] * points[:, None, None, :]
        + w[None, None, :, num_y - 1, None] * points[None, :, None, :]
    )

    best = -math.inf
    for head in product(range(resolution), repeat=num_y - 2):
        head_resultant = np.zeros((num_x, 3))
        for y, index in enumerate(head):
            head_resultant += w[:, y, None] * points[index]
        norms = np.linalg.norm(tail + head_resultant, axis=-1).sum(axis=-1)
        best = max(best, float(norms.max()))
    return offset + 0.5 * best
