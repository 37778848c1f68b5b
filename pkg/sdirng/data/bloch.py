from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence
import numpy as np

from sdirng.core.config import NORMALIZE_TOL, STATE_TOL
from sdirng.core.errors import (
    InvalidMeasurementError,
    InvalidStateError,
    SettingRangeError,
    ShapeError,
)


@dataclass(frozen=True)
class BlochVector:
    x: float
    y: float
    z: float

    @classmethod
    def from_array(cls, values: Iterable[float]) -> "BlochVector":
        arr = np.asarray(list(values), dtype=float)
        if arr.shape != (3,):
            raise ShapeError(f"Bloch vector needs 3 components, got shape {arr.shape}")
        return cls(float(arr[0]), float(arr[1]), float(arr[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=float)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    def dot(self, other: "BlochVector") -> float:
        return float(self.as_array() @ other.as_array())


def _check_state(norm: float) -> None:
    if norm > 1.0 + STATE_TOL:
        raise InvalidStateError(f"State Bloch vector has norm {norm:.15g} > 1")


def _check_axis(norm: float) -> None:
    if abs(norm - 1.0) > STATE_TOL:
        raise InvalidMeasurementError(f"Measurement axis has norm {norm:.15g}, expected 1")


def normalize(vector: BlochVector | Sequence[float]) -> BlochVector:
    arr = vector.as_array() if isinstance(vector, BlochVector) else np.asarray(vector, dtype=float)
    norm = float(np.linalg.norm(arr))
    if abs(norm - 1.0) > NORMALIZE_TOL:
        raise InvalidMeasurementError(
            f"Cannot normalize vector of norm {norm:.15g}; only near-unit vectors are rescaled"
        )
    return BlochVector.from_array(arr / norm)


def random_unit_vectors(rng: np.random.Generator, count: int) -> np.ndarray:
    vectors = rng.standard_normal((count, 3))
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return vectors / norms


@dataclass(frozen=True)
class Strategy:
    """A qubit strategy: preparation Bloch vectors and measurement axes.

    ``fixed_outcomes[y]`` set to 0 or 1 turns measurement ``y`` into the trivial
    projective measurement that always returns that outcome; the stored axis is
    then ignored.
    """

    preparations: tuple[BlochVector, ...]
    measurement_axes: tuple[BlochVector, ...]
    fixed_outcomes: tuple[int | None, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "preparations", tuple(self.preparations))
        object.__setattr__(self, "measurement_axes", tuple(self.measurement_axes))
        if len(self.preparations) < 2 or len(self.measurement_axes) < 2:
            raise ShapeError(
                "A strategy needs at least 2 preparations and 2 measurements, got "
                f"{len(self.preparations)}x{len(self.measurement_axes)}"
            )
        for state in self.preparations:
            _check_state(state.norm)
        for axis in self.measurement_axes:
            _check_axis(axis.norm)
        if self.fixed_outcomes is not None:
            fixed = tuple(None if v is None else int(v) for v in self.fixed_outcomes)
            if len(fixed) != len(self.measurement_axes):
                raise ShapeError("fixed_outcomes must have one entry per measurement")
            if any(v not in (None, 0, 1) for v in fixed):
                raise SettingRangeError("fixed outcomes must be None, 0 or 1")
            if all(v is None for v in fixed):
                fixed = None
            object.__setattr__(self, "fixed_outcomes", fixed)

    @classmethod
    def from_arrays(
        cls,
        preparations: np.ndarray,
        axes: np.ndarray,
        fixed_outcomes: Sequence[int | None] | None = None,
    ) -> "Strategy":
        preparations = np.asarray(preparations, dtype=float)
        axes = np.asarray(axes, dtype=float)
        if preparations.ndim != 2 or preparations.shape[1] != 3:
            raise ShapeError(f"Preparations must be an (X, 3) array, got {preparations.shape}")
        if axes.ndim != 2 or axes.shape[1] != 3:
            raise ShapeError(f"Axes must be a (Y, 3) array, got {axes.shape}")
        return cls(
            preparations=tuple(BlochVector.from_array(row) for row in preparations),
            measurement_axes=tuple(BlochVector.from_array(row) for row in axes),
            fixed_outcomes=None if fixed_outcomes is None else tuple(fixed_outcomes),
        )

    @property
    def num_preparations(self) -> int:
        return len(self.preparations)

    @property
    def num_measurements(self) -> int:
        return len(self.measurement_axes)

    def preparation_array(self) -> np.ndarray:
        return np.array([p.as_array() for p in self.preparations], dtype=float)

    def axis_array(self) -> np.ndarray:
        return np.array([t.as_array() for t in self.measurement_axes], dtype=float)

    def fixed_outcome(self, y: int) -> int | None:
        if self.fixed_outcomes is None:
            return None
        return self.fixed_outcomes[y]


@dataclass(frozen=True, eq=False)
class BehaviorTable:
    """p(b=0|x,y) for every setting pair; p(b=1|x,y) is the complement."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 2 or min(probs.shape) < 1:
            raise ShapeError(f"Behavior table must be a non-empty matrix, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)) or probs.min() < 0.0 or probs.max() > 1.0:
            raise InvalidStateError("Behavior entries must lie in [0, 1]")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def uniform(cls, num_preparations: int, num_measurements: int) -> "BehaviorTable":
        return cls(np.full((num_preparations, num_measurements), 0.5))

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape  # type: ignore[return-value]

    def probability(self, outcome: int, x: int, y: int) -> float:
        p0 = float(self.probs[x, y])
        if outcome == 0:
            return p0
        if outcome == 1:
            return 1.0 - p0
        raise SettingRangeError(f"Outcome must be 0 or 1, got {outcome}")


def outcome_probability(state: BlochVector, axis: BlochVector, outcome: int) -> float:
    _check_axis(axis.norm)
    _check_state(state.norm)
    if outcome not in (0, 1):
        raise SettingRangeError(f"Outcome must be 0 or 1, got {outcome}")
    p0 = min(max(0.5 * (1.0 + state.dot(axis)), 0.0), 1.0)
    return p0 if outcome == 0 else 1.0 - p0


def behavior_arrays(
    preparations: np.ndarray,
    axes: np.ndarray,
    fixed_outcomes: Sequence[int | None] | None = None,
) -> np.ndarray:
    """Array form of :func:`behavior_from_strategy` without validation."""
    probs = np.clip(0.5 * (1.0 + preparations @ axes.T), 0.0, 1.0)
    if fixed_outcomes is not None:
        for y, outcome in enumerate(fixed_outcomes):
            if outcome is not None:
                probs[:, y] = 1.0 if outcome == 0 else 0.0
    return probs


def behavior_from_strategy(strategy: Strategy) -> BehaviorTable:
    probs = behavior_arrays(
        strategy.preparation_array(),
        strategy.axis_array(),
        strategy.fixed_outcomes,
    )
    return BehaviorTable(probs)


def depolarize(strategy: Strategy, noise: float) -> Strategy:
    if not 0.0 <= noise <= 1.0:
        raise SettingRangeError(f"Noise must lie in [0, 1], got {noise}")
    return Strategy.from_arrays(
        (1.0 - noise) * strategy.preparation_array(),
        strategy.axis_array(),
        strategy.fixed_outcomes,
    )


def strategy_to_dict(strategy: Strategy) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "preparations": strategy.preparation_array().tolist(),
        "measurements": strategy.axis_array().tolist(),
    }
    if strategy.fixed_outcomes is not None:
        payload["fixed_outcomes"] = list(strategy.fixed_outcomes)
    return payload


def strategy_from_dict(data: dict[str, Any]) -> Strategy:
    if not isinstance(data, dict):
        raise ShapeError("Strategy document must be a mapping")
    try:
        preparations = np.asarray(data["preparations"], dtype=float)
        axes = np.asarray(data["measurements"], dtype=float)
    except KeyError as exc:
        raise ShapeError(f"Strategy document is missing {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ShapeError(f"Strategy vectors must be numeric triples: {exc}") from exc
    return Strategy.from_arrays(preparations, axes, data.get("fixed_outcomes"))
