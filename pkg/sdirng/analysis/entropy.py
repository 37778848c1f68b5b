from __future__ import annotations

from dataclasses import dataclass
import logging
import math

import numpy as np
import pandas as pd
from scipy.optimize import minimize

from sdirng.core.config import LEMMA_MAX_SETTINGS, LemmaConfig
from sdirng.core.errors import InfeasibleValueError, SettingRangeError
from sdirng.data.bloch import BehaviorTable, Strategy, behavior_from_strategy
from sdirng.analysis.witness import (
    classical_bound,
    evaluate,
    quantum_bound_seesaw,
    r43_ideal_strategy,
    r43_witness,
    random_witness,
)

logger = logging.getLogger(__name__)

R43_CLASSICAL = 3.0
R43_QUANTUM = 2.0 * math.sqrt(3.0)
CURVE_TOL = 1e-9
FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True)
class LemmaParams:
    settings: int
    mu: int
    r: int

    def __post_init__(self) -> None:
        if self.settings < 2:
            raise SettingRangeError(f"Need at least 2 measurement settings, got {self.settings}")
        if self.r not in (0, 1, 2) or 3 * self.mu + self.r != self.settings:
            raise SettingRangeError(f"{self.settings} != 3*{self.mu} + {self.r}")

    @classmethod
    def from_settings(cls, settings: int) -> "LemmaParams":
        if settings < 2:
            raise SettingRangeError(f"Need at least 2 measurement settings, got {settings}")
        mu, r = divmod(settings, 3)
        return cls(settings=settings, mu=mu, r=r)


@dataclass(frozen=True)
class CurvePoint:
    witness_value: float
    p_lb_bound: float
    min_entropy_bound: float


@dataclass
class ExtremalPoint:
    strategy: Strategy
    witness_value: float
    p_lb: float
    feasible_restarts: int


@dataclass
class CeilingScan:
    samples: int
    violations: int
    max_min_entropy: float
    ceiling: float

    @property
    def within_ceiling(self) -> bool:
        return self.max_min_entropy <= self.ceiling + FEASIBILITY_TOL


def _bits(probability: float) -> float:
    return 0.0 if probability >= 1.0 else -math.log2(probability)


def min_entropy(behavior: BehaviorTable) -> float:
    probs = behavior.probs
    return _bits(float(np.maximum(probs, 1.0 - probs).max()))


def p_lb(strategy: Strategy | BehaviorTable) -> float:
    """Largest per-preparation average of the more likely outcome."""
    behavior = strategy if isinstance(strategy, BehaviorTable) else behavior_from_strategy(strategy)
    probs = behavior.probs
    return float(np.maximum(probs, 1.0 - probs).mean(axis=1).max())


def lemma1_min_cos_sum(settings: int) -> float:
    if settings < 1:
        raise SettingRangeError(f"Need at least one vector, got {settings}")
    mu, r = divmod(settings, 3)
    return 1.5 * mu * (mu - 1) + r * mu


def lemma1_oracle(
    settings: int,
    trials: int | None = None,
    seed: int | None = None,
    *,
    iterations: int | None = None,
    config: LemmaConfig | None = None,
) -> float:
    """Numerical minimum of the pairwise cosine sum over unit vectors in one octant.

    Projected gradient descent, all trials at once: the gradient of
    sum_{i<j} t_i.t_j with respect to t_i is S - t_i where S is the sum of all
    vectors. After each step negative components are clamped and the vector is
    renormalized.
    """
    if not 2 <= settings <= LEMMA_MAX_SETTINGS:
        raise SettingRangeError(f"Cosine-sum oracle supports 2..{LEMMA_MAX_SETTINGS} vectors, got {settings}")
    config = config or LemmaConfig()
    trials = config.trials if trials is None else trials
    seed = config.seed if seed is None else seed
    iterations = config.iterations if iterations is None else iterations
    if trials < 1 or iterations < 1:
        raise SettingRangeError(f"Need at least one trial and one iteration, got {trials} and {iterations}")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    vectors = np.abs(rng.standard_normal((trials, settings, 3)))
    vectors /= np.linalg.norm(vectors, axis=-1, keepdims=True)
    step = 0.1 / settings

    for _ in range(iterations):
        total = vectors.sum(axis=1, keepdims=True)
        vectors = np.clip(vectors - step * (total - vectors), 0.0, None)
        norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
        dead = norms[..., 0] == 0.0
        if np.any(dead):
            vectors[dead] = np.abs(rng.standard_normal((int(dead.sum()), 3)))
            norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
        vectors /= norms

    total = vectors.sum(axis=1)
    values = 0.5 * (np.einsum("ij,ij->i", total, total) - settings)
    best = float(values.min())
    logger.debug("cosine-sum oracle Y=%d: %.12g over %d trials", settings, best, trials)
    return best


def p_lb_floor(settings: int) -> float:
    params = LemmaParams.from_settings(settings)
    mu, r = params.mu, params.r
    return 0.5 * (1.0 + math.sqrt(3 * mu * mu + r * (2 * mu + 1)) / (3 * mu + r))


def max_certifiable_entropy() -> float:
    return 1.0 - math.log2(1.0 + 1.0 / math.sqrt(3.0))


def r43_entropy_curve(witness_value: float) -> CurvePoint:
    value = float(witness_value)
    if not math.isfinite(value) or abs(value) > R43_QUANTUM + CURVE_TOL:
        raise InfeasibleValueError(f"R43 value {value!r} lies outside [-2*sqrt(3), 2*sqrt(3)]")
    value = min(max(value, -R43_QUANTUM), R43_QUANTUM)
    if value <= R43_CLASSICAL:
        bound = 1.0
    else:
        # 12 - R^2 factored so the quantum endpoint gives an exact zero.
        gap = (R43_QUANTUM - value) * (R43_QUANTUM + value)
        bound = min(1.0, (value + 6.0 + math.sqrt(3.0 * gap)) / 12.0)
    return CurvePoint(witness_value=value, p_lb_bound=bound, min_entropy_bound=_bits(bound))


def r43_curve_table(points: int = 20) -> pd.DataFrame:
    if points < 2:
        raise SettingRangeError(f"Curve table needs at least 2 points, got {points}")
    rows = [r43_entropy_curve(v) for v in np.linspace(R43_CLASSICAL, R43_QUANTUM, points)]
    return pd.DataFrame(
        {
            "witness_value": [p.witness_value for p in rows],
            "p_lb_bound": [p.p_lb_bound for p in rows],
            "min_entropy_bits": [p.min_entropy_bound for p in rows],
        }
    )


def _unpack(params: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vectors = params.reshape(7, 3)
    vectors = vectors / np.linalg.norm(vectors, axis=1, keepdims=True)
    return vectors[:4], vectors[4:]


def max_p_lb_at_witness(witness_value: float, restarts: int = 6, seed: int = 0) -> ExtremalPoint:
    """Most predictable R43 strategy that still reaches ``witness_value``.

    SLSQP maximizes the first preparation's alignment with the summed axes
    subject to the witness constraint. The ideal tetrahedron is always the
    first start, so a feasible point exists for every attainable value.
    """
    target = r43_entropy_curve(witness_value).witness_value
    if restarts < 1:
        raise SettingRangeError(f"Need at least one restart, got {restarts}")
    witness = r43_witness()
    w = witness.coeffs

    def witness_of(params: np.ndarray) -> float:
        states, axes = _unpack(params)
        return float(0.5 * np.sum(w) + 0.5 * np.sum(w * (states @ axes.T)))

    def objective(params: np.ndarray) -> float:
        states, axes = _unpack(params)
        return -float(states[0] @ axes.sum(axis=0))

    ideal = r43_ideal_strategy()
    starts = [np.concatenate([ideal.preparation_array(), ideal.axis_array()]).ravel()]
    for restart in range(1, restarts):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(restart,)))
        starts.append(rng.standard_normal(21))

    best: ExtremalPoint | None = None
    feasible = 0
    for i, start in enumerate(starts):
        result = minimize(
            objective,
            start,
            method="SLSQP",
            constraints=[{"type": "ineq", "fun": lambda p: witness_of(p) - target}],
            options={"maxiter": 500, "ftol": 1e-12},
        )
        states, axes = _unpack(result.x)
        strategy = Strategy.from_arrays(states, axes)
        value = evaluate(witness, behavior_from_strategy(strategy))
        logger.debug("constrained search start %d: witness %.12g, success=%s", i, value, result.success)
        if value < target - FEASIBILITY_TOL:
            continue
        feasible += 1
        predictability = p_lb(strategy)
        if best is None or predictability > best.p_lb:
            best = ExtremalPoint(strategy, value, predictability, 0)

    if best is None:
        raise InfeasibleValueError(f"No feasible R43 strategy found at witness value {target}")
    best.feasible_restarts = feasible
    return best


def ceiling_scan(
    samples: int,
    max_settings: int = 6,
    seed: int = 0,
    restarts: int = 5,
) -> CeilingScan:
    """Largest min-entropy among see-saw optima of random witnesses that beat the classical bound.

    Only witness-optimal strategies are sampled. A generic pure strategy can
    beat a classical bound while its raw behavior carries more min-entropy
    than the ceiling; the ceiling bounds what a witness value certifies.
    """
    if samples < 1 or max_settings < 2:
        raise SettingRangeError("Ceiling scan needs samples >= 1 and max_settings >= 2")
    ceiling = max_certifiable_entropy()
    violations = 0
    worst = 0.0
    for i in range(samples):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))
        num_x, num_y = (int(v) for v in rng.integers(2, max_settings + 1, size=2))
        witness = random_witness(rng, num_x, num_y)
        classical = classical_bound(witness).value
        quantum = quantum_bound_seesaw(witness, restarts=restarts, seed=int(rng.integers(2**32)))
        if quantum.value <= classical + CURVE_TOL:
            continue
        violations += 1
        entropy = min_entropy(behavior_from_strategy(quantum.argmax_strategy))
        worst = max(worst, entropy)
        if entropy > ceiling + FEASIBILITY_TOL:
            logger.warning("witness sample %d exceeds the entropy ceiling: %.12g bits", i, entropy)
    logger.debug("ceiling scan: %d of %d witnesses beat the classical bound", violations, samples)
    return CeilingScan(samples=samples, violations=violations, max_min_entropy=worst, ceiling=ceiling)
