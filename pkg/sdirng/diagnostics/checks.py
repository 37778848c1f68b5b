from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable
import logging
import math

import numpy as np

from sdirng.core.config import LEMMA_MAX_SETTINGS, VerifyConfig
from sdirng.data.bloch import behavior_from_strategy
from sdirng.analysis.entropy import (
    R43_QUANTUM,
    ceiling_scan,
    lemma1_min_cos_sum,
    lemma1_oracle,
    max_certifiable_entropy,
    max_p_lb_at_witness,
    min_entropy,
    p_lb_floor,
    r43_entropy_curve,
)
from sdirng.analysis.protocol import (
    i4_counterexample_entropy,
    i4_truncated_entropy,
    r33_construction,
    three_preparation_check,
)
from sdirng.analysis.witness import (
    classical_bound,
    quantum_bound_grid,
    quantum_bound_seesaw,
    r43_witness,
    random_witness,
)

logger = logging.getLogger(__name__)

FLOOR_MIN = 0.5 * (1.0 + 1.0 / math.sqrt(3.0))


@dataclass
class CheckResult:
    name: str
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"check": self.name, "passed": self.passed, **self.details}


def check_cosine_sum(config: VerifyConfig) -> CheckResult:
    gaps = {}
    for settings in range(2, LEMMA_MAX_SETTINGS + 1):
        found = lemma1_oracle(settings, trials=config.lemma_trials, seed=config.seed)
        gaps[str(settings)] = abs(found - lemma1_min_cos_sum(settings))
    worst = max(gaps.values())
    return CheckResult("cosine_sum_minimum", worst <= 1e-4, {"max_gap": worst})


def check_floor_scan(config: VerifyConfig) -> CheckResult:
    failures = []
    for settings in range(2, config.floor_max_settings + 1):
        floor = p_lb_floor(settings)
        at_minimum = abs(floor - FLOOR_MIN) <= 1e-12
        if floor < FLOOR_MIN - 1e-12 or at_minimum != (settings % 3 == 0):
            failures.append(settings)
    return CheckResult(
        "p_lb_floor_scan",
        not failures,
        {"max_settings": config.floor_max_settings, "failures": failures},
    )


def check_curve_consistency(config: VerifyConfig) -> CheckResult:
    worst_excess = -math.inf
    worst_shortfall = -math.inf
    for target in np.linspace(3.1, R43_QUANTUM, config.curve_points):
        point = max_p_lb_at_witness(float(target), restarts=config.curve_restarts, seed=config.seed)
        ceiling = r43_entropy_curve(min(point.witness_value, R43_QUANTUM)).p_lb_bound
        worst_excess = max(worst_excess, point.p_lb - ceiling)
        worst_shortfall = max(worst_shortfall, r43_entropy_curve(float(target)).p_lb_bound - point.p_lb)
    passed = worst_excess <= 1e-6 and worst_shortfall <= 5e-3
    return CheckResult(
        "r43_curve_consistency",
        passed,
        {"max_excess_over_curve": worst_excess, "max_gap_below_curve": worst_shortfall},
    )


def check_bounds(config: VerifyConfig) -> CheckResult:
    witness = r43_witness()
    classical = classical_bound(witness).value
    seesaw = quantum_bound_seesaw(witness, restarts=20, seed=config.seed).value
    grid = quantum_bound_grid(witness, 100)

    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    ordered = 0
    for _ in range(config.random_witnesses):
        num_x, num_y = (int(v) for v in rng.integers(2, 5, size=2))
        sample = random_witness(rng, num_x, num_y)
        restart_seed = int(rng.integers(2**32))
        if classical_bound(sample).value <= quantum_bound_seesaw(sample, restarts=5, seed=restart_seed).value + 1e-9:
            ordered += 1

    passed = (
        classical == 3.0
        and abs(seesaw - R43_QUANTUM) <= 1e-9
        and grid <= R43_QUANTUM + 1e-9
        and grid <= seesaw + 1e-6
        and ordered == config.random_witnesses
    )
    return CheckResult(
        "witness_bounds",
        passed,
        {
            "r43_classical": classical,
            "r43_seesaw": seesaw,
            "r43_grid": grid,
            "random_ordered": ordered,
            "random_total": config.random_witnesses,
        },
    )


def check_i4(config: VerifyConfig) -> CheckResult:
    full = i4_counterexample_entropy(seed=config.seed)
    truncated = i4_truncated_entropy(seed=config.seed)
    return CheckResult(
        "i4_counterexample",
        full <= 1e-6 and truncated > 0.0,
        {"optimum_min_entropy": full, "truncated_min_entropy": truncated},
    )


def check_three_preparations(config: VerifyConfig) -> CheckResult:
    result = three_preparation_check(seed=config.seed)
    construction = r33_construction()
    construction_entropy = min_entropy(behavior_from_strategy(construction.strategy))
    passed = result.passed and construction_entropy <= max_certifiable_entropy() - 0.1
    return CheckResult(
        "three_preparation_settings",
        passed,
        {
            "task_average": result.task_average,
            "optimum_min_entropy": result.min_entropy,
            "construction_min_entropy": construction_entropy,
        },
    )


def check_ceiling(config: VerifyConfig) -> CheckResult:
    scan = ceiling_scan(
        config.scan_samples,
        max_settings=config.scan_max_settings,
        seed=config.seed,
        restarts=config.scan_restarts,
    )
    return CheckResult(
        "entropy_ceiling_scan",
        scan.within_ceiling,
        {"samples": scan.samples, "violations": scan.violations, "max_min_entropy": scan.max_min_entropy},
    )


CHECKS: tuple[Callable[[VerifyConfig], CheckResult], ...] = (
    check_cosine_sum,
    check_floor_scan,
    check_curve_consistency,
    check_bounds,
    check_i4,
    check_three_preparations,
    check_ceiling,
)


def run_checks(config: VerifyConfig) -> list[CheckResult]:
    results = []
    for check in CHECKS:
        result = check(config)
        logger.debug("%s: %s", result.name, "pass" if result.passed else "FAIL")
        results.append(result)
    return results
