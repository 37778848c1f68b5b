import math

import numpy as np
import pytest

from sdirng.core.config import LemmaConfig
from sdirng.core.errors import InfeasibleValueError, SettingRangeError
from sdirng.data.bloch import BehaviorTable, Strategy, behavior_from_strategy, random_unit_vectors
from sdirng.analysis.entropy import (
    LemmaParams,
    ceiling_scan,
    lemma1_min_cos_sum,
    lemma1_oracle,
    max_certifiable_entropy,
    max_p_lb_at_witness,
    min_entropy,
    p_lb,
    p_lb_floor,
    r43_curve_table,
    r43_entropy_curve,
)
from sdirng.analysis.witness import WitnessSpec, classical_bound, evaluate, quantum_bound_seesaw

CEILING = 0.3424938
FLOOR = 0.5 * (1 + 1 / math.sqrt(3))
TWO_ROOT_THREE = 2 * math.sqrt(3)


def test_min_entropy_examples(r43_protocol):
    assert min_entropy(BehaviorTable.uniform(2, 2)) == 1.0
    ideal = behavior_from_strategy(r43_protocol.strategy)
    assert abs(min_entropy(ideal) - max_certifiable_entropy()) <= 1e-9
    assert min_entropy(BehaviorTable(np.array([[0.5, 1.0], [0.5, 0.5]]))) == 0.0


def test_min_entropy_below_p_lb_bound(rng):
    for _ in range(50):
        preparations = random_unit_vectors(rng, 3) * rng.random((3, 1))
        strategy = Strategy.from_arrays(preparations, np.linalg.qr(rng.standard_normal((3, 3)))[0])
        assert min_entropy(behavior_from_strategy(strategy)) <= -math.log2(p_lb(strategy)) + 1e-12


def test_p_lb_examples(r43_protocol):
    assert abs(p_lb(r43_protocol.strategy) - FLOOR) <= 1e-12
    aligned = Strategy.from_arrays([[0, 0, 1], [0, 0, -1]], [[0, 0, 1], [0, 0, 1]])
    assert p_lb(aligned) == 1.0
    h = 1 / math.sqrt(2)
    bisector = Strategy.from_arrays([[h, h, 0], [-h, -h, 0]], [[1, 0, 0], [0, 1, 0]])
    assert abs(p_lb(bisector) - 0.5 * (1 + h)) <= 1e-12


def test_lemma_params():
    assert LemmaParams.from_settings(7) == LemmaParams(settings=7, mu=2, r=1)
    with pytest.raises(SettingRangeError):
        LemmaParams.from_settings(1)
    with pytest.raises(SettingRangeError):
        LemmaParams(settings=5, mu=2, r=1)


@pytest.mark.parametrize("settings,expected", [(3, 0.0), (4, 1.0), (6, 3.0), (5, 2.0), (2, 0.0)])
def test_cosine_sum_closed_form(settings, expected):
    assert lemma1_min_cos_sum(settings) == expected


@pytest.mark.parametrize("settings", range(2, 10))
def test_cosine_sum_oracle_matches_closed_form(settings):
    found = lemma1_oracle(settings, trials=200, seed=0)
    assert found >= lemma1_min_cos_sum(settings) - 1e-4
    assert abs(found - lemma1_min_cos_sum(settings)) <= 1e-4


def test_cosine_sum_oracle_range():
    with pytest.raises(SettingRangeError):
        lemma1_oracle(10, trials=5)
    with pytest.raises(SettingRangeError):
        lemma1_oracle(1, trials=5)
    with pytest.raises(SettingRangeError):
        lemma1_oracle(4, config=LemmaConfig(trials=0))


def test_cosine_sum_oracle_reads_config():
    config = LemmaConfig(trials=20, iterations=500, seed=3)
    assert lemma1_oracle(4, config=config) == lemma1_oracle(4, trials=20, seed=3, iterations=500)
    assert lemma1_oracle(4) == lemma1_oracle(4, config=LemmaConfig())


def test_p_lb_floor_examples():
    assert abs(p_lb_floor(3) - FLOOR) <= 1e-12
    assert abs(p_lb_floor(2) - 0.5 * (1 + 1 / math.sqrt(2))) <= 1e-12
    assert 0.0 <= p_lb_floor(300) - FLOOR < 1e-4


def test_p_lb_floor_scan():
    for settings in range(2, 301):
        floor = p_lb_floor(settings)
        assert floor >= FLOOR - 1e-12
        assert (abs(floor - FLOOR) <= 1e-12) == (settings % 3 == 0)


def test_max_certifiable_entropy():
    assert abs(max_certifiable_entropy() - CEILING) <= 1e-5
    assert abs(max_certifiable_entropy() - (-math.log2(p_lb_floor(3)))) <= 1e-12


def test_curve_examples():
    top = r43_entropy_curve(TWO_ROOT_THREE)
    assert abs(top.p_lb_bound - FLOOR) <= 1e-12
    assert abs(top.min_entropy_bound - max_certifiable_entropy()) <= 1e-9
    edge = r43_entropy_curve(3.0)
    assert edge.p_lb_bound == 1.0
    assert edge.min_entropy_bound == 0.0
    mid = r43_entropy_curve(3.3)
    assert abs(mid.p_lb_bound - 0.92707) <= 1e-5
    assert abs(mid.min_entropy_bound - 0.10925) <= 1e-4


def test_curve_below_classical_is_zero():
    for value in (-TWO_ROOT_THREE, -1.0, 0.0, 2.9):
        assert r43_entropy_curve(value).min_entropy_bound == 0.0


def test_curve_feasibility():
    with pytest.raises(InfeasibleValueError):
        r43_entropy_curve(TWO_ROOT_THREE + 1e-6)
    clamped = r43_entropy_curve(TWO_ROOT_THREE + 5e-10)
    assert clamped.witness_value == TWO_ROOT_THREE


def test_curve_is_monotone():
    entropies = [r43_entropy_curve(v).min_entropy_bound for v in np.linspace(3.0, TWO_ROOT_THREE, 1000)]
    assert all(b >= a for a, b in zip(entropies, entropies[1:]))


def test_curve_table_endpoints():
    table = r43_curve_table(2)
    assert list(table.columns) == ["witness_value", "p_lb_bound", "min_entropy_bits"]
    assert table["min_entropy_bits"].iloc[0] == 0.0
    assert abs(table["min_entropy_bits"].iloc[1] - CEILING) <= 1e-6
    with pytest.raises(SettingRangeError):
        r43_curve_table(1)


@pytest.mark.parametrize("target", [3.1, 3.3, 3.45])
def test_constrained_search_respects_and_attains_curve(target):
    point = max_p_lb_at_witness(target, restarts=6, seed=0)
    assert point.witness_value >= target - 1e-6
    ceiling = r43_entropy_curve(min(point.witness_value, TWO_ROOT_THREE)).p_lb_bound
    assert point.p_lb <= ceiling + 1e-6
    assert point.p_lb >= r43_entropy_curve(target).p_lb_bound - 5e-3


def test_ideal_strategy_sits_on_curve(r43_protocol):
    assert abs(p_lb(r43_protocol.strategy) - r43_entropy_curve(TWO_ROOT_THREE).p_lb_bound) <= 1e-12


def test_ceiling_scan_respects_ceiling():
    scan = ceiling_scan(300, max_settings=6, seed=0, restarts=5)
    assert scan.samples == 300
    assert scan.violations > 0
    assert scan.within_ceiling
    assert scan.max_min_entropy <= max_certifiable_entropy() + 1e-6


RAC_WITNESS = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])


def _scaled_rac_strategy(correlation: float) -> Strategy:
    side = math.sqrt(1.0 - 2.0 * correlation**2)
    preparations = np.array([[correlation * a, side, correlation * b] for a, b in RAC_WITNESS])
    axes = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    return Strategy.from_arrays(preparations, axes)


def test_ceiling_applies_to_witness_optima_not_raw_behaviors():
    witness = WitnessSpec(RAC_WITNESS, name="rac")
    assert classical_bound(witness).value == 2.0

    # Pure states with weak correlations: above the classical bound, yet more
    # raw min-entropy than any witness value can certify.
    weak = behavior_from_strategy(_scaled_rac_strategy(0.55))
    assert abs(evaluate(witness, weak) - 2.2) <= 1e-12
    assert min_entropy(weak) > max_certifiable_entropy() + 0.02

    optimum = quantum_bound_seesaw(witness, restarts=10, seed=0)
    assert abs(optimum.value - 2 * math.sqrt(2)) <= 1e-9
    optimal_entropy = min_entropy(behavior_from_strategy(optimum.argmax_strategy))
    assert abs(optimal_entropy + math.log2(0.5 * (1 + 1 / math.sqrt(2)))) <= 1e-4
    assert optimal_entropy <= max_certifiable_entropy()
