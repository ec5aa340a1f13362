from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from dga.generator import (
    H_HIGH, H_LOW, H_MEDIUM, GenConfig, GenerationError, generate_taskset, largest_remainder, random_fixed_sum,
    uunifast_split,
)
from dga.taskmodel import PERIODIC, dumps, total_utilization, utilization, validate


def test_random_fixed_sum_forced_corner():
    assert random_fixed_sum(2, 1.0, 0.5, np.random.default_rng(0)) == [Fraction(1, 2)] * 2


def test_random_fixed_sum_exact_and_capped():
    rng = np.random.default_rng(1)
    for _ in range(200):
        vals = random_fixed_sum(40, 4, Fraction(1, 2), rng)
        assert sum(vals) == 4
        assert all(0 < v <= Fraction(1, 2) for v in vals)


def test_random_fixed_sum_infeasible():
    with pytest.raises(GenerationError):
        random_fixed_sum(3, 2, 0.5, np.random.default_rng(0))


def test_random_fixed_sum_coordinate_means():
    rng = np.random.default_rng(2)
    draws = np.array([[float(x) for x in random_fixed_sum(4, 1, 1, rng)] for _ in range(10_000)])
    assert np.all(np.abs(draws.mean(axis=0) - 0.25) <= 0.01)


def test_random_fixed_sum_two_coordinates_uniform():
    rng = np.random.default_rng(3)
    first = [float(random_fixed_sum(2, 1, 1, rng)[0]) for _ in range(10_000)]
    assert stats.kstest(first, "uniform").statistic <= 0.02


def test_uunifast_examples():
    rng = np.random.default_rng(4)
    assert uunifast_split(5, 1, rng) == [5]
    parts = uunifast_split(6, 3, rng)
    assert sum(parts) == 6 and all(p > 0 for p in parts)


def test_uunifast_two_parts_uniform():
    rng = np.random.default_rng(5)
    first = [float(uunifast_split(1, 2, rng)[0]) for _ in range(10_000)]
    assert stats.kstest(first, "uniform").statistic <= 0.02
    assert abs(np.mean(first) - 0.5) <= 0.01


def test_largest_remainder_exact_total():
    assert largest_remainder([Fraction(1, 3)] * 3, 10) == [4, 3, 3]
    assert sum(largest_remainder([Fraction(2, 7), Fraction(5, 7)], 99)) == 99


def test_forced_two_accesses_pattern():
    ts = generate_taskset(GenConfig(forced_accesses=2, seed=9))
    for t in ts.tasks:
        assert [s.critical for s in t.segments] == [False, True, False, True, False]


@pytest.mark.parametrize("h_range", [H_LOW, H_MEDIUM, H_HIGH])
@pytest.mark.parametrize("level", [Fraction(1, 100), Fraction(1, 2), Fraction(1)])
def test_generated_sets_meet_statistics(h_range, level):
    for seed in range(5):
        cfg = GenConfig(utilization=level, h_range=h_range, seed=seed)
        ts = generate_taskset(cfg)
        assert validate(ts) == []
        assert len(ts.tasks) == 40
        assert total_utilization(ts) == level * 4
        for t in ts.tasks:
            assert utilization(t) <= Fraction(1, 2)
            cs = sum(s.wcet for s in t.segments if s.critical)
            ncs = len(t.critical_sections)
            assert 2 <= ncs <= 5
            lo, hi = h_range
            assert Fraction(lo) * t.wcet - ncs <= cs <= Fraction(hi) * t.wcet + ncs
            assert t.period == t.deadline == cfg.resolution


def test_full_utilization_is_exactly_processor_count():
    ts = generate_taskset(GenConfig(utilization=1, seed=1))
    assert total_utilization(ts) == 4


def test_seeded_determinism():
    cfg = GenConfig(seed=17, utilization=0.6)
    assert dumps(generate_taskset(cfg)) == dumps(generate_taskset(cfg))
    assert dumps(generate_taskset(cfg)) != dumps(generate_taskset(GenConfig(seed=18, utilization=0.6)))


def test_level_change_keeps_task_structure():
    a = generate_taskset(GenConfig(seed=5, utilization=0.3))
    b = generate_taskset(GenConfig(seed=5, utilization=0.9))
    assert total_utilization(b) == 3 * total_utilization(a)
    for ta, tb in zip(a.tasks, b.tasks):
        assert [s.resource for s in ta.segments] == [s.resource for s in tb.segments]
        assert ta.period == tb.period


def test_periodic_generation_draws_periods():
    ts = generate_taskset(GenConfig(release_model=PERIODIC, utilization=0.5, seed=3))
    assert {t.period // ts.resolution_denominator for t in ts.tasks} <= {1, 2, 5, 10}
    assert total_utilization(ts) == 2
    assert validate(ts) == []


def test_bad_configs_rejected():
    for cfg in (GenConfig(tasks_per_set=2), GenConfig(h_range=(0.5, 0.1)), GenConfig(accesses_range=(0, 2))):
        with pytest.raises(GenerationError):
            generate_taskset(cfg)
    with pytest.raises(GenerationError):
        generate_taskset(GenConfig(utilization=6))  # 24 > 40 * 0.5
