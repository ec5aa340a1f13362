from fractions import Fraction

import pytest

from dga.taskmodel import (
    CS, FRAME, NC, PERIODIC, HyperperiodOverflow, Segment, Task, TaskSet, TaskSetFormatError,
    classify_access_pattern, dumps, hyperperiod, loads, make_taskset, total_utilization, utilization, validate,
)


def periodic(*tasks, Z=2):
    return TaskSet(tuple(tasks), processors=2, resources=Z, release_model=PERIODIC)


def test_adjacent_noncritical_flagged_with_positions():
    ts = make_taskset([[NC(2), NC(3)]])
    msgs = [str(v) for v in validate(ts)]
    assert msgs == ["adjacent non-critical sections at task 0 positions 0,1"]


def test_minimal_alternation_is_valid():
    ts = make_taskset([[NC(1), CS(1, 0), NC(1)]])
    assert validate(ts) == []


def test_deadline_beyond_period_flagged():
    ts = periodic(Task((NC(1), CS(1, 0)), 5, 6))
    assert any(v.message == "deadline exceeds period" for v in validate(ts))


def test_critical_section_needs_positive_wcet_and_valid_resource():
    ts = make_taskset([[CS(0, 0), NC(1), CS(1, 3)]], resources=2)
    msgs = {v.message for v in validate(ts)}
    assert "critical section must have positive wcet" in msgs
    assert "resource 3 out of range" in msgs


def test_frame_based_needs_common_period():
    ts = TaskSet((Task((NC(1),), 5, 5), Task((NC(1),), 6, 6)), processors=1, resources=1)
    assert any("frame-based" in v.message for v in validate(ts))


def test_task_may_start_and_end_with_critical_sections():
    ts = make_taskset([[CS(1, 0), NC(2), CS(1, 0)]])
    assert validate(ts) == []


@pytest.mark.parametrize("periods,expected", [((1, 2, 5, 10), 10), ((7,), 7), ((4, 6), 12)])
def test_hyperperiod(periods, expected):
    ts = periodic(*(Task((NC(1),), p, p) for p in periods))
    assert hyperperiod(ts) == expected


def test_hyperperiod_overflow_is_explicit():
    primes = (2**31 - 1, 2**61 - 1, 2**89 - 1)
    ts = periodic(*(Task((NC(1),), p, p) for p in primes))
    with pytest.raises(HyperperiodOverflow):
        hyperperiod(ts)


def test_utilization_exact():
    assert utilization(Task((NC(2),), 5, 5)) == Fraction(2, 5)
    assert utilization(Task((), 5, 5)) == 0
    assert utilization(Task((NC(1), CS(1, 0), NC(2)), 10, 10)) == Fraction(4, 10)
    ts = periodic(Task((NC(1),), 2, 2), Task((NC(1),), 3, 3))
    assert total_utilization(ts) == Fraction(5, 6)


def test_access_pattern_flow_shop_with_skips():
    ts = make_taskset([[CS(1, 0), NC(1), CS(1, 1)], [CS(1, 1)]], resources=2)
    pat = classify_access_pattern(ts)
    assert pat.flow_shop and pat.order == (0, 1)


def test_access_pattern_cyclic_pair_is_job_shop():
    ts = make_taskset([[CS(1, 0), CS(1, 1)], [CS(1, 1), CS(1, 0)]], resources=2)
    assert not classify_access_pattern(ts).flow_shop


def test_access_pattern_repeated_resource_is_job_shop():
    ts = make_taskset([[CS(1, 0), NC(1), CS(1, 0)]], resources=1)
    assert not classify_access_pattern(ts).flow_shop


def test_json_round_trip():
    ts = TaskSet((Task((NC(3), CS(2, 1), NC(1)), 10, 8), Task((CS(4, 0),), 5, 5)),
                 processors=3, resources=2, release_model=PERIODIC, resolution_denominator=1000)
    assert loads(dumps(ts)) == ts


def test_zero_length_noncritical_rejected_at_parse():
    text = '{"processors": 1, "resources": 1, "tasks": [{"period": 5, "deadline": 5, ' \
           '"segments": [{"wcet": 0, "resource": null}, {"wcet": 1, "resource": 0}]}]}'
    with pytest.raises(TaskSetFormatError, match="zero-length"):
        loads(text)


def test_malformed_json_rejected():
    with pytest.raises(TaskSetFormatError):
        loads("{not json")
    with pytest.raises(TaskSetFormatError, match="processors"):
        loads('{"resources": 1, "tasks": []}')


def test_segment_helpers_and_derived_fields():
    t = Task((NC(2), CS(3, 1), NC(1), CS(1, 0)), 10, 10)
    assert t.wcet == 7
    assert list(t.critical_sections) == [1, 3]
    assert list(t.access_sequence()) == [1, 0]
    assert Segment(3).critical is False
    assert make_taskset([[NC(2)], [CS(3, 0)]]).tasks[0].period == 5
    assert make_taskset([]).release_model == FRAME
