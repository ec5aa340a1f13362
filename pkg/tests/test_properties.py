import random
from fractions import Fraction

from hypothesis import given, settings, strategies as st

from dga.depgraph import build_from_schedule, critical_path_length, schedule_from_graph
from dga.jobshop import reduce_frame_based, reduce_periodic
from dga.scheduler import audit, check_schedulability, list_edf, makespan, p_edf
from dga.solver import check_schedule, solve_dispatch, solve_heuristic
from dga.taskmodel import PERIODIC, Segment, Task, TaskSet, classify_access_pattern, dumps, hyperperiod, loads, \
    validate
from dga.tickets import build_ticket_table, replay_matches_graph


@st.composite
def task_segments(draw, resources):
    k = draw(st.integers(0, 3))
    segs = []
    if draw(st.booleans()):
        segs.append(Segment(draw(st.integers(1, 9))))
    for j in range(k):
        segs.append(Segment(draw(st.integers(1, 9)), draw(st.integers(0, resources - 1))))
        if j < k - 1 and draw(st.booleans()):
            segs.append(Segment(draw(st.integers(1, 9))))
    if (not segs or segs[-1].critical) and draw(st.booleans()):
        segs.append(Segment(draw(st.integers(1, 9))))
    return tuple(segs)


@st.composite
def frame_sets(draw):
    Z = draw(st.integers(1, 3))
    tasks = draw(st.lists(task_segments(Z), min_size=0, max_size=6))
    D = max(1, sum(s.wcet for t in tasks for s in t))
    return TaskSet(tuple(Task(t, D, D) for t in tasks), processors=draw(st.integers(1, 4)), resources=Z)


@st.composite
def periodic_sets(draw):
    Z = draw(st.integers(1, 2))
    n = draw(st.integers(1, 4))
    tasks = []
    for _ in range(n):
        segs = draw(task_segments(Z))
        T = draw(st.sampled_from((10, 20, 40)))
        tasks.append(Task(segs, T, draw(st.integers(max(1, T // 2), T))))
    return TaskSet(tuple(tasks), processors=draw(st.integers(1, 3)), resources=Z, release_model=PERIODIC)


@given(frame_sets())
@settings(max_examples=150, deadline=None)
def test_json_round_trip_and_validity(ts):
    assert validate(ts) == []
    assert loads(dumps(ts)) == ts


@given(periodic_sets())
@settings(max_examples=100, deadline=None)
def test_hyperperiod_divisible(ts):
    H = hyperperiod(ts)
    assert all(H % t.period == 0 for t in ts.tasks)


@given(frame_sets())
@settings(max_examples=150, deadline=None)
def test_flow_shop_witness_is_consistent(ts):
    pat = classify_access_pattern(ts)
    if pat.flow_shop:
        rank = {z: k for k, z in enumerate(pat.order)}
        for t in ts.tasks:
            seq = [rank[z] for z in t.access_sequence()]
            assert seq == sorted(seq) and len(set(seq)) == len(seq)


@given(frame_sets(), st.integers(0, 2**32 - 1))
@settings(max_examples=150, deadline=None)
def test_graph_round_trip_properties(ts, seed):
    inst = reduce_frame_based(ts)
    s = solve_dispatch(inst, "random", seed)
    assert check_schedule(s) == []
    g = build_from_schedule(ts, s)
    length = critical_path_length(g)
    assert length <= s.objective_value
    back = schedule_from_graph(ts, g)
    assert check_schedule(back) == [] and back.objective_value == length


@given(frame_sets(), st.sampled_from(("P", "NP")))
@settings(max_examples=150, deadline=None)
def test_list_schedules_respect_bounds(ts, mode):
    g = build_from_schedule(ts, solve_heuristic(reduce_frame_based(ts), 5))
    s = list_edf(ts, g, mode=mode)
    assert audit(s, work_conserving=True) == []
    lb = max(Fraction(ts.total_wcet, ts.processors), critical_path_length(g))
    assert lb <= makespan(s) <= critical_path_length(g) + Fraction(ts.total_wcet, ts.processors)
    assert audit(p_edf(ts, g, mode=mode)) == []


@given(periodic_sets(), st.integers(0, 1000))
@settings(max_examples=60, deadline=None)
def test_periodic_pipeline_properties(ts, seed):
    g = build_from_schedule(ts, solve_heuristic(reduce_periodic(ts), 5, seed))
    for s in (list_edf(ts, g), p_edf(ts, g, mode="P")):
        assert audit(s) == []
        v = check_schedulability(s)
        if v.schedulable:
            assert all(s.finish[x] <= hyperperiod(ts) for x in s.finish)
    table = build_ticket_table(ts, g)
    rng = random.Random(seed)
    assert all(replay_matches_graph(ts, g, table, rng, rounds=2) for _ in range(5))
