import random

import pytest

from dga.jobshop import MAKESPAN, MAX_LATENESS, job_shop, reduce_frame_based, reduce_periodic, reduce_with_delays
from dga.oracle import load_corpus, optimal_shop_bruteforce
from dga.solver import (
    EDF, FIFO, LPT, MWR, RANDOM, DisjunctiveGraph, ObjectiveError, ShopSchedule, check_schedule,
    improve_local_search, lower_bound, objective, solve_dispatch, solve_exact, solve_heuristic,
)
from dga.taskmodel import CS, NC, make_taskset

from conftest import random_frame_taskset, ticket_example_taskset

RULES = (EDF, MWR, LPT, FIFO, RANDOM)
# 3 jobs x 3 machines; FIFO dispatch gives 17, the optimum is 14
FIFO_TRAP = [[(1, 7), (2, 3), (0, 2)], [(0, 3), (1, 1), (2, 1)], [(0, 3), (2, 5), (1, 6)]]


def random_instance(rng, jobs=4, machines=3, deadlines=False):
    spec = [[(m, rng.randint(1, 9)) for m in rng.sample(range(machines), rng.randint(1, machines))]
            for _ in range(jobs)]
    if deadlines:
        return job_shop(spec, objective=MAX_LATENESS, releases=[rng.randint(0, 5) for _ in spec],
                        deadlines=[rng.randint(5, 30) for _ in spec])
    return job_shop(spec)


def independent_bounds(s: ShopSchedule) -> int:
    inst = s.instance
    load = [0] * inst.machines
    for op in inst.operations():
        load[op.machine] += op.processing
    chains = [job.release + job.tail + sum(op.processing + op.min_gap_after_prev for op in job.operations)
              for job in inst.jobs]
    return max(load + chains + [0])


def test_single_machine_mwr_runs_longer_job_first():
    inst = job_shop([[(0, 3)], [(0, 5)]])
    s = solve_dispatch(inst, MWR)
    assert s.objective_value == 8
    assert s.start(1, 0) == 0 and s.start(0, 0) == 5
    res = solve_exact(inst)
    assert res.optimal and res.schedule.objective_value == 8


def test_empty_instance():
    inst = job_shop([])
    assert solve_dispatch(inst).objective_value == 0
    assert solve_exact(inst).schedule.objective_value == 0


def test_objective_examples():
    assert objective(solve_dispatch(job_shop([[(0, 4)]]))) == 4
    late = job_shop([[(0, 7)]], objective=MAX_LATENESS, deadlines=[10])
    assert objective(solve_dispatch(late)) == -3
    with pytest.raises(ObjectiveError):
        objective(solve_dispatch(job_shop([[(0, 7)]])), MAX_LATENESS)


def test_delay_form_tail_counts_in_completion():
    ts = make_taskset([[NC(3), CS(2, 0), NC(1)]])
    s = solve_dispatch(reduce_with_delays(ts))
    assert s.completion(0) == 6
    assert s.objective_value == solve_dispatch(reduce_frame_based(ts)).objective_value


@pytest.mark.parametrize("rule", RULES)
def test_dispatch_feasible_and_deterministic(rule):
    rng = random.Random(11)
    for _ in range(40):
        inst = random_instance(rng, deadlines=rng.random() < 0.5)
        s = solve_dispatch(inst, rule, rng_seed=3)
        assert check_schedule(s) == []
        assert s.starts == solve_dispatch(inst, rule, rng_seed=3).starts
        assert s.objective_value >= lower_bound(inst) or inst.objective == MAX_LATENESS


def test_bounds_hold_for_every_schedule():
    rng = random.Random(12)
    for _ in range(40):
        inst = random_instance(rng)
        for s in (solve_dispatch(inst, FIFO), solve_heuristic(inst, 30), solve_exact(inst).schedule):
            assert s.objective_value >= independent_bounds(s)
            assert s.objective_value >= lower_bound(inst)


def test_local_search_never_worsens():
    rng = random.Random(13)
    for k in range(40):
        inst = random_instance(rng, jobs=5, deadlines=k % 2 == 1)
        s0 = solve_dispatch(inst, FIFO)
        s1 = improve_local_search(s0, 100, rng_seed=k)
        assert check_schedule(s1) == []
        assert s1.objective_value <= s0.objective_value


def test_local_search_keeps_optimal_schedule():
    inst = job_shop(FIFO_TRAP)
    opt = solve_exact(inst).schedule
    assert improve_local_search(opt, 200).objective_value == opt.objective_value


def test_local_search_escapes_fifo_trap():
    inst = job_shop(FIFO_TRAP)
    opt = optimal_shop_bruteforce(inst, max_operations=9)
    start = solve_dispatch(inst, FIFO)
    assert (opt, start.objective_value) == (14, 17)
    hits = sum(improve_local_search(start, 1000, rng_seed=s).objective_value == opt for s in range(100))
    assert hits >= 90


def test_exact_matches_bruteforce_on_random_small_instances():
    rng = random.Random(14)
    for k in range(40):
        inst = random_instance(rng, jobs=3, machines=3, deadlines=k % 2 == 1)
        if inst.num_operations > 8:
            continue
        res = solve_exact(inst)
        assert res.optimal
        assert res.schedule.objective_value == optimal_shop_bruteforce(inst)
        for rule in RULES:
            assert res.schedule.objective_value <= solve_dispatch(inst, rule).objective_value


def test_exact_on_corpus_reductions():
    for ts, rec in load_corpus():
        res = solve_exact(reduce_frame_based(ts))
        assert res.optimal and res.schedule.objective_value == rec["oracle_shop_makespan"]


def test_exact_reports_incumbent_on_limit():
    rng = random.Random(15)
    inst = random_instance(rng, jobs=8, machines=4)
    res = solve_exact(inst, max_nodes=5)
    assert res.status == "incumbent"
    assert check_schedule(res.schedule) == []


def test_periodic_lateness_instance_solves():
    inst = reduce_periodic(ticket_example_taskset())
    s = solve_heuristic(inst, 50)
    assert check_schedule(s) == []
    assert inst.objective == MAX_LATENESS
    # occurrences of one task never overlap
    for j, job in enumerate(inst.jobs):
        if job.predecessor is not None:
            assert s.start(j, 0) >= s.completion(job.predecessor)


def test_disjunctive_graph_orientation_and_dot():
    inst = job_shop([[(0, 2), (1, 2)], [(1, 2), (0, 2)]])
    dg = DisjunctiveGraph(inst)
    assert len(dg.pairs) == 2
    full = {p: True for p in dg.pairs}
    heads = dg.heads(full)
    assert heads is not None
    assert "digraph" in dg.to_dot()
    assert solve_exact(inst).schedule.objective_value == 4


def test_random_frame_sets_feasible_under_all_solvers():
    rng = random.Random(16)
    for _ in range(30):
        inst = reduce_frame_based(random_frame_taskset(rng))
        for s in (solve_dispatch(inst, EDF), solve_heuristic(inst, 20), solve_exact(inst, max_nodes=500).schedule):
            assert check_schedule(s) == []
