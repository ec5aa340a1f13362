import random
from fractions import Fraction

import pytest

from dga import depgraph, scheduler
from dga.taskmodel import CS, FRAME, NC, PERIODIC, Task, TaskSet

# Every schedule simulated anywhere in the suite goes through this wrapper:
# structural audit always, and the list-scheduling bound for LIST-EDF on
# frame-based sets.
AUDIT_TALLY = {"schedules": 0, "graham_checks": 0}
_original_simulate = scheduler._simulate


def _audited_simulate(ts, g, deadlines, mode, assignment=None, policy="LEDF"):
    sched = _original_simulate(ts, g, deadlines, mode, assignment, policy)
    problems = scheduler.audit(sched)
    assert not problems, problems
    AUDIT_TALLY["schedules"] += 1
    if policy == "LEDF" and ts.release_model == FRAME:
        bound = depgraph.critical_path_length(g) + Fraction(ts.total_wcet, ts.processors)
        assert scheduler.makespan(sched) <= bound
        AUDIT_TALLY["graham_checks"] += 1
    return sched


@pytest.fixture(autouse=True, scope="session")
def audit_every_schedule():
    scheduler._simulate = _audited_simulate
    yield
    scheduler._simulate = _original_simulate


def random_frame_taskset(rng: random.Random, processors=(2, 4), max_tasks=8, max_wcet=6) -> TaskSet:
    """Frame-based set with alternating segments; deadline = total work."""
    M = rng.choice(processors)
    Z = rng.randint(1, 3)
    n = rng.randint(1, max_tasks)
    tasks = []
    for _ in range(n):
        k = rng.randint(1, 3)
        segs = []
        if rng.random() < 0.6:
            segs.append(NC(rng.randint(1, max_wcet)))
        for j in range(k):
            segs.append(CS(rng.randint(1, max_wcet), rng.randrange(Z)))
            if j < k - 1 and rng.random() < 0.7:
                segs.append(NC(rng.randint(1, max_wcet)))
        if rng.random() < 0.6:
            segs.append(NC(rng.randint(1, max_wcet)))
        tasks.append(tuple(segs))
    total = sum(s.wcet for t in tasks for s in t)
    return TaskSet(tuple(Task(t, total, total) for t in tasks), processors=M, resources=Z)


def workflow_taskset(processors: int = 2) -> TaskSet:
    """Four tasks of five segments on two resources; two access r0 first, two r1 first."""
    first_r0 = ((2, 3, 1, 2, 2), (1, 2, 2, 3, 1))
    first_r1 = ((1, 2, 3, 1, 2), (2, 1, 1, 2, 3))
    tasks = []
    for w in first_r0:
        tasks.append((NC(w[0]), CS(w[1], 0), NC(w[2]), CS(w[3], 1), NC(w[4])))
    for w in first_r1:
        tasks.append((NC(w[0]), CS(w[1], 1), NC(w[2]), CS(w[3], 0), NC(w[4])))
    D = 20
    return TaskSet(tuple(Task(t, D, D) for t in tasks), processors=processors, resources=2)


TICKET_EXAMPLE_ORDERS = (
    # resource 0
    ((1, 0, 1), (0, 0, 1), (3, 0, 3), (2, 0, 3), (4, 0, 3),
     (1, 1, 1), (0, 1, 1), (3, 1, 3), (2, 1, 3)),
    # resource 1
    ((3, 0, 1), (2, 0, 1), (1, 0, 3), (0, 0, 3), (4, 0, 1),
     (3, 1, 1), (2, 1, 1), (1, 1, 3), (0, 1, 3)),
)


def ticket_example_taskset() -> TaskSet:
    """Five periodic tasks on two resources: four with period 25, one with period 50."""
    r0_first = (NC(2), CS(1, 0), NC(2), CS(1, 1), NC(1))
    r1_first = (NC(2), CS(1, 1), NC(2), CS(1, 0), NC(1))
    tasks = [Task(r0_first, 25, 25), Task(r0_first, 25, 25), Task(r1_first, 25, 25),
             Task(r1_first, 25, 25), Task(r1_first, 50, 50)]
    return TaskSet(tuple(tasks), processors=2, resources=2, release_model=PERIODIC)


def ticket_example_graph():
    ts = ticket_example_taskset()
    return ts, depgraph.from_resource_orders(ts, TICKET_EXAMPLE_ORDERS)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: str, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'}  {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
