"""
From task set to runtime tables
===============================

Four tasks share two locks.  We order every critical section offline by
solving a job-shop instance, turn the solution into a dependency graph, and
run that graph on two processors with LIST-EDF.
"""

from dga import (
    CS, NC, build_from_schedule, build_ticket_table, critical_path_length, list_edf, reduce,
    solve_exact,
)
from dga.scheduler import check_schedulability, makespan
from dga.taskmodel import make_taskset

# Two tasks take lock 0 first, two take lock 1 first.
ts = make_taskset(
    [
        [NC(2), CS(3, 0), NC(1), CS(2, 1), NC(2)],
        [NC(1), CS(2, 0), NC(2), CS(3, 1), NC(1)],
        [NC(1), CS(2, 1), NC(3), CS(1, 0), NC(2)],
        [NC(2), CS(1, 1), NC(1), CS(2, 0), NC(3)],
    ],
    processors=2,
    resources=2,
    period=20,
)

# Machines 0..1 are the locks, machines 2..5 run each task's own code.
inst = reduce(ts)
print("machines:", inst.machines, " operations:", inst.num_operations)

res = solve_exact(inst)
print("shop optimum:", res.schedule.objective_value, "(", res.status, ")")

g = build_from_schedule(ts, res.schedule)
print("critical path:", critical_path_length(g))
for z, chain in enumerate(g.resource_chains):
    print(f"lock {z} order:", [f"t{v.task}.s{v.segment}" for v in chain])

sched = list_edf(ts, g, mode="NP")
print("LIST-EDF makespan:", makespan(sched), " schedulable:", bool(check_schedulability(sched)))
print()
print(sched.to_csv())

# What each task looks up at run time before it takes a lock.
for i, entry in enumerate(build_ticket_table(ts, g).tasks):
    print(f"task {i}: job_order={list(entry.job_order)}")
