"""Runtime enforcement data: per-task ``job_order`` tables and serving tickets.

Each critical section in a hyper-period gets an order number: its position
in the chain of its resource.  A task's ``job_order`` lists these numbers
job by job, followed by the number of critical sections each resource
serves per hyper-period.  At run time a semaphore only admits the critical
section whose order equals its serving ticket.
"""

from __future__ import annotations

import bisect
import json
import random
from dataclasses import dataclass

from .depgraph import DependencyGraph, Vertex, occurrences
from .taskmodel import TaskSet


class TicketError(IndexError):
    pass


class ReplayDeadlock(RuntimeError):
    pass


@dataclass(frozen=True)
class TaskEntry:
    total_jobs: int
    total_cs: int
    job_order: tuple[int, ...]
    current_cs: int = 0

    def to_dict(self) -> dict:
        return {
            "total_jobs": self.total_jobs,
            "total_cs": self.total_cs,
            "job_order": list(self.job_order),
            "current_cs": self.current_cs,
        }


@dataclass(frozen=True)
class TicketTable:
    tasks: tuple[TaskEntry, ...]
    num_cs: tuple[int, ...]

    def to_dict(self) -> dict:
        return {"tasks": [t.to_dict() for t in self.tasks], "num_cs": list(self.num_cs)}

    def dumps(self, indent: int | None = None) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def build_ticket_table(ts: TaskSet, g: DependencyGraph) -> TicketTable:
    pos = g.resource_position
    num_cs = tuple(len(chain) for chain in g.resource_chains)
    entries = []
    for i, (task, n) in enumerate(zip(ts.tasks, occurrences(ts))):
        cs = task.critical_sections
        order = [pos[Vertex(i, occ, j)] for occ in range(n) for j in cs]
        entries.append(TaskEntry(n, len(cs), tuple(order) + num_cs))
    return TicketTable(tuple(entries), num_cs)


def get_cs_order(entry: TaskEntry, job_no: int, current_cs: int) -> int:
    """Order of critical section ``current_cs`` in the task's ``job_no``-th job."""
    if not 0 <= current_cs < entry.total_cs:
        raise TicketError(f"current_cs {current_cs} outside [0, {entry.total_cs})")
    index = (job_no % entry.total_jobs) * entry.total_cs + current_cs
    if index >= entry.total_jobs * entry.total_cs:
        raise TicketError(f"index {index} falls in the per-resource count region")
    return entry.job_order[index]


class _Semaphore:
    def __init__(self, num_cs: int):
        self.num_cs = num_cs
        self.owner = None
        self.serving_ticket = 0
        # sorted by (round, cs_order); the round keeps jobs of the next
        # hyper-period behind those still due in this one
        self.wait_queue: list = []

    def lock(self, who, ticket) -> bool:
        if self.owner is None and self.serving_ticket == ticket[1]:
            self.owner = who
            return True
        bisect.insort(self.wait_queue, (ticket, who))
        return False

    def unlock(self):
        self.owner = None
        self.serving_ticket += 1
        if self.serving_ticket == self.num_cs:
            self.serving_ticket = 0
        if self.wait_queue:
            ticket, nxt = self.wait_queue[0]
            if ticket[1] == self.serving_ticket:
                self.wait_queue.pop(0)
                self.owner = nxt
                return nxt
        return None


def replay_tickets(ts: TaskSet, table: TicketTable, rng: random.Random, rounds: int = 1) -> list[list[Vertex]]:
    """Run the serving-ticket protocol under a random interleaving of tasks.

    Every task walks its jobs segment by segment; at each step a random task
    that can make progress does so (finishing a non-critical section,
    requesting a lock, or releasing one).  Returns the grant order observed
    on each resource, as vertices, for every round.  Raises
    :class:`ReplayDeadlock` if tasks remain but none can move.
    """
    Z = ts.resources
    sems = [_Semaphore(table.num_cs[z]) for z in range(Z)]
    # per task: (job_no, segment index, state) with state in {"ready", "waiting", "holding"}
    job_no = [0] * len(ts.tasks)
    seg = [0] * len(ts.tasks)
    state = ["ready"] * len(ts.tasks)
    current_cs = [0] * len(ts.tasks)
    grants: list[list[Vertex]] = [[] for _ in range(Z)]
    totals = [e.total_jobs * rounds for e in table.tasks]

    def vertex(i):
        return Vertex(i, job_no[i] % table.tasks[i].total_jobs, seg[i])

    def advance(i):
        seg[i] += 1
        if seg[i] == len(ts.tasks[i].segments):
            seg[i] = 0
            job_no[i] += 1
        state[i] = "ready"

    def active(i):
        return job_no[i] < totals[i] and ts.tasks[i].segments

    while True:
        movable = [i for i in range(len(ts.tasks)) if active(i) and state[i] != "waiting"]
        if not movable:
            if any(active(i) for i in range(len(ts.tasks))):
                raise ReplayDeadlock("all remaining tasks wait on semaphores")
            break
        i = rng.choice(movable)
        s = ts.tasks[i].segments[seg[i]]
        if not s.critical:
            advance(i)
            continue
        sem = sems[s.resource]
        if state[i] == "ready":
            entry = table.tasks[i]
            order = get_cs_order(entry, job_no[i], current_cs[i])
            ticket = (job_no[i] // entry.total_jobs, order)
            if sem.lock(i, ticket):
                state[i] = "holding"
                grants[s.resource].append(vertex(i))
            else:
                state[i] = "waiting"
        else:  # holding: finish the critical section
            current_cs[i] += 1
            if current_cs[i] == table.tasks[i].total_cs:
                current_cs[i] = 0
            advance(i)
            nxt = sem.unlock()
            if nxt is not None:
                state[nxt] = "holding"
                grants[s.resource].append(vertex(nxt))
    return grants


def replay_matches_graph(ts: TaskSet, g: DependencyGraph, table: TicketTable, rng, rounds: int = 1) -> bool:
    grants = replay_tickets(ts, table, rng, rounds)
    return all(list(grants[z]) == list(g.resource_chains[z]) * rounds for z in range(ts.resources))
