"""Event-driven simulation of dependency graphs on M processors.

``list_edf`` is semi-partitioned list scheduling: whenever a processor is
free the eligible segment with the earliest absolute sub-job deadline runs,
on any processor.  ``p_edf`` binds each task to one processor (worst-fit by
utilization) and runs EDF per processor, still honouring cross-processor
graph precedence.

A segment is eligible once its job is released and both its task
predecessor and its resource-chain predecessor have completed.  Non-critical
segments may be preempted at event points; critical sections may be
preempted only in ``PREEMPTIVE_CS`` mode.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction

from .depgraph import DependencyGraph, Vertex
from .taskmodel import FRAME, TaskSet, hyperperiod, utilization

PREEMPTIVE_CS = "P"
NON_PREEMPTIVE_CS = "NP"


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SubJobDeadlines:
    """Relative deadline (from the job release) of every segment."""

    relative: dict[Vertex, int]

    def absolute(self, g: DependencyGraph, v: Vertex) -> int:
        return g.release(v) + self.relative[v]


def assign_subjob_deadlines(ts: TaskSet, g: DependencyGraph) -> SubJobDeadlines:
    """Job deadline minus the work that still follows within the same job."""
    rel = {}
    for v in g.vertices:
        task = ts.tasks[v.task]
        suffix = sum(s.wcet for s in task.segments[v.segment + 1:])
        rel[v] = task.deadline - suffix
    return SubJobDeadlines(rel)


@dataclass(frozen=True)
class Piece:
    start: int
    end: int
    vertex: Vertex


@dataclass
class MultiprocSchedule:
    ts: TaskSet
    graph: DependencyGraph
    processors: tuple[tuple[Piece, ...], ...]
    policy: str
    mode: str
    assignment: tuple[int, ...] | None = None
    finish: dict[Vertex, int] = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return hyperperiod(self.ts)

    def job_completion(self, task: int, occurrence: int) -> int:
        segs = self.ts.tasks[task].segments
        if not segs:
            return occurrence * self.ts.tasks[task].period
        return self.finish[Vertex(task, occurrence, len(segs) - 1)]

    def rho(self, t, m: int) -> Vertex | None:
        """Segment running at time ``t`` on processor ``m`` (None when idle)."""
        for p in self.processors[m]:
            if p.start <= t < p.end:
                return p.vertex
        return None

    def pieces(self):
        for m, row in enumerate(self.processors):
            for p in row:
                yield m, p

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["processor", "start", "end", "task", "occurrence", "segment", "resource"])
        for m, p in self.pieces():
            seg = self.ts.tasks[p.vertex.task].segments[p.vertex.segment]
            w.writerow([m, p.start, p.end, p.vertex.task, p.vertex.occurrence, p.vertex.segment,
                        "" if seg.resource is None else seg.resource])
        return buf.getvalue()


def worst_fit_partition(ts: TaskSet, processors: int | None = None) -> tuple[int, ...]:
    """Assign tasks, largest utilization first, to the least-loaded processor."""
    M = processors or ts.processors
    load = [Fraction(0)] * M
    out = [0] * len(ts.tasks)
    for i in sorted(range(len(ts.tasks)), key=lambda i: (-utilization(ts.tasks[i]), i)):
        m = min(range(M), key=lambda m: (load[m], m))
        out[i] = m
        load[m] += utilization(ts.tasks[i])
    return tuple(out)


def _simulate(ts, g, deadlines, mode, assignment=None, policy="LEDF") -> MultiprocSchedule:
    if mode not in (PREEMPTIVE_CS, NON_PREEMPTIVE_CS):
        raise ValueError(f"unknown critical-section mode {mode!r}")
    M = ts.processors
    order = g.topological_order  # raises on cycles
    remaining = {v: g.weight(v) for v in order}
    waiting = {v: len(g.predecessors(v)) for v in order}
    prio = {v: (deadlines.absolute(g, v), v.task, v.occurrence, v.segment) for v in order}
    critical = {v: ts.tasks[v.task].segments[v.segment].critical for v in order}
    releases = sorted({g.release(v) for v in order})
    ready = {v for v in order if waiting[v] == 0}
    running: list[Vertex | None] = [None] * M
    rows: list[list[list]] = [[] for _ in range(M)]
    finish: dict[Vertex, int] = {}
    left = len(order)
    t = 0
    ri = 0

    def pinned(v):
        return v is not None and mode == NON_PREEMPTIVE_CS and critical[v] and remaining[v] < g.weight(v)

    while left:
        while ri < len(releases) and releases[ri] <= t:
            ri += 1
        eligible = [v for v in ready if g.release(v) <= t]
        if assignment is None:
            keep = {v for v in running if pinned(v)}
            slots = M - len(keep)
            chosen = set(sorted((v for v in eligible if v not in keep), key=prio.__getitem__)[:slots]) | keep
            nxt = [v if v in chosen else None for v in running]
            placed = {v for v in nxt if v is not None}
            free = [m for m in range(M) if nxt[m] is None]
            for v in sorted(chosen - placed, key=prio.__getitem__):
                nxt[free.pop(0)] = v
        else:
            nxt = list(running)
            for m in range(M):
                if pinned(running[m]):
                    continue
                mine = [v for v in eligible if assignment[v.task] == m]
                nxt[m] = min(mine, key=prio.__getitem__) if mine else None
        running = nxt
        for m, v in enumerate(running):
            if v is None:
                continue
            row = rows[m]
            if row and row[-1][2] == v and row[-1][1] == t:
                row[-1][1] = None
            else:
                row.append([t, None, v])
        # next event
        cand = [t + remaining[v] for v in running if v is not None]
        if ri < len(releases):
            cand.append(releases[ri])
        if not cand:
            raise SimulationError("no runnable segment and no pending release; graph inconsistent")
        t2 = min(cand)
        for m, v in enumerate(running):
            if v is None:
                continue
            remaining[v] -= t2 - t
            if remaining[v] == 0:
                finish[v] = t2
                ready.discard(v)
                left -= 1
                running[m] = None
                for w in g.successors[v]:
                    waiting[w] -= 1
                    if waiting[w] == 0:
                        ready.add(w)
        # close pieces of segments that stop running now (finished or about to be preempted)
        for m in range(M):
            row = rows[m]
            if row and row[-1][1] is None:
                row[-1][1] = t2
        t = t2
    procs = []
    for row in rows:
        merged = []
        for s, e, v in row:
            if merged and merged[-1].vertex == v and merged[-1].end == s:
                merged[-1] = Piece(merged[-1].start, e, v)
            else:
                merged.append(Piece(s, e, v))
        procs.append(tuple(merged))
    return MultiprocSchedule(ts, g, tuple(procs), policy, mode, assignment, finish)


def list_edf(ts: TaskSet, g: DependencyGraph, deadlines: SubJobDeadlines | None = None,
             mode: str = NON_PREEMPTIVE_CS) -> MultiprocSchedule:
    if deadlines is None:
        deadlines = assign_subjob_deadlines(ts, g)
    return _simulate(ts, g, deadlines, mode, None, "LEDF")


def p_edf(ts: TaskSet, g: DependencyGraph, deadlines: SubJobDeadlines | None = None,
          mode: str = NON_PREEMPTIVE_CS, assignment=None) -> MultiprocSchedule:
    if deadlines is None:
        deadlines = assign_subjob_deadlines(ts, g)
    if assignment is None:
        assignment = worst_fit_partition(ts)
    return _simulate(ts, g, deadlines, mode, tuple(assignment), "PEDF")


@dataclass(frozen=True)
class Verdict:
    schedulable: bool
    # (task, occurrence, completion, absolute deadline) of the first miss
    miss: tuple[int, int, int, int] | None = None

    def __bool__(self) -> bool:
        return self.schedulable


def check_schedulability(sched: MultiprocSchedule, ts: TaskSet | None = None) -> Verdict:
    """Every job in the hyper-period meets its deadline and none runs past it."""
    ts = ts or sched.ts
    H = hyperperiod(ts) if ts.release_model != FRAME else None
    misses = []
    for i, task in enumerate(ts.tasks):
        n = 1 if H is None else H // task.period
        for occ in range(n):
            done = sched.job_completion(i, occ)
            dl = occ * task.period + task.deadline
            if done > dl or (H is not None and done > H):
                misses.append((dl, i, occ, done))
    if not misses:
        return Verdict(True)
    dl, i, occ, done = min(misses)
    return Verdict(False, (i, occ, done, dl))


def makespan(sched: MultiprocSchedule) -> int:
    if sched.ts.release_model != FRAME:
        raise ValueError("makespan is defined for frame-based schedules; check lateness instead")
    return max(sched.finish.values(), default=0)


def max_lateness(sched: MultiprocSchedule) -> int | None:
    ts = sched.ts
    H = hyperperiod(ts)
    worst = None
    for i, task in enumerate(ts.tasks):
        n = 1 if ts.release_model == FRAME else H // task.period
        for occ in range(n):
            late = sched.job_completion(i, occ) - (occ * task.period + task.deadline)
            worst = late if worst is None else max(worst, late)
    return worst


def audit(sched: MultiprocSchedule, work_conserving: bool = False) -> list[str]:
    """Structural scan of a schedule trace.

    Checks per-processor exclusivity, exact execution of every WCET, that no
    segment runs on two processors at once, precedence (task and resource
    chains, releases), and mutual exclusion per resource.  With
    ``work_conserving`` it also checks that no processor idles (globally, or
    per processor for partitioned schedules) while an eligible segment waits.
    """
    ts, g = sched.ts, sched.graph
    out = []
    by_vertex: dict[Vertex, list[tuple[int, int, int]]] = {}
    for m, row in enumerate(sched.processors):
        for a, b in zip(row, row[1:]):
            if b.start < a.end:
                out.append(f"processor {m}: {a.vertex} and {b.vertex} overlap")
        for p in row:
            if p.end <= p.start:
                out.append(f"processor {m}: empty piece for {p.vertex}")
            by_vertex.setdefault(p.vertex, []).append((p.start, p.end, m))
    first, last = {}, {}
    for v in g.vertices:
        ps = sorted(by_vertex.get(v, []))
        done = sum(e - s for s, e, _ in ps)
        if done != g.weight(v):
            out.append(f"{v} executed {done} of {g.weight(v)}")
            continue
        if not ps:
            continue
        for (s1, e1, _), (s2, e2, _) in zip(ps, ps[1:]):
            if s2 < e1:
                out.append(f"{v} runs in parallel with itself")
        first[v], last[v] = ps[0][0], ps[-1][1]
        if sched.assignment is not None and any(m != sched.assignment[v.task] for _, _, m in ps):
            out.append(f"{v} migrated away from its partition")
    for v in first:
        if first[v] < g.release(v):
            out.append(f"{v} starts before its release")
        for p in g.predecessors(v):
            if p in last and first[v] < last[p]:
                out.append(f"{v} starts at {first[v]} before predecessor {p} finishes at {last[p]}")
    # mutual exclusion: a resource is held from the first start of a critical section to its end
    held: dict[int, list[tuple[int, int, Vertex]]] = {}
    for v in first:
        seg = ts.tasks[v.task].segments[v.segment]
        if seg.critical:
            held.setdefault(seg.resource, []).append((first[v], last[v], v))
    for z, spans in held.items():
        spans.sort()
        for a, b in zip(spans, spans[1:]):
            if b[0] < a[1]:
                out.append(f"resource {z}: {a[2]} and {b[2]} overlap")
    if work_conserving and not out:
        out.extend(_audit_work_conservation(sched, first, last))
    return out


def _audit_work_conservation(sched, first, last) -> list[str]:
    g = sched.graph
    M = sched.ts.processors
    points = sorted({0} | {p.start for _, p in sched.pieces()} | {p.end for _, p in sched.pieces()}
                    | {g.release(v) for v in g.vertices})
    out = []
    for t, t2 in zip(points, points[1:]):
        busy = {}
        for m, row in enumerate(sched.processors):
            for p in row:
                if p.start <= t < p.end:
                    busy[m] = p.vertex
        running = set(busy.values())
        for v in g.vertices:
            if v in running or g.release(v) > t or last.get(v, 0) <= t:
                continue
            if any(last.get(p, 0) > t for p in g.predecessors(v)):
                continue
            # v is eligible and waiting during [t, t2)
            if sched.assignment is None:
                if len(busy) < M:
                    out.append(f"idle processor while {v} waits at {t}")
            else:
                m = sched.assignment[v.task]
                if m not in busy:
                    out.append(f"processor {m} idle while {v} waits at {t}")
    return out
