"""Dependency graphs over segment occurrences.

A vertex is one segment of one job occurrence of a task.  Edges are the
intra-task chain (continued across the occurrences of a task within a
hyper-period) plus, for every resource, one chain through all critical
sections of that resource fixing the order in which they get the lock.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

from .jobshop import reduce_frame_based, reduce_periodic
from .solver import ShopSchedule
from .taskmodel import FRAME, TaskSet, hyperperiod


class Vertex(NamedTuple):
    task: int
    occurrence: int
    segment: int


class CyclicGraphError(ValueError):
    def __init__(self, cycle):
        self.cycle = list(cycle)
        super().__init__("dependency graph has a cycle: " + " -> ".join(map(str, self.cycle)))


class ScheduleMismatchError(ValueError):
    pass


def occurrences(ts: TaskSet) -> list[int]:
    """Jobs per task in one hyper-period (1 each for frame-based sets)."""
    if ts.release_model == FRAME:
        return [1] * len(ts.tasks)
    H = hyperperiod(ts)
    return [H // t.period for t in ts.tasks]


def segment_vertices(ts: TaskSet) -> list[Vertex]:
    out = []
    for i, (task, n) in enumerate(zip(ts.tasks, occurrences(ts))):
        for occ in range(n):
            out.extend(Vertex(i, occ, j) for j in range(len(task.segments)))
    return out


@dataclass(frozen=True)
class DependencyGraph:
    ts: TaskSet
    resource_chains: tuple[tuple[Vertex, ...], ...]

    @cached_property
    def vertices(self) -> tuple[Vertex, ...]:
        return tuple(segment_vertices(self.ts))

    def weight(self, v: Vertex) -> int:
        return self.ts.tasks[v.task].segments[v.segment].wcet

    def release(self, v: Vertex) -> int:
        return v.occurrence * self.ts.tasks[v.task].period

    def deadline(self, v: Vertex) -> int:
        """Absolute deadline of the job the vertex belongs to."""
        return self.release(v) + self.ts.tasks[v.task].deadline

    def task_predecessor(self, v: Vertex) -> Vertex | None:
        if v.segment > 0:
            return Vertex(v.task, v.occurrence, v.segment - 1)
        if v.occurrence > 0:
            return Vertex(v.task, v.occurrence - 1, len(self.ts.tasks[v.task].segments) - 1)
        return None

    @cached_property
    def resource_predecessor(self) -> dict[Vertex, Vertex]:
        out = {}
        for chain in self.resource_chains:
            for a, b in zip(chain, chain[1:]):
                out[b] = a
        return out

    @cached_property
    def resource_position(self) -> dict[Vertex, int]:
        """Position of each critical section within its resource chain."""
        return {v: k for chain in self.resource_chains for k, v in enumerate(chain)}

    def predecessors(self, v: Vertex) -> list[Vertex]:
        out = []
        p = self.task_predecessor(v)
        if p is not None:
            out.append(p)
        r = self.resource_predecessor.get(v)
        if r is not None:
            out.append(r)
        return out

    @cached_property
    def successors(self) -> dict[Vertex, list[Vertex]]:
        out = {v: [] for v in self.vertices}
        for v in self.vertices:
            for p in self.predecessors(v):
                out[p].append(v)
        return out

    def edges(self):
        for v in self.vertices:
            for p in self.predecessors(v):
                yield p, v

    @cached_property
    def topological_order(self) -> tuple[Vertex, ...]:
        indeg = {v: len(self.predecessors(v)) for v in self.vertices}
        stack = [v for v in reversed(self.vertices) if indeg[v] == 0]
        order = []
        while stack:
            u = stack.pop()
            order.append(u)
            for w in reversed(self.successors[u]):
                indeg[w] -= 1
                if indeg[w] == 0:
                    stack.append(w)
        if len(order) < len(self.vertices):
            raise CyclicGraphError(find_cycle(self))
        return tuple(order)

    def is_acyclic(self) -> bool:
        try:
            self.topological_order
        except CyclicGraphError:
            return False
        return True


def find_cycle(g: DependencyGraph) -> list[Vertex] | None:
    """Return a witness cycle (first vertex repeated at the end) or ``None``."""
    color = {v: 0 for v in g.vertices}
    for root in g.vertices:
        if color[root]:
            continue
        stack = [(root, iter(g.successors[root]))]
        path = [root]
        color[root] = 1
        while stack:
            v, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[v] = 2
                stack.pop()
                path.pop()
                continue
            if color[nxt] == 1:
                return path[path.index(nxt):] + [nxt]
            if color[nxt] == 0:
                color[nxt] = 1
                path.append(nxt)
                stack.append((nxt, iter(g.successors[nxt])))
    return None


def check_graph(g: DependencyGraph) -> list[str]:
    """Structural problems: chains that are not total orders of their resource, cycles."""
    out = []
    ts = g.ts
    members: dict[int, set[Vertex]] = {z: set() for z in range(ts.resources)}
    for v in g.vertices:
        seg = ts.tasks[v.task].segments[v.segment]
        if seg.critical:
            members[seg.resource].add(v)
    if len(g.resource_chains) != ts.resources:
        out.append(f"{len(g.resource_chains)} resource chains for {ts.resources} resources")
    for z, chain in enumerate(g.resource_chains):
        if z in members and (len(set(chain)) != len(chain) or set(chain) != members[z]):
            out.append(f"resource {z}: chain is not a total order of its critical sections")
    cyc = find_cycle(g)
    if cyc is not None:
        out.append("cycle " + " -> ".join(map(str, cyc)))
    return out


def from_resource_orders(ts: TaskSet, orders) -> DependencyGraph:
    g = DependencyGraph(ts, tuple(tuple(Vertex(*v) for v in chain) for chain in orders))
    problems = check_graph(g)
    if problems:
        cyc = find_cycle(g)
        if cyc is not None:
            raise CyclicGraphError(cyc)
        raise ValueError("; ".join(problems))
    return g


def build_from_schedule(ts: TaskSet, s: ShopSchedule) -> DependencyGraph:
    """Order every resource's critical sections as the shop schedule runs them."""
    per_resource: dict[int, list[tuple[int, Vertex]]] = {z: [] for z in range(ts.resources)}
    for op in s.instance.operations():
        src = op.source
        if src is None:
            raise ScheduleMismatchError("schedule operations carry no task/segment source")
        try:
            seg = ts.tasks[src.task].segments[src.segment]
        except IndexError:
            raise ScheduleMismatchError(f"operation source {src} not in the task set") from None
        if seg.wcet != op.processing:
            raise ScheduleMismatchError(f"operation {src} has processing {op.processing}, segment wcet {seg.wcet}")
        if seg.critical:
            if op.machine != seg.resource:
                raise ScheduleMismatchError(f"critical section {src} scheduled on machine {op.machine}")
            per_resource[seg.resource].append(
                (s.start(op.job, op.position), Vertex(src.task, src.occurrence, src.segment))
            )
    chains = []
    for z in range(ts.resources):
        items = sorted(per_resource[z])
        for (t1, v1), (t2, v2) in zip(items, items[1:]):
            if t1 == t2:
                raise ScheduleMismatchError(f"critical sections {v1} and {v2} of resource {z} start together at {t1}")
        chains.append(tuple(v for _, v in items))
    g = DependencyGraph(ts, tuple(chains))
    problems = check_graph(g)
    if problems:
        raise ScheduleMismatchError("; ".join(problems))
    return g


def longest_paths(g: DependencyGraph, with_releases: bool = False) -> dict[Vertex, int]:
    """Length of the longest vertex-weighted path ending at each vertex.

    With ``with_releases`` a path may not start before the job release, which
    gives earliest finishing times on unboundedly many processors.
    """
    L: dict[Vertex, int] = {}
    for v in g.topological_order:
        base = g.release(v) if with_releases else 0
        for p in g.predecessors(v):
            if L[p] > base:
                base = L[p]
        L[v] = base + g.weight(v)
    return L


def critical_path_length(g: DependencyGraph) -> int:
    L = longest_paths(g)
    return max(L.values(), default=0)


def schedule_from_graph(ts: TaskSet, g: DependencyGraph) -> ShopSchedule:
    """Place each segment so it ends exactly at its longest-path length.

    For frame-based sets the result is a schedule of the ``Z + n`` reduction
    whose makespan equals ``critical_path_length(g)``.  Periodic sets map onto
    the unrolled reduction and respect job releases.
    """
    periodic = ts.release_model != FRAME
    inst = reduce_periodic(ts) if periodic else reduce_frame_based(ts)
    L = longest_paths(g, with_releases=periodic)
    starts = []
    for job in inst.jobs:
        row = []
        for op in job.operations:
            v = Vertex(op.source.task, op.source.occurrence, op.source.segment)
            row.append(L[v] - op.processing)
        starts.append(tuple(row))
    return ShopSchedule(inst, tuple(starts))


_PALETTE = ("red", "blue", "darkgreen", "orange", "purple", "brown", "magenta", "cyan")
_STYLES = ("dashed", "dotted")


def to_dot(g: DependencyGraph) -> str:
    ts = g.ts
    lines = ["digraph dependency {", "  rankdir=LR;"]
    for v in g.vertices:
        seg = ts.tasks[v.task].segments[v.segment]
        shape = "box" if seg.critical else "circle"
        label = f"{seg.wcet}" + (f" r{seg.resource}" if seg.critical else "")
        lines.append(f'  "{v.task}.{v.occurrence}.{v.segment}" [shape={shape}, label="{label}"];')
    for v in g.vertices:
        p = g.task_predecessor(v)
        if p is not None:
            lines.append(f'  "{p.task}.{p.occurrence}.{p.segment}" -> "{v.task}.{v.occurrence}.{v.segment}";')
    for z, chain in enumerate(g.resource_chains):
        color = _PALETTE[z % len(_PALETTE)]
        style = _STYLES[z % len(_STYLES)]
        for a, b in zip(chain, chain[1:]):
            lines.append(
                f'  "{a.task}.{a.occurrence}.{a.segment}" -> "{b.task}.{b.occurrence}.{b.segment}" '
                f"[color={color}, style={style}];"
            )
    lines.append("}")
    return "\n".join(lines)
