"""Task model: segments, tasks, task sets and their JSON form.

All times are integers counted in a global resolution unit; a task set
records how many units make up one base time unit
(``resolution_denominator``).  Keeping everything integral means schedule
comparisons are exact.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

FRAME = "frame"
PERIODIC = "periodic"
RELEASE_MODELS = (FRAME, PERIODIC)

# Largest time value we accept; beyond this hyper-periods are rejected.
MAX_TIME = 2**62


class TaskSetFormatError(ValueError):
    """Raised when a serialized task set cannot be parsed."""


class HyperperiodOverflow(OverflowError):
    pass


@dataclass(frozen=True)
class Segment:
    """One computation segment; ``resource is None`` means non-critical."""

    wcet: int
    resource: int | None = None

    @property
    def critical(self) -> bool:
        return self.resource is not None


def NC(wcet: int) -> Segment:
    return Segment(wcet, None)


def CS(wcet: int, resource: int = 0) -> Segment:
    return Segment(wcet, resource)


@dataclass(frozen=True)
class Task:
    segments: tuple[Segment, ...]
    period: int
    deadline: int

    def __post_init__(self):
        object.__setattr__(self, "segments", tuple(self.segments))

    @property
    def wcet(self) -> int:
        return sum(s.wcet for s in self.segments)

    @property
    def critical_sections(self) -> list[int]:
        """Positions of the critical segments."""
        return [j for j, s in enumerate(self.segments) if s.critical]

    def access_sequence(self) -> list[int]:
        return [s.resource for s in self.segments if s.critical]


@dataclass(frozen=True)
class TaskSet:
    tasks: tuple[Task, ...]
    processors: int = 1
    resources: int = 1
    release_model: str = FRAME
    resolution_denominator: int = 1

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))

    def __len__(self) -> int:
        return len(self.tasks)

    @property
    def total_wcet(self) -> int:
        return sum(t.wcet for t in self.tasks)

    @property
    def frame_based(self) -> bool:
        return self.release_model == FRAME


@dataclass(frozen=True)
class Violation:
    message: str
    task: int | None = None
    positions: tuple[int, ...] = field(default_factory=tuple)

    def __str__(self) -> str:
        where = ""
        if self.task is not None:
            where = f" at task {self.task}"
            if self.positions:
                where += " positions " + ",".join(map(str, self.positions))
        return self.message + where


def validate(ts: TaskSet) -> list[Violation]:
    """Return every violated model constraint; an empty list means valid."""
    out: list[Violation] = []
    if ts.processors < 1:
        out.append(Violation("processor count must be at least 1"))
    if ts.resources < 1:
        out.append(Violation("resource count must be at least 1"))
    if ts.release_model not in RELEASE_MODELS:
        out.append(Violation(f"unknown release model {ts.release_model!r}"))
    if ts.resolution_denominator < 1:
        out.append(Violation("resolution denominator must be positive"))
    for i, task in enumerate(ts.tasks):
        if task.period <= 0:
            out.append(Violation("period must be positive", i))
        if task.deadline <= 0:
            out.append(Violation("deadline must be positive", i))
        if task.deadline > task.period:
            out.append(Violation("deadline exceeds period", i))
        for j, seg in enumerate(task.segments):
            if seg.wcet < 0:
                out.append(Violation("negative wcet", i, (j,)))
            if seg.critical:
                if seg.wcet <= 0:
                    out.append(Violation("critical section must have positive wcet", i, (j,)))
                if not 0 <= seg.resource < ts.resources:
                    out.append(Violation(f"resource {seg.resource} out of range", i, (j,)))
            elif seg.wcet == 0:
                out.append(Violation("zero-length non-critical section", i, (j,)))
        for j in range(len(task.segments) - 1):
            if not task.segments[j].critical and not task.segments[j + 1].critical:
                out.append(Violation("adjacent non-critical sections", i, (j, j + 1)))
    if ts.release_model == FRAME and ts.tasks:
        if len({t.period for t in ts.tasks}) > 1 or len({t.deadline for t in ts.tasks}) > 1:
            out.append(Violation("frame-based task set needs one common period and deadline"))
    return out


def hyperperiod(ts: TaskSet) -> int:
    """Least common multiple of the task periods (1 for an empty set)."""
    h = 1
    for task in ts.tasks:
        nxt = math.lcm(h, task.period)
        if nxt > MAX_TIME:
            raise HyperperiodOverflow(
                f"lcm({h}, {task.period}) = {nxt} exceeds the time range {MAX_TIME}"
            )
        h = nxt
    return h


def utilization(task: Task) -> Fraction:
    return Fraction(task.wcet, task.period)


def total_utilization(ts: TaskSet) -> Fraction:
    return sum((utilization(t) for t in ts.tasks), Fraction(0))


@dataclass(frozen=True)
class AccessPattern:
    """Result of :func:`classify_access_pattern`.

    ``order`` is the witness resource order when the pattern is flow-shop
    compatible and ``None`` otherwise.
    """

    flow_shop: bool
    order: tuple[int, ...] | None = None


def classify_access_pattern(ts: TaskSet) -> AccessPattern:
    succ: dict[int, set[int]] = {z: set() for z in range(ts.resources)}
    for task in ts.tasks:
        seq = task.access_sequence()
        if len(set(seq)) != len(seq):
            return AccessPattern(False)
        for a, b in zip(seq, seq[1:]):
            succ[a].add(b)
    indeg = {z: 0 for z in succ}
    for a in succ:
        for b in succ[a]:
            indeg[b] += 1
    heap = [z for z, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        z = heapq.heappop(heap)
        order.append(z)
        for b in sorted(succ[z]):
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, b)
    if len(order) < len(succ):
        return AccessPattern(False)
    return AccessPattern(True, tuple(order))


# -- serialization -----------------------------------------------------------

def to_dict(ts: TaskSet) -> dict:
    return {
        "processors": ts.processors,
        "resources": ts.resources,
        "release_model": ts.release_model,
        "resolution_denominator": ts.resolution_denominator,
        "tasks": [
            {
                "period": t.period,
                "deadline": t.deadline,
                "segments": [{"wcet": s.wcet, "resource": s.resource} for s in t.segments],
            }
            for t in ts.tasks
        ],
    }


def _int(value, what: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TaskSetFormatError(f"{what} must be an integer, got {value!r}")
    return value


def from_dict(doc: dict) -> TaskSet:
    try:
        tasks = []
        for i, td in enumerate(doc["tasks"]):
            segs = []
            for j, sd in enumerate(td["segments"]):
                wcet = _int(sd["wcet"], f"tasks[{i}].segments[{j}].wcet")
                res = sd.get("resource")
                if res is not None:
                    res = _int(res, f"tasks[{i}].segments[{j}].resource")
                elif wcet == 0:
                    raise TaskSetFormatError(
                        f"tasks[{i}].segments[{j}]: zero-length non-critical section; omit it"
                    )
                segs.append(Segment(wcet, res))
            tasks.append(Task(tuple(segs), _int(td["period"], "period"), _int(td["deadline"], "deadline")))
        model = doc.get("release_model", FRAME)
        if model not in RELEASE_MODELS:
            raise TaskSetFormatError(f"unknown release_model {model!r}")
        return TaskSet(
            tuple(tasks),
            processors=_int(doc["processors"], "processors"),
            resources=_int(doc["resources"], "resources"),
            release_model=model,
            resolution_denominator=_int(doc.get("resolution_denominator", 1), "resolution_denominator"),
        )
    except KeyError as exc:
        raise TaskSetFormatError(f"missing field {exc}") from None


def dumps(ts: TaskSet, indent: int | None = None) -> str:
    return json.dumps(to_dict(ts), indent=indent)


def loads(text: str) -> TaskSet:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TaskSetFormatError(str(exc)) from None
    return from_dict(doc)


def make_taskset(
    tasks: Iterable[Sequence[Segment]],
    *,
    processors: int = 1,
    resources: int = 1,
    period: int | None = None,
    deadline: int | None = None,
) -> TaskSet:
    """Build a frame-based task set from bare segment lists.

    Period and deadline default to the total work, which is always enough
    for one processor.
    """
    tasks = [tuple(t) for t in tasks]
    if period is None:
        period = max(1, sum(s.wcet for t in tasks for s in t))
    if deadline is None:
        deadline = period
    return TaskSet(
        tuple(Task(t, period, deadline) for t in tasks),
        processors=processors,
        resources=resources,
        release_model=FRAME,
    )
