"""Job-shop instances and the reductions from task sets.

Three reductions are provided:

* :func:`reduce_frame_based` -- ``Z + n`` machines, one job per task,
  makespan objective.  Machines ``[0, Z)`` run the critical sections of
  each resource, machine ``Z + i`` runs task ``i``'s non-critical code.
* :func:`reduce_with_delays` -- ``Z`` machines only; non-critical code
  becomes release times, minimum gaps between operations, and a tail
  added after the last operation.
* :func:`reduce_periodic` -- unrolls one hyper-period into jobs with
  releases and absolute deadlines; max-lateness objective.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .taskmodel import FRAME, PERIODIC, TaskSet, hyperperiod

MAKESPAN = "makespan"
MAX_LATENESS = "max_lateness"


class ReductionError(ValueError):
    pass


@dataclass(frozen=True)
class Source:
    task: int
    segment: int
    occurrence: int = 0


@dataclass(frozen=True)
class ShopOperation:
    job: int
    position: int
    machine: int
    processing: int
    min_gap_after_prev: int = 0
    source: Source | None = None


@dataclass(frozen=True)
class ShopJob:
    operations: tuple[ShopOperation, ...]
    release: int = 0
    abs_deadline: int | None = None
    # time that must still elapse after the last operation completes
    tail: int = 0
    # index of a job that must complete before this one starts
    predecessor: int | None = None
    task: int | None = None
    occurrence: int = 0


@dataclass(frozen=True)
class MachineRole:
    kind: str  # "resource" or "task"
    index: int


@dataclass(frozen=True)
class JobShopInstance:
    machines: int
    jobs: tuple[ShopJob, ...]
    objective: str = MAKESPAN
    machine_roles: tuple[MachineRole, ...] = ()
    # tasks without critical sections, left out of the delay form
    omitted_tasks: tuple[int, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "jobs", tuple(self.jobs))
        for j, job in enumerate(self.jobs):
            for p, op in enumerate(job.operations):
                if op.job != j or op.position != p:
                    raise ValueError(f"operation coordinates ({op.job}, {op.position}) != ({j}, {p})")
                if not 0 <= op.machine < self.machines:
                    raise ValueError(f"operation ({j}, {p}) uses machine {op.machine} of {self.machines}")
                if op.processing < 0 or op.min_gap_after_prev < 0:
                    raise ValueError(f"negative time on operation ({j}, {p})")
            if self.objective == MAX_LATENESS and job.abs_deadline is None:
                raise ValueError(f"job {j} lacks a deadline under max-lateness")

    @property
    def num_operations(self) -> int:
        return sum(len(j.operations) for j in self.jobs)

    def operations(self):
        for job in self.jobs:
            yield from job.operations

    def machine_operations(self) -> list[list[ShopOperation]]:
        out = [[] for _ in range(self.machines)]
        for op in self.operations():
            out[op.machine].append(op)
        return out


def job_shop(jobs, *, objective: str = MAKESPAN, releases=None, deadlines=None) -> JobShopInstance:
    """Build a plain instance from ``[[(machine, processing), ...], ...]``."""
    built = []
    machines = 0
    for j, chain in enumerate(jobs):
        ops = []
        for p, item in enumerate(chain):
            m, proc = item[0], item[1]
            gap = item[2] if len(item) > 2 else 0
            ops.append(ShopOperation(j, p, m, proc, gap))
            machines = max(machines, m + 1)
        built.append(
            ShopJob(
                tuple(ops),
                release=releases[j] if releases else 0,
                abs_deadline=deadlines[j] if deadlines else None,
            )
        )
    return JobShopInstance(machines, tuple(built), objective)


def _roles(ts: TaskSet) -> tuple[MachineRole, ...]:
    return tuple(MachineRole("resource", z) for z in range(ts.resources)) + tuple(
        MachineRole("task", i) for i in range(len(ts.tasks))
    )


def _chain_ops(ts: TaskSet, i: int, job: int, occurrence: int) -> tuple[ShopOperation, ...]:
    Z = ts.resources
    ops = []
    for j, seg in enumerate(ts.tasks[i].segments):
        machine = seg.resource if seg.critical else Z + i
        ops.append(ShopOperation(job, j, machine, seg.wcet, 0, Source(i, j, occurrence)))
    return tuple(ops)


def reduce_frame_based(ts: TaskSet) -> JobShopInstance:
    if ts.release_model != FRAME:
        raise ReductionError("reduce_frame_based needs a frame-based task set")
    jobs = tuple(
        ShopJob(_chain_ops(ts, i, i, 0), 0, task.deadline, task=i)
        for i, task in enumerate(ts.tasks)
    )
    return JobShopInstance(ts.resources + len(ts.tasks), jobs, MAKESPAN, _roles(ts))


def reduce_with_delays(ts: TaskSet) -> JobShopInstance:
    if ts.release_model != FRAME:
        raise ReductionError("reduce_with_delays needs a frame-based task set")
    jobs = []
    omitted = []
    for i, task in enumerate(ts.tasks):
        if not task.critical_sections:
            omitted.append(i)
            continue
        jid = len(jobs)
        ops = []
        pending = 0  # non-critical work since the previous critical section
        release = 0
        for j, seg in enumerate(task.segments):
            if not seg.critical:
                pending += seg.wcet
                continue
            if not ops:
                release, gap = pending, 0
            else:
                gap = pending
            ops.append(ShopOperation(jid, len(ops), seg.resource, seg.wcet, gap, Source(i, j, 0)))
            pending = 0
        jobs.append(ShopJob(tuple(ops), release, task.deadline, tail=pending, task=i))
    roles = tuple(MachineRole("resource", z) for z in range(ts.resources))
    return JobShopInstance(ts.resources, tuple(jobs), MAKESPAN, roles, tuple(omitted))


def reduce_periodic(ts: TaskSet) -> JobShopInstance:
    if ts.release_model != PERIODIC:
        raise ReductionError("reduce_periodic needs a periodic task set")
    H = hyperperiod(ts)
    jobs = []
    for i, task in enumerate(ts.tasks):
        prev = None
        for occ in range(H // task.period):
            jid = len(jobs)
            r = occ * task.period
            jobs.append(
                ShopJob(_chain_ops(ts, i, jid, occ), r, r + task.deadline, predecessor=prev, task=i, occurrence=occ)
            )
            prev = jid
    return JobShopInstance(ts.resources + len(ts.tasks), tuple(jobs), MAX_LATENESS, _roles(ts))


def reduce(ts: TaskSet, form: str = "auto") -> JobShopInstance:
    if form == "auto":
        form = "frame" if ts.release_model == FRAME else "periodic"
    try:
        return {"frame": reduce_frame_based, "delays": reduce_with_delays, "periodic": reduce_periodic}[form](ts)
    except KeyError:
        raise ValueError(f"unknown reduction {form!r}") from None


def to_dict(inst: JobShopInstance) -> dict:
    return {
        "machines": inst.machines,
        "objective": inst.objective,
        "machine_roles": [[r.kind, r.index] for r in inst.machine_roles],
        "omitted_tasks": list(inst.omitted_tasks),
        "jobs": [
            {
                "release": job.release,
                "abs_deadline": job.abs_deadline,
                "tail": job.tail,
                "predecessor": job.predecessor,
                "task": job.task,
                "occurrence": job.occurrence,
                "operations": [
                    {
                        "machine": op.machine,
                        "processing": op.processing,
                        "min_gap_after_prev": op.min_gap_after_prev,
                        "source": None if op.source is None else [op.source.task, op.source.segment, op.source.occurrence],
                    }
                    for op in job.operations
                ],
            }
            for job in inst.jobs
        ],
    }


def from_dict(doc: dict) -> JobShopInstance:
    jobs = []
    for j, jd in enumerate(doc["jobs"]):
        ops = tuple(
            ShopOperation(
                j, p, od["machine"], od["processing"], od.get("min_gap_after_prev", 0),
                None if od.get("source") is None else Source(*od["source"]),
            )
            for p, od in enumerate(jd["operations"])
        )
        jobs.append(
            ShopJob(ops, jd.get("release", 0), jd.get("abs_deadline"), jd.get("tail", 0),
                    jd.get("predecessor"), jd.get("task"), jd.get("occurrence", 0))
        )
    return JobShopInstance(
        doc["machines"], tuple(jobs), doc.get("objective", MAKESPAN),
        tuple(MachineRole(k, i) for k, i in doc.get("machine_roles", [])),
        tuple(doc.get("omitted_tasks", [])),
    )


def dumps(inst: JobShopInstance, indent: int | None = None) -> str:
    return json.dumps(to_dict(inst), indent=indent)
