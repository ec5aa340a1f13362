"""Experiment pipeline: reduce -> solve -> build graph -> simulate -> verdict.

Variant names follow ``JS-<LEDF|PEDF>-<P|NP>``: the graph comes from the
job-shop reduction, is scheduled by LIST-EDF or partitioned EDF, with
preemptive or non-preemptive critical sections.
"""

from __future__ import annotations

import csv
import io
import json
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import depgraph, jobshop, scheduler
from . import solver as shop_solver
from .generator import GenConfig, GenerationError, generate_taskset
from .taskmodel import FRAME, TaskSet, validate

VARIANTS = ("JS-LEDF-P", "JS-LEDF-NP", "JS-PEDF-P", "JS-PEDF-NP")
DEFAULT_LEVELS = tuple(range(0, 101, 5))
# level 0 cannot be generated (every segment needs positive length); it is run at this level
MIN_LEVEL_PERCENT = 1


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")


@dataclass(frozen=True)
class PipelineOptions:
    reduction: str = "auto"  # auto | frame | delays | periodic
    solver: str = "local"  # dispatch | local | exact
    rule: str = shop_solver.MWR
    budget: int = 100
    max_nodes: int = 10**6
    max_time: float = 60.0
    policy: str = "LEDF"
    cs_mode: str = scheduler.PREEMPTIVE_CS
    seed: int = 0

    @classmethod
    def from_variant(cls, variant: str, **kw) -> "PipelineOptions":
        _, policy, mode = variant.split("-")
        return cls(policy=policy, cs_mode=mode, **kw)


@dataclass
class GraphStage:
    instance: jobshop.JobShopInstance
    shop: shop_solver.ShopSchedule
    status: str
    graph: depgraph.DependencyGraph
    graph_length: int
    graph_bound: int  # lower bound on the best achievable critical path


@dataclass
class ResultRow:
    schedulable: bool
    makespan: int | None
    max_lateness: int | None
    graph_length: int
    workload_bound: Fraction
    graph_bound: int
    lower_bound: Fraction
    solver_status: str
    shop_objective: int
    wall_time: float
    variant: str = ""
    schedule: scheduler.MultiprocSchedule | None = field(default=None, repr=False, compare=False)

    def summary(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "schedule"}
        for k in ("workload_bound", "lower_bound"):
            d[k] = str(d[k])
        return d


def _stage(name, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except PipelineError:
        raise
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage label
        raise PipelineError(name, exc) from exc


def solve_instance(inst: jobshop.JobShopInstance, opts: PipelineOptions):
    if opts.solver == "dispatch":
        return shop_solver.solve_dispatch(inst, opts.rule, opts.seed), shop_solver.INCUMBENT
    if opts.solver == "local":
        return shop_solver.solve_heuristic(inst, opts.budget, opts.seed), shop_solver.INCUMBENT
    if opts.solver == "exact":
        res = shop_solver.solve_exact(inst, opts.max_nodes, opts.max_time,
                                 incumbent=shop_solver.solve_heuristic(inst, opts.budget, opts.seed))
        return res.schedule, res.status
    raise ValueError(f"unknown solver {opts.solver!r}")


def build_graph(ts: TaskSet, opts: PipelineOptions) -> GraphStage:
    problems = validate(ts)
    if problems:
        raise PipelineError("validate", ValueError("; ".join(map(str, problems))))
    inst = _stage("reduce", jobshop.reduce, ts, opts.reduction)
    shop, status = _stage("solve", solve_instance, inst, opts)
    g = _stage("graph", depgraph.build_from_schedule, ts, shop)
    length = depgraph.critical_path_length(g)
    # tasks left out of the delay form still bound the critical path by their own length
    floor = max((ts.tasks[i].wcet for i in inst.omitted_tasks), default=0)
    if status == shop_solver.OPTIMAL:
        bound = max(shop.objective_value, floor)
    else:
        bound = max(shop_solver.lower_bound(inst), floor)
    if ts.release_model != FRAME:
        bound = max((t.wcet for t in ts.tasks), default=0)
    return GraphStage(inst, shop, status, g, length, bound)


def schedule_graph(ts: TaskSet, stage: GraphStage, policy: str, cs_mode: str, started: float) -> ResultRow:
    g = stage.graph
    dl = scheduler.assign_subjob_deadlines(ts, g)
    if policy == "LEDF":
        sched = _stage("schedule", scheduler.list_edf, ts, g, dl, cs_mode)
    elif policy == "PEDF":
        sched = _stage("schedule", scheduler.p_edf, ts, g, dl, cs_mode)
    else:
        raise PipelineError("schedule", ValueError(f"unknown policy {policy!r}"))
    verdict = scheduler.check_schedulability(sched, ts)
    frame = ts.release_model == FRAME
    workload = Fraction(ts.total_wcet, ts.processors)
    return ResultRow(
        schedulable=verdict.schedulable,
        makespan=scheduler.makespan(sched) if frame else None,
        max_lateness=scheduler.max_lateness(sched),
        graph_length=stage.graph_length,
        workload_bound=workload,
        graph_bound=stage.graph_bound,
        lower_bound=max(workload, Fraction(stage.graph_bound)),
        solver_status=stage.status,
        shop_objective=stage.shop.objective_value,
        wall_time=time.perf_counter() - started,
        variant=f"JS-{policy}-{cs_mode}",
        schedule=sched,
    )


def run_pipeline(ts: TaskSet, options: PipelineOptions | None = None) -> ResultRow:
    opts = options or PipelineOptions()
    t0 = time.perf_counter()
    stage = build_graph(ts, opts)
    return schedule_graph(ts, stage, opts.policy, opts.cs_mode, t0)


# -- sweeps ----------------------------------------------------------------------

def replicate_seed(master_seed: int, replicate: int) -> int:
    """Seed of one replicate; independent of the utilization level."""
    return int(np.random.SeedSequence([master_seed, replicate]).generate_state(1)[0])


def level_utilization(level_percent: int) -> Fraction:
    return Fraction(max(level_percent, MIN_LEVEL_PERCENT), 100)


@dataclass(frozen=True)
class _Job:
    cfg: GenConfig
    level: int
    replicate: int
    seed: int
    variants: tuple[str, ...]
    opts: PipelineOptions
    audit: bool


def _run_job(job: _Job) -> list[dict]:
    cfg = job.cfg.with_utilization(level_utilization(job.level))
    cfg = GenConfig(**{**asdict(cfg), "seed": job.seed, "h_range": tuple(cfg.h_range),
                       "accesses_range": tuple(cfg.accesses_range), "periods": tuple(cfg.periods)})
    base = {"level": job.level, "replicate": job.replicate, "seed": job.seed}
    try:
        ts = generate_taskset(cfg)
    except GenerationError as exc:
        return [{**base, "variant": v, "schedulable": False, "error": f"generate: {exc}"} for v in job.variants]
    t0 = time.perf_counter()
    try:
        stage = build_graph(ts, job.opts)
    except PipelineError as exc:
        return [{**base, "variant": v, "schedulable": False, "error": str(exc)} for v in job.variants]
    out = []
    for v in job.variants:
        _, policy, mode = v.split("-")
        row = schedule_graph(ts, stage, policy, mode, t0)
        rec = {**base, "variant": v, "schedulable": row.schedulable, "error": "",
               "makespan": row.makespan, "max_lateness": row.max_lateness,
               "graph_length": row.graph_length, "status": row.solver_status}
        if job.audit and row.schedulable:
            rec["audit"] = not scheduler.audit(row.schedule)
        out.append(rec)
    return out


@dataclass
class SweepResult:
    table: list[dict]
    details: list[dict]
    manifest: dict

    def ratio(self, variant: str) -> dict[int, float]:
        return {r["level"]: r["ratio"] for r in self.table if r["variant"] == variant}

    def table_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, ["level", "variant", "accepted", "total", "ratio"], lineterminator="\n")
        w.writeheader()
        for r in self.table:
            w.writerow(r)
        return buf.getvalue()

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "results.csv", "a", newline="") as fh:
            text = self.table_csv()
            if fh.tell() > 0:
                text = text.split("\n", 1)[1]
            fh.write(text)
        (out / "manifest.json").write_text(json.dumps(self.manifest, indent=2, default=str) + "\n")
        return out


def _git_revision() -> str | None:
    try:
        return subprocess.run(["git", "rev-parse", "HEAD"], capture_output=True, text=True,
                              check=True, cwd=Path(__file__).parent).stdout.strip()
    except (OSError, subprocess.CalledProcessError):
        return None


def acceptance_sweep(
    cfg: GenConfig,
    levels=DEFAULT_LEVELS,
    replicates: int = 100,
    variants=("JS-LEDF-P",),
    master_seed: int = 0,
    options: PipelineOptions | None = None,
    jobs: int = 1,
    audit: bool = False,
) -> SweepResult:
    opts = options or PipelineOptions()
    variants = tuple(variants)
    work = [
        _Job(cfg, lvl, r, replicate_seed(master_seed, r), variants, opts, audit)
        for lvl in levels for r in range(replicates)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_run_job, work, chunksize=4))
    else:
        results = [_run_job(j) for j in work]
    details = sorted((rec for batch in results for rec in batch),
                     key=lambda d: (d["level"], d["replicate"], variants.index(d["variant"])))
    table = []
    for lvl in levels:
        for v in variants:
            recs = [d for d in details if d["level"] == lvl and d["variant"] == v]
            acc = sum(1 for d in recs if d["schedulable"])
            table.append({"level": lvl, "variant": v, "accepted": acc, "total": len(recs),
                          "ratio": acc / len(recs) if recs else 0.0})
    manifest = {
        "config": asdict(cfg),
        "master_seed": master_seed,
        "levels": list(levels),
        "replicates": replicates,
        "variants": list(variants),
        "options": asdict(opts),
        "replicate_seeds": [replicate_seed(master_seed, r) for r in range(replicates)],
        "git_revision": _git_revision(),
    }
    return SweepResult(table, details, manifest)
