"""Exhaustive ground truth for tiny instances.

Nothing here imports the solvers or the simulator: the shop oracle has its
own fixpoint evaluator and the multiprocessor oracle searches schedules
directly on the task set.
"""

from __future__ import annotations

import itertools
import json
import random
from functools import lru_cache
from importlib import resources as _res
from pathlib import Path

from .jobshop import MAKESPAN, JobShopInstance, reduce_frame_based
from .taskmodel import FRAME, Segment, Task, TaskSet, from_dict, to_dict

MAX_SHOP_JOBS = 3
MAX_SHOP_OPS = 8
MAX_TASKS = 3
MAX_SEGMENTS = 10
MAX_WCET = 8

CORPUS_SEED = 20190415
CORPUS_SIZE = 50


class OracleGuardError(ValueError):
    pass


def _shop_value(inst: JobShopInstance, orders) -> int | None:
    """Earliest-start objective of fixed machine sequences; None if cyclic."""
    jobs = inst.jobs
    start = {(j, p): 0 for j, job in enumerate(jobs) for p in range(len(job.operations))}
    n = len(start)

    def completion(j):
        job = jobs[j]
        if job.operations:
            last = len(job.operations) - 1
            return start[(j, last)] + job.operations[last].processing + job.tail
        rel = job.release if job.predecessor is None else max(job.release, completion(job.predecessor))
        return rel + job.tail

    for _ in range(n + 2):
        changed = False
        for j, job in enumerate(jobs):
            for p, op in enumerate(job.operations):
                need = job.release if p == 0 else 0
                if p == 0 and job.predecessor is not None:
                    need = max(need, completion(job.predecessor))
                if p > 0:
                    prev = job.operations[p - 1]
                    need = max(need, start[(j, p - 1)] + prev.processing + op.min_gap_after_prev)
                if need > start[(j, p)]:
                    start[(j, p)] = need
                    changed = True
        for seq in orders:
            for a, b in zip(seq, seq[1:]):
                need = start[a] + jobs[a[0]].operations[a[1]].processing
                if need > start[b]:
                    start[b] = need
                    changed = True
        if not changed:
            break
    else:
        return None
    if changed:
        return None
    if not jobs:
        return 0
    if inst.objective == MAKESPAN:
        return max(completion(j) for j in range(len(jobs)))
    return max(completion(j) - job.abs_deadline for j, job in enumerate(jobs))


def optimal_shop_bruteforce(inst: JobShopInstance, max_operations: int = MAX_SHOP_OPS) -> int:
    """Minimum objective over every processing order on every machine.

    ``max_operations`` may be raised deliberately for a one-off check; the
    enumeration grows as the product of per-machine factorials.
    """
    if len(inst.jobs) > MAX_SHOP_JOBS or inst.num_operations > max_operations:
        raise OracleGuardError(
            f"shop oracle limited to {MAX_SHOP_JOBS} jobs / {max_operations} operations, "
            f"got {len(inst.jobs)} / {inst.num_operations}"
        )
    per_machine = [[] for _ in range(inst.machines)]
    for op in inst.operations():
        per_machine[op.machine].append((op.job, op.position))
    best = None
    for orders in itertools.product(*(itertools.permutations(ops) for ops in per_machine)):
        v = _shop_value(inst, orders)
        if v is not None and (best is None or v < best):
            best = v
    return best


def _guard_tasks(ts: TaskSet):
    if ts.release_model != FRAME:
        raise OracleGuardError("multiprocessor oracle handles frame-based sets only")
    nseg = sum(len(t.segments) for t in ts.tasks)
    if len(ts.tasks) > MAX_TASKS or nseg > MAX_SEGMENTS:
        raise OracleGuardError(f"oracle limited to {MAX_TASKS} tasks / {MAX_SEGMENTS} segments")
    if any(s.wcet > MAX_WCET for t in ts.tasks for s in t.segments):
        raise OracleGuardError(f"oracle limited to WCETs up to {MAX_WCET}")


def optimal_mmss_makespan_bruteforce(ts: TaskSet, preemptive: bool = False) -> int:
    """Optimal makespan on ``ts.processors`` processors.

    The default model runs every segment non-preemptively and may migrate
    between segments.  Since some optimal schedule starts every segment at
    time 0 or at a completion time, branching over which eligible segments
    start at each completion (leaving processors idle deliberately is one
    of the branches) is exhaustive.

    With ``preemptive`` segments run in unit time slots and may be preempted
    and migrated at every integer time; a critical section holds its lock
    from its first slot to its last.
    """
    _guard_tasks(ts)
    if preemptive:
        return _preemptive_dp(ts)
    return _nonpreemptive_search(ts)


def _nonpreemptive_search(ts: TaskSet) -> int:
    tasks = [t.segments for t in ts.tasks]
    n, M = len(tasks), ts.processors
    suffix = [[sum(s.wcet for s in segs[j:]) for j in range(len(segs) + 1)] for segs in tasks]
    best = [sum(suffix[i][0] for i in range(n))]  # one processor, back to back

    def dfs(t, nxt, busy_until):
        # busy_until[i]: finish of task i's running segment, or None
        lb = t
        for i in range(n):
            ready = busy_until[i] if busy_until[i] is not None else t
            lb = max(lb, ready + suffix[i][nxt[i]])
        if lb >= best[0]:
            return
        if all(nxt[i] == len(tasks[i]) for i in range(n)) and all(b is None for b in busy_until):
            best[0] = t
            return
        running = [i for i in range(n) if busy_until[i] is not None]
        held = {tasks[i][nxt[i] - 1].resource for i in running if tasks[i][nxt[i] - 1].critical}
        eligible = [i for i in range(n) if busy_until[i] is None and nxt[i] < len(tasks[i])]
        free = M - len(running)
        for k in range(min(free, len(eligible)), -1, -1):
            for S in itertools.combinations(eligible, k):
                res = [tasks[i][nxt[i]].resource for i in S if tasks[i][nxt[i]].critical]
                if len(set(res)) != len(res) or held & set(res):
                    continue
                if not S and not running:
                    continue
                nb = list(busy_until)
                nn = list(nxt)
                for i in S:
                    nb[i] = t + tasks[i][nxt[i]].wcet
                    nn[i] += 1
                t2 = min(b for b in nb if b is not None)
                nb = [None if b is not None and b == t2 else b for b in nb]
                dfs(t2, tuple(nn), tuple(nb))

    dfs(0, tuple([0] * n), tuple([None] * n))
    return best[0]


def _preemptive_dp(ts: TaskSet) -> int:
    tasks = [t.segments for t in ts.tasks]
    n, M = len(tasks), ts.processors

    @lru_cache(maxsize=None)
    def f(state):
        # state: per task (segment index, remaining work in that segment)
        if all(j == len(tasks[i]) for i, (j, _) in enumerate(state)):
            return 0
        held = {}
        active = []
        for i, (j, rem) in enumerate(state):
            if j == len(tasks[i]):
                continue
            seg = tasks[i][j]
            active.append(i)
            if seg.critical and rem < seg.wcet:
                held[seg.resource] = i
        best = None
        for k in range(1, min(M, len(active)) + 1):
            for S in itertools.combinations(active, k):
                used = set()
                ok = True
                for i in S:
                    seg = tasks[i][state[i][0]]
                    if seg.critical:
                        z = seg.resource
                        if z in used or held.get(z, i) != i:
                            ok = False
                            break
                        used.add(z)
                if not ok:
                    continue
                new = list(state)
                for i in S:
                    j, rem = state[i]
                    rem -= 1
                    if rem == 0:
                        j += 1
                        rem = tasks[i][j].wcet if j < len(tasks[i]) else 0
                    new[i] = (j, rem)
                v = f(tuple(new))
                if best is None or v < best:
                    best = v
        return 1 + best

    start = tuple((0, segs[0].wcet) if segs else (0, 0) for segs in tasks)
    return f(start)


# -- corpus --------------------------------------------------------------------

def random_small_taskset(rng: random.Random, max_segments: int = MAX_SHOP_OPS) -> TaskSet:
    """A frame-based set inside both oracle guards (integer WCETs 1..4)."""
    n = rng.choice((2, 2, 3))
    Z = rng.choice((1, 2))
    M = rng.choice((1, 2, 2, 3))
    budget = max_segments
    tasks = []
    for i in range(n):
        room = budget - (n - i - 1)
        length = rng.randint(1, min(4, room))
        budget -= length
        segs = []
        for j in range(length):
            prev_nc = bool(segs) and not segs[-1].critical
            critical = prev_nc or rng.random() < 0.5
            segs.append(Segment(rng.randint(1, 4), rng.randrange(Z) if critical else None))
        tasks.append(segs)
    total = sum(s.wcet for t in tasks for s in t)
    longest = max(sum(s.wcet for s in t) for t in tasks)
    D = rng.randint(max(longest, -(-total // M)), total)
    return TaskSet(tuple(Task(tuple(t), D, D) for t in tasks), processors=M, resources=Z)


def build_corpus(count: int = CORPUS_SIZE, seed: int = CORPUS_SEED) -> list[dict]:
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        ts = random_small_taskset(rng)
        out.append({
            "taskset": to_dict(ts),
            "oracle_makespan": optimal_mmss_makespan_bruteforce(ts),
            "oracle_preemptive_makespan": optimal_mmss_makespan_bruteforce(ts, preemptive=True),
            "oracle_shop_makespan": optimal_shop_bruteforce(reduce_frame_based(ts)),
        })
    return out


def write_corpus(path, count: int = CORPUS_SIZE, seed: int = CORPUS_SEED) -> list[dict]:
    corpus = build_corpus(count, seed)
    Path(path).write_text(json.dumps(corpus, indent=1) + "\n")
    return corpus


def load_corpus(path=None) -> list[tuple[TaskSet, dict]]:
    if path is None:
        text = _res.files("dga").joinpath("data/oracle_corpus.json").read_text()
    else:
        text = Path(path).read_text()
    return [(from_dict(rec["taskset"]), rec) for rec in json.loads(text)]
