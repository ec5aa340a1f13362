"""Non-preemptive job-shop solvers.

Every solver works on the same representation: operations are flattened to
integer ids and a schedule is determined by a processing sequence per
machine.  Start times follow from a longest-path pass over

* chain arcs ``prev -> op`` weighted ``proc(prev) + gap(op)``,
* predecessor-job arcs ``last(pred) -> first(job)`` weighted
  ``proc + tail(pred)``,
* machine-sequence arcs weighted by the earlier operation's processing time,

with job releases as heads.  The objective is evaluated on job completion
times (last operation end plus the job's tail).
"""

from __future__ import annotations

import itertools
import random
import time
from dataclasses import dataclass
from functools import cached_property

from .jobshop import MAKESPAN, MAX_LATENESS, JobShopInstance

EDF = "edf"
MWR = "mwr"
LPT = "lpt"
FIFO = "fifo"
RANDOM = "random"
RULES = (EDF, MWR, LPT, FIFO, RANDOM)

OPTIMAL = "optimal"
INCUMBENT = "incumbent"
INFEASIBLE = "infeasible"

NEG_INF = float("-inf")


class ObjectiveError(ValueError):
    pass


class _Flat:
    """Array view of an instance, shared by all solvers."""

    def __init__(self, inst: JobShopInstance):
        self.inst = inst
        self.proc: list[int] = []
        self.machine: list[int] = []
        self.job: list[int] = []
        self.pos: list[int] = []
        self.first: list[int | None] = []
        self.last: list[int | None] = []
        self.ids: list[list[int]] = []
        for j, job in enumerate(inst.jobs):
            ids = []
            for op in job.operations:
                ids.append(len(self.proc))
                self.proc.append(op.processing)
                self.machine.append(op.machine)
                self.job.append(j)
                self.pos.append(op.position)
            self.ids.append(ids)
            self.first.append(ids[0] if ids else None)
            self.last.append(ids[-1] if ids else None)
        n = len(self.proc)
        self.n = n
        makespan = inst.objective == MAKESPAN
        self.due = [0 if makespan else job.abs_deadline for job in inst.jobs]

        # constant completion for jobs without operations, resolved along predecessor links
        self.release = [0] * n
        self.empty_completion: dict[int, int] = {}
        self.succ: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        self.pred: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for j, job in enumerate(inst.jobs):
            ids = self.ids[j]
            rel = job.release
            p = job.predecessor
            # walk through empty predecessors so their constant completion becomes a release
            while p is not None and self.last[p] is None:
                rel = max(rel, self._empty_done(p))
                p = inst.jobs[p].predecessor
            if not ids:
                continue
            self.release[ids[0]] = rel
            for a, b in zip(ids, ids[1:]):
                w = self.proc[a] + job.operations[self.pos[b]].min_gap_after_prev
                self._arc(a, b, w)
            if p is not None:
                lp = self.last[p]
                self._arc(lp, ids[0], self.proc[lp] + inst.jobs[p].tail)
        # cost contributed by an op when it ends a job: start + end_cost
        self.end_cost: list[float] = [NEG_INF] * n
        self.constant = NEG_INF
        for j, job in enumerate(inst.jobs):
            if self.last[j] is None:
                self.constant = max(self.constant, self._empty_done(j) - self.due[j])
            else:
                k = self.last[j]
                self.end_cost[k] = self.proc[k] + job.tail - self.due[j]
        self.by_machine: list[list[int]] = [[] for _ in range(inst.machines)]
        for k in range(n):
            self.by_machine[self.machine[k]].append(k)
        self.remaining = [0] * n  # work from op start to job completion
        for j, ids in enumerate(self.ids):
            acc = self.inst.jobs[j].tail
            for k in reversed(ids):
                acc += self.proc[k]
                self.remaining[k] = acc
                acc += self.inst.jobs[j].operations[self.pos[k]].min_gap_after_prev

    def _empty_done(self, j: int) -> int:
        if j in self.empty_completion:
            return self.empty_completion[j]
        job = self.inst.jobs[j]
        rel = job.release
        if job.predecessor is not None:
            p = job.predecessor
            if self.last[p] is None:
                rel = max(rel, self._empty_done(p))
            # a non-empty predecessor of an empty job is handled when evaluating
        done = rel + job.tail
        self.empty_completion[j] = done
        return done

    def _arc(self, a: int, b: int, w: int):
        self.succ[a].append((b, w))
        self.pred[b].append((a, w))

    # -- evaluation ---------------------------------------------------------

    def heads(self, extra_succ: list[list[int]]) -> list[int] | None:
        """Earliest starts given extra zero-gap arcs ``u -> v`` (weight proc[u]).

        Returns ``None`` when the arcs contain a cycle.
        """
        n = self.n
        indeg = [len(self.pred[k]) for k in range(n)]
        for u in range(n):
            for v in extra_succ[u]:
                indeg[v] += 1
        start = list(self.release)
        stack = [k for k in range(n) if indeg[k] == 0]
        seen = 0
        proc = self.proc
        while stack:
            u = stack.pop()
            seen += 1
            su = start[u]
            for v, w in self.succ[u]:
                if su + w > start[v]:
                    start[v] = su + w
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
            e = su + proc[u]
            for v in extra_succ[u]:
                if e > start[v]:
                    start[v] = e
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
        if seen < n:
            return None
        return start

    def sequence_arcs(self, orders: list[list[int]]) -> list[list[int]]:
        extra = [[] for _ in range(self.n)]
        for seq in orders:
            for a, b in zip(seq, seq[1:]):
                extra[a].append(b)
        return extra

    def evaluate(self, orders: list[list[int]]) -> list[int] | None:
        return self.heads(self.sequence_arcs(orders))

    def objective(self, start: list[int]):
        best = self.constant
        for k in range(self.n):
            c = self.end_cost[k]
            if c != NEG_INF and start[k] + c > best:
                best = start[k] + c
        if best == NEG_INF:
            return 0
        return int(best)

    def to_schedule(self, start: list[int]) -> "ShopSchedule":
        starts = tuple(tuple(start[k] for k in ids) for ids in self.ids)
        return ShopSchedule(self.inst, starts)

    def orders_from_starts(self, start: list[int]) -> list[list[int]]:
        return [sorted(ks, key=lambda k: (start[k], self.proc[k] > 0, self.job[k], self.pos[k])) for ks in self.by_machine]

    # -- bounds -------------------------------------------------------------

    def tails(self, extra_succ: list[list[int]]) -> list[float]:
        """Longest path from an op's start to the objective (including its own work)."""
        q = list(self.end_cost)
        for u in self._reverse_topo(extra_succ):
            best = q[u]
            for v, w in self.succ[u]:
                if q[v] != NEG_INF and w + q[v] > best:
                    best = w + q[v]
            for v in extra_succ[u]:
                if q[v] != NEG_INF and self.proc[u] + q[v] > best:
                    best = self.proc[u] + q[v]
            q[u] = best
        return q

    def _reverse_topo(self, extra_succ):
        n = self.n
        indeg = [len(self.pred[k]) for k in range(n)]
        for u in range(n):
            for v in extra_succ[u]:
                indeg[v] += 1
        stack = [k for k in range(n) if indeg[k] == 0]
        topo = []
        while stack:
            u = stack.pop()
            topo.append(u)
            for v, _ in self.succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
            for v in extra_succ[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
        return reversed(topo)

    def machine_bound(self, head: list[int], q: list[float]) -> float:
        best = NEG_INF
        for ks in self.by_machine:
            if not ks:
                continue
            tail_min = min((q[k] - self.proc[k] for k in ks), default=NEG_INF)
            if tail_min == NEG_INF:
                continue
            b = min(head[k] for k in ks) + sum(self.proc[k] for k in ks) + tail_min
            best = max(best, b)
        return best


@dataclass(frozen=True)
class ShopSchedule:
    """Start times indexed ``starts[job][position]``."""

    instance: JobShopInstance
    starts: tuple[tuple[int, ...], ...]

    def start(self, job: int, position: int) -> int:
        return self.starts[job][position]

    def end(self, job: int, position: int) -> int:
        return self.starts[job][position] + self.instance.jobs[job].operations[position].processing

    def completion(self, job: int) -> int:
        j = self.instance.jobs[job]
        if j.operations:
            return self.end(job, len(j.operations) - 1) + j.tail
        rel = j.release
        if j.predecessor is not None:
            rel = max(rel, self.completion(j.predecessor))
        return rel + j.tail

    @cached_property
    def objective_value(self) -> int:
        return objective(self)

    def machine_sequences(self) -> list[list[tuple[int, int]]]:
        """Per machine, ``(job, position)`` pairs in execution order."""
        seqs = [[] for _ in range(self.instance.machines)]
        for op in self.instance.operations():
            seqs[op.machine].append((op.job, op.position))
        for seq in seqs:
            seq.sort(key=lambda jp: (self.start(*jp), self.end(*jp) > self.start(*jp), jp))
        return seqs


def objective(s: ShopSchedule, kind: str | None = None) -> int:
    """Makespan (default for makespan instances) or signed max lateness."""
    inst = s.instance
    kind = kind or inst.objective
    if not inst.jobs:
        return 0
    if kind == MAKESPAN:
        return max(s.completion(j) for j in range(len(inst.jobs)))
    if kind == MAX_LATENESS:
        if any(job.abs_deadline is None for job in inst.jobs):
            raise ObjectiveError("max lateness needs an absolute deadline on every job")
        return max(s.completion(j) - job.abs_deadline for j, job in enumerate(inst.jobs))
    raise ObjectiveError(f"unknown objective {kind!r}")


def check_schedule(s: ShopSchedule) -> list[str]:
    """Return every violated feasibility condition (empty when feasible)."""
    inst = s.instance
    out = []
    for j, job in enumerate(inst.jobs):
        if len(s.starts[j]) != len(job.operations):
            out.append(f"job {j}: {len(s.starts[j])} starts for {len(job.operations)} operations")
            continue
        if not job.operations:
            continue
        rel = job.release
        if job.predecessor is not None:
            rel = max(rel, s.completion(job.predecessor))
        if s.start(j, 0) < rel:
            out.append(f"job {j} starts at {s.start(j, 0)} before its release {rel}")
        for p in range(1, len(job.operations)):
            need = s.end(j, p - 1) + job.operations[p].min_gap_after_prev
            if s.start(j, p) < need:
                out.append(f"op ({j},{p}) starts at {s.start(j, p)} before chain bound {need}")
    for seq in s.machine_sequences():
        for a, b in zip(seq, seq[1:]):
            if s.start(*b) < s.end(*a):
                out.append(f"ops {a} and {b} overlap on a machine")
    return out


def lower_bound(inst: JobShopInstance) -> int:
    """Max of the job-chain bound and the per-machine workload bound."""
    flat = _Flat(inst)
    if flat.n == 0:
        return 0 if flat.constant == NEG_INF else int(flat.constant)
    none = [[] for _ in range(flat.n)]
    head = flat.heads(none)
    q = flat.tails(none)
    lb = max(flat.objective(head), flat.machine_bound(head, q))
    return int(lb)


# -- dispatch ------------------------------------------------------------------

def solve_dispatch(inst: JobShopInstance, rule: str = MWR, rng_seed: int = 0) -> ShopSchedule:
    """Giffler-Thompson active schedule with a priority rule.

    Ties are broken by ``(key, job, position)``; ``rng_seed`` only matters
    for the ``random`` rule.
    """
    if rule not in RULES:
        raise ValueError(f"unknown dispatch rule {rule!r}")
    flat = _Flat(inst)
    rng = random.Random(rng_seed)
    jobs = inst.jobs
    nxt = [0] * len(jobs)
    ready = [flat.release[ids[0]] if ids else 0 for ids in flat.ids]
    done: dict[int, int] = {}
    for j, ids in enumerate(flat.ids):
        if not ids:
            done[j] = flat._empty_done(j)
    mfree = [0] * inst.machines
    start = [0] * flat.n
    left = flat.n
    machine, proc = flat.machine, flat.proc
    # next operation and earliest release of every job that still has work;
    # jobs whose predecessor job has not finished wait in ``blocked``
    head: dict[int, tuple[int, int]] = {}
    blocked: dict[int, list[int]] = {}

    def admit(j):
        p = jobs[j].predecessor
        if p is not None and p not in done:
            blocked.setdefault(p, []).append(j)
            return
        r = ready[j]
        if p is not None and flat.last[p] is not None:
            r = max(r, done[p])
        head[j] = (flat.ids[j][0], r)

    def finish(j):
        for w in blocked.pop(j, ()):
            admit(w)

    for j, ids in enumerate(flat.ids):
        if ids:
            admit(j)
    for j in list(done):
        finish(j)
    while left:
        cands = []
        for j in sorted(head):
            k, r = head[j]
            est = max(r, mfree[machine[k]])
            cands.append((est + proc[k], est, j, k, r))
        ect, _, _, k0, _ = min(cands)
        m = flat.machine[k0]
        conflict = [c for c in cands if flat.machine[c[3]] == m and (c[1] < ect or c[3] == k0)]

        def key(c):
            _, est, j, k, r = c
            if rule == EDF:
                d = jobs[j].abs_deadline
                pk = d if d is not None else float("inf")
            elif rule == MWR:
                pk = -flat.remaining[k]
            elif rule == LPT:
                pk = -flat.proc[k]
            elif rule == FIFO:
                pk = r
            else:
                pk = rng.random()
            return (pk, j, flat.pos[k])

        _, est, j, k, _ = min(conflict, key=key)
        start[k] = est
        end = est + proc[k]
        mfree[m] = max(mfree[m], end)
        nxt[j] += 1
        left -= 1
        if nxt[j] < len(flat.ids[j]):
            k2 = flat.ids[j][nxt[j]]
            ready[j] = end + jobs[j].operations[flat.pos[k2]].min_gap_after_prev
            head[j] = (k2, ready[j])
        else:
            del head[j]
            done[j] = end + jobs[j].tail
            finish(j)
    # the active schedule can be compacted; re-evaluate the machine sequences
    orders = flat.orders_from_starts(start)
    tight = flat.evaluate(orders)
    return flat.to_schedule(tight if tight is not None else start)


# -- local search ---------------------------------------------------------------

def _critical_moves(flat: _Flat, start: list[int], orders: list[list[int]]):
    """Adjacent machine pairs on the path that defines the objective."""
    best, k = NEG_INF, None
    for v in range(flat.n):
        c = flat.end_cost[v]
        if c != NEG_INF and start[v] + c > best:
            best, k = start[v] + c, v
    if k is None:
        return []
    mprev = {}
    for seq in orders:
        for a, b in zip(seq, seq[1:]):
            mprev[b] = a
    moves = []
    while k is not None:
        a = mprev.get(k)
        if a is not None and start[a] + flat.proc[a] == start[k]:
            moves.append((a, k))
            k = a
            continue
        nxt = None
        for u, w in flat.pred[k]:
            if start[u] + w == start[k]:
                nxt = u
                break
        k = nxt
    return moves


def _swap(orders: list[list[int]], m: int, a: int, b: int) -> list[list[int]]:
    seq = list(orders[m])
    i = seq.index(a)
    seq[i], seq[i + 1] = seq[i + 1], seq[i]
    out = list(orders)
    out[m] = seq
    return out


def improve_local_search(s: ShopSchedule, budget: int = 200, rng_seed: int = 0, tenure: int = 8) -> ShopSchedule:
    """Tabu search over swaps of adjacent critical operations.

    Stops after ``budget`` iterations, when no admissible move exists, or
    when the instance lower bound is reached.  Never returns a schedule
    worse than ``s``.
    """
    inst = s.instance
    flat = _Flat(inst)
    if flat.n == 0:
        return s
    rng = random.Random(rng_seed)
    start = [s.starts[flat.job[k]][flat.pos[k]] for k in range(flat.n)]
    orders = flat.orders_from_starts(start)
    cur = flat.evaluate(orders)
    cur_obj = flat.objective(cur)
    best_obj, best_start = cur_obj, cur
    if cur_obj > s.objective_value:  # pragma: no cover - evaluation is semi-active
        best_obj, best_start = s.objective_value, start
    lb = lower_bound(inst)
    tabu: dict[tuple[int, int], int] = {}
    for it in range(budget):
        if best_obj <= lb:
            break
        moves = _critical_moves(flat, cur, orders)
        rng.shuffle(moves)
        chosen = None
        for a, b in moves:
            cand_orders = _swap(orders, flat.machine[a], a, b)
            st = flat.evaluate(cand_orders)
            if st is None:
                continue
            obj = flat.objective(st)
            if tabu.get((a, b), -1) >= it and obj >= best_obj:
                continue
            if chosen is None or obj < chosen[0]:
                chosen = (obj, cand_orders, st, (a, b))
        if chosen is None:
            break
        cur_obj, orders, cur, (a, b) = chosen
        # forbid restoring a before b for a while
        tabu[(b, a)] = it + tenure
        if cur_obj < best_obj:
            best_obj, best_start = cur_obj, cur
    return flat.to_schedule(best_start)


def solve_heuristic(inst: JobShopInstance, budget: int = 200, rng_seed: int = 0, rules=(MWR, EDF, LPT, FIFO)) -> ShopSchedule:
    """Best dispatch rule followed by local search."""
    best = None
    for rule in rules:
        cand = solve_dispatch(inst, rule, rng_seed)
        if best is None or cand.objective_value < best.objective_value:
            best = cand
    if budget > 0:
        best = improve_local_search(best, budget, rng_seed)
    return best


# -- exact branch and bound -----------------------------------------------------------

class DisjunctiveGraph:
    """Conjunctive arcs plus per-machine disjunctive pairs with orientations.

    ``orientation[(u, v)]`` with ``u < v`` is ``True`` for ``u -> v``,
    ``False`` for ``v -> u``; missing pairs are unset.
    """

    def __init__(self, inst: JobShopInstance):
        self.flat = _Flat(inst)
        self.pairs: list[tuple[int, int]] = []
        self.orientation: dict[tuple[int, int], bool] = {}
        flat = self.flat
        for ks in flat.by_machine:
            for u, v in itertools.combinations(sorted(ks), 2):
                self.pairs.append((u, v))
                if flat.job[u] == flat.job[v]:
                    # same job: chain order fixes the orientation
                    self.orientation[(u, v)] = flat.pos[u] < flat.pos[v]

    def arcs(self, orientation=None) -> list[list[int]]:
        orientation = self.orientation if orientation is None else orientation
        extra = [[] for _ in range(self.flat.n)]
        for (u, v), fwd in orientation.items():
            if fwd:
                extra[u].append(v)
            else:
                extra[v].append(u)
        return extra

    def heads(self, orientation=None) -> list[int] | None:
        return self.flat.heads(self.arcs(orientation))

    def to_dot(self) -> str:
        flat = self.flat
        lines = ["digraph disjunctive {"]
        for k in range(flat.n):
            lines.append(f'  o{k} [label="J{flat.job[k]}.{flat.pos[k]} m{flat.machine[k]} p{flat.proc[k]}"];')
        for u in range(flat.n):
            for v, w in flat.succ[u]:
                lines.append(f'  o{u} -> o{v} [label="{w}"];')
        for (u, v) in self.pairs:
            o = self.orientation.get((u, v))
            if o is None:
                lines.append(f"  o{u} -> o{v} [dir=none, style=dashed];")
            elif o:
                lines.append(f"  o{u} -> o{v} [style=dashed];")
            else:
                lines.append(f"  o{v} -> o{u} [style=dashed];")
        lines.append("}")
        return "\n".join(lines)


@dataclass(frozen=True)
class ExactResult:
    status: str
    schedule: ShopSchedule | None
    nodes: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def solve_exact(
    inst: JobShopInstance,
    max_nodes: int = 10**6,
    max_time: float = 60.0,
    incumbent: ShopSchedule | None = None,
) -> ExactResult:
    """Depth-first branch and bound over disjunctive-pair orientations."""
    dg = DisjunctiveGraph(inst)
    flat = dg.flat
    if incumbent is None:
        incumbent = solve_heuristic(inst, budget=50)
    best = incumbent
    best_obj = best.objective_value
    if flat.n == 0:
        return ExactResult(OPTIMAL, best, 0)
    deadline = time.monotonic() + max_time
    nodes = 0
    stack = [dict(dg.orientation)]
    exhausted = True
    proc = flat.proc
    while stack:
        if nodes >= max_nodes or (nodes & 255 == 0 and time.monotonic() > deadline):
            exhausted = False
            break
        orient = stack.pop()
        nodes += 1
        extra = dg.arcs(orient)
        head = flat.heads(extra)
        if head is None:
            continue
        obj = flat.objective(head)
        if obj >= best_obj:
            continue
        q = flat.tails(extra)
        if flat.machine_bound(head, q) >= best_obj:
            continue
        conflict = None
        for (u, v) in dg.pairs:
            if (u, v) in orient:
                continue
            if head[u] < head[v] + proc[v] and head[v] < head[u] + proc[u]:
                key = (min(head[u], head[v]), u, v)
                if conflict is None or key < conflict[0]:
                    conflict = (key, u, v)
        if conflict is None:
            best_obj = obj
            best = flat.to_schedule(head)
            continue
        _, u, v = conflict
        children = []
        for fwd in (True, False):
            child = dict(orient)
            child[(u, v)] = fwd
            a, b = (u, v) if fwd else (v, u)
            # cheap child bound: b cannot start before a finishes
            est = max(head[b], head[a] + proc[a])
            children.append((est + (q[b] if q[b] != NEG_INF else 0), fwd, child))
        children.sort(key=lambda c: (c[0], not c[1]), reverse=True)
        for _, _, child in children:
            stack.append(child)
    status = OPTIMAL if exhausted else INCUMBENT
    return ExactResult(status, best, nodes)
