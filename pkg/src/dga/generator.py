"""Synthetic task sets: RandomFixedSum utilizations, UUniFast segment splits.

Real-valued draws are turned into integer time units with largest-remainder
rounding, so every total (set utilization, task WCET, critical-section
share) is exact in the resolution unit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Sequence

import numpy as np

from .taskmodel import FRAME, PERIODIC, Segment, Task, TaskSet

H_LOW = (0.05, 0.10)
H_MEDIUM = (0.10, 0.40)
H_HIGH = (0.40, 0.50)
DEFAULT_RESOLUTION = 10**9
MAX_RESPLITS = 8


class GenerationError(ValueError):
    pass


def _frac(x) -> Fraction:
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def _stafford(n: int, u: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform sample from {x in [0,1]^n : sum x = u} (Stafford's method)."""
    if n == 1:
        return np.array([u])
    k = min(int(math.floor(u)), n - 1)
    s1 = u - np.arange(k, k - n, -1, dtype=float)
    s2 = np.arange(k + n, k, -1, dtype=float) - u
    tiny = np.finfo(float).tiny
    huge = np.finfo(float).max
    w = np.zeros((n, n + 1))
    w[0, 1] = huge
    t = np.zeros((n - 1, n))
    for i in range(2, n + 1):
        tmp1 = w[i - 2, 1:i + 1] * s1[:i] / i
        tmp2 = w[i - 2, 0:i] * s2[n - i:n] / i
        w[i - 1, 1:i + 1] = tmp1 + tmp2
        tmp3 = w[i - 1, 1:i + 1] + tiny
        upper = s2[n - i:n] > s1[:i]
        t[i - 2, :i] = np.where(upper, tmp2 / tmp3, 1 - tmp1 / tmp3)
    x = np.zeros(n)
    rt = rng.uniform(size=n - 1)
    rs = rng.uniform(size=n - 1)
    s, j, sm, pr = u, k + 1, 0.0, 1.0
    for i in range(n - 1, 0, -1):
        e = 1 if rt[n - i - 1] <= t[i - 1, j - 1] else 0
        sx = rs[n - i - 1] ** (1.0 / i)
        sm += (1 - sx) * pr * s / (i + 1)
        pr *= sx
        x[n - i - 1] = sm + pr * e
        s -= e
        j -= e
    x[n - 1] = sm + pr * s
    return rng.permutation(x)


def random_fixed_sum(n: int, total, cap, rng: np.random.Generator) -> list[Fraction]:
    """``n`` values in ``(0, cap]`` summing exactly to ``total``."""
    total, cap = _frac(total), _frac(cap)
    if n < 1:
        raise GenerationError("need at least one value")
    if total <= 0:
        raise GenerationError("total must be positive")
    if total > n * cap:
        raise GenerationError(f"total {total} exceeds n * cap = {n * cap}")
    if total == n * cap:
        return [cap] * n
    while True:
        raw = _stafford(n, float(total / cap), rng)
        vals = [Fraction(float(v)) * cap for v in np.clip(raw, 0.0, 1.0)]
        # push the rounding residue onto an entry that can absorb it
        diff = total - sum(vals)
        if diff > 0:
            k = max(range(n), key=lambda i: cap - vals[i])
        else:
            k = max(range(n), key=lambda i: vals[i])
        vals[k] += diff
        if all(0 < v <= cap for v in vals):
            return vals


def uunifast_split(total, k: int, rng: np.random.Generator) -> list[Fraction]:
    """Split ``total`` into ``k`` positive parts with UUniFast."""
    total = _frac(total)
    if k < 1:
        raise GenerationError("k must be at least 1")
    while True:
        parts = []
        rest = float(total)
        for i in range(1, k):
            nxt = rest * rng.uniform() ** (1.0 / (k - i))
            parts.append(Fraction(rest - nxt))
            rest = nxt
        parts.append(total - sum(parts, Fraction(0)))
        if all(p > 0 for p in parts):
            return parts


def largest_remainder(shares: Sequence[Fraction], total: int) -> list[int]:
    """Integers proportional to ``shares`` summing exactly to ``total``."""
    s = sum(shares, Fraction(0))
    exact = [Fraction(total) * x / s for x in shares] if s else [Fraction(0)] * len(shares)
    out = [math.floor(x) for x in exact]
    short = total - sum(out)
    by_rem = sorted(range(len(shares)), key=lambda i: (-(exact[i] - out[i]), i))
    for i in by_rem[:short]:
        out[i] += 1
    return out


@dataclass(frozen=True)
class GenConfig:
    processors: int = 4
    resources: int = 4
    # total utilization as a fraction of the processor count
    utilization: float = 1.0
    tasks_per_set: int | None = None
    per_task_cap: float = 0.5
    h_range: tuple[float, float] = H_LOW
    accesses_range: tuple[int, int] = (2, 5)
    release_model: str = FRAME
    periods: tuple[int, ...] = (1, 2, 5, 10)
    resolution: int = DEFAULT_RESOLUTION
    seed: int = 0
    forced_accesses: int | None = field(default=None, repr=False)

    @property
    def n_tasks(self) -> int:
        return self.tasks_per_set if self.tasks_per_set is not None else 10 * self.processors

    def check(self):
        if self.processors < 1 or self.resources < 1:
            raise GenerationError("need at least one processor and one resource")
        if self.n_tasks < self.processors:
            raise GenerationError("tasks_per_set must be at least the processor count")
        lo, hi = self.h_range
        if not 0 < lo <= hi < 1:
            raise GenerationError(f"bad H range {self.h_range}")
        a, b = self.accesses_range
        if not 1 <= a <= b:
            raise GenerationError(f"bad access range {self.accesses_range}")
        if self.release_model not in (FRAME, PERIODIC):
            raise GenerationError(f"unknown release model {self.release_model!r}")

    def with_utilization(self, level) -> "GenConfig":
        return replace(self, utilization=level)


def _split_units(total: int, k: int, rng) -> list[int]:
    if total < k:
        raise GenerationError(f"cannot split {total} units into {k} positive segments")
    shares = None
    for _ in range(MAX_RESPLITS + 1):
        shares = uunifast_split(1, k, rng)
        parts = largest_remainder(shares, total)
        if all(p > 0 for p in parts):
            return parts
    # give every segment one unit and distribute the rest by the last draw
    return [1 + p for p in largest_remainder(shares, total - k)]


def generate_taskset(cfg: GenConfig) -> TaskSet:
    """One task set; utilizations and task structure use separate streams.

    Holding the seed fixed and changing only ``cfg.utilization`` keeps the
    periods, access counts, H fractions, resources and split shapes of every
    task, so only the size of the tasks changes.
    """
    cfg.check()
    n, M, R = cfg.n_tasks, cfg.processors, cfg.resolution
    util_rng = np.random.default_rng([cfg.seed, 0])
    struct_rng = np.random.default_rng([cfg.seed, 1])

    target_units = _frac(cfg.utilization) * M * R
    if target_units.denominator != 1:
        raise GenerationError(f"total utilization {cfg.utilization}*{M} is not a whole number of units")
    shares = random_fixed_sum(n, _frac(cfg.utilization) * M, cfg.per_task_cap, util_rng)
    u_units = largest_remainder(shares, int(target_units))

    tasks = []
    lo, hi = cfg.h_range
    for i in range(n):
        if cfg.release_model == FRAME:
            base = 1
        else:
            base = int(struct_rng.choice(cfg.periods))
        period = base * R
        wcet = u_units[i] * base
        ncs = cfg.forced_accesses or int(struct_rng.integers(cfg.accesses_range[0], cfg.accesses_range[1] + 1))
        h = struct_rng.uniform(lo, hi)
        res = [int(z) for z in struct_rng.integers(0, cfg.resources, size=ncs)]
        if wcet < 2 * ncs + 1:
            raise GenerationError(f"task {i}: {wcet} units cannot hold {2 * ncs + 1} segments")
        # at least one unit per critical section and per non-critical section
        cs_total = min(max(round(Fraction(h) * wcet), ncs), wcet - ncs - 1)
        cs_parts = _split_units(cs_total, ncs, struct_rng)
        nc_parts = _split_units(wcet - cs_total, ncs + 1, struct_rng)
        segs = []
        for c, z, nc in zip(cs_parts, res, nc_parts):
            segs.append(Segment(nc))
            segs.append(Segment(c, z))
        segs.append(Segment(nc_parts[-1]))
        tasks.append(Task(tuple(segs), period, period))
    return TaskSet(tuple(tasks), processors=M, resources=cfg.resources,
                   release_model=cfg.release_model, resolution_denominator=R)
