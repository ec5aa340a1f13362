"""
Checking the solver against brute force
=======================================

On tiny instances every quantity can be computed exhaustively.  The optimal
multiprocessor makespan sits between the lower bound and the list schedule,
which never exceeds twice that bound.
"""

from fractions import Fraction

from dga.depgraph import build_from_schedule, critical_path_length
from dga.jobshop import reduce_frame_based
from dga.oracle import load_corpus
from dga.scheduler import list_edf, makespan
from dga.solver import solve_exact

print(f"{'#':>3} {'M':>2} {'work/M':>7} {'len(G)':>6} {'optimum':>7} {'LIST-EDF':>8}")
for n, (ts, rec) in enumerate(load_corpus()[:15]):
    res = solve_exact(reduce_frame_based(ts))
    g = build_from_schedule(ts, res.schedule)
    work = Fraction(ts.total_wcet, ts.processors)
    ls = makespan(list_edf(ts, g, mode="P"))
    lb = max(work, critical_path_length(g))
    assert lb <= rec["oracle_makespan"] <= ls <= 2 * lb
    print(f"{n:3d} {ts.processors:2d} {float(work):7.2f} {critical_path_length(g):6d} "
          f"{rec['oracle_makespan']:7d} {ls:8d}")
