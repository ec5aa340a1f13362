"""Multiprocessor scheduling of tasks with multiple critical sections.

Critical sections are ordered offline by solving a job-shop instance; the
resulting dependency graph is then scheduled online (LIST-EDF or
partitioned EDF) and enforced at run time with serving tickets.
"""

from .depgraph import DependencyGraph, Vertex, build_from_schedule, critical_path_length, schedule_from_graph
from .generator import GenConfig, generate_taskset
from .harness import PipelineOptions, ResultRow, acceptance_sweep, run_pipeline
from .jobshop import JobShopInstance, reduce
from .scheduler import audit, check_schedulability, list_edf, p_edf
from .solver import solve_dispatch, solve_exact, solve_heuristic
from .taskmodel import CS, NC, Segment, Task, TaskSet, make_taskset, validate
from .tickets import build_ticket_table, get_cs_order

__version__ = "0.1.0"
