"""Command line entry point (``dga`` or ``python -m dga``).

Exit codes: 0 on success, 2 when the input task set fails validation,
3 when a pipeline stage fails.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import fields
from pathlib import Path

from . import depgraph, jobshop, oracle, taskmodel, tickets
from .generator import GenConfig, GenerationError, generate_taskset
from .harness import DEFAULT_LEVELS, PipelineError, PipelineOptions, acceptance_sweep, build_graph, run_pipeline

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_STAGE = 3


class _Invalid(Exception):
    pass


def _load_config(path) -> GenConfig:
    if path is None:
        return GenConfig()
    doc = json.loads(Path(path).read_text())
    known = {f.name for f in fields(GenConfig)}
    unknown = set(doc) - known
    if unknown:
        raise _Invalid(f"unknown config keys: {sorted(unknown)}")
    for key in ("h_range", "accesses_range", "periods"):
        if key in doc:
            doc[key] = tuple(doc[key])
    return GenConfig(**doc)


def _load_taskset(path) -> taskmodel.TaskSet:
    try:
        ts = taskmodel.loads(Path(path).read_text())
    except (taskmodel.TaskSetFormatError, ValueError, KeyError, TypeError) as exc:
        raise _Invalid(f"{path}: {exc}") from exc
    problems = taskmodel.validate(ts)
    if problems:
        raise _Invalid("\n".join(str(p) for p in problems))
    return ts


def _emit(text: str, out, name: str):
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
        return
    dest = Path(out)
    if dest.suffix == "":
        dest.mkdir(parents=True, exist_ok=True)
        dest = dest / name
    else:
        dest.parent.mkdir(parents=True, exist_ok=True)
    dest.write_text(text if text.endswith("\n") else text + "\n")
    print(dest)


def _options(args) -> PipelineOptions:
    kw = {"solver": args.solver, "seed": args.seed or 0}
    for name in ("reduction", "budget", "rule", "max_time"):
        value = getattr(args, name, None)
        if value is not None:
            kw[name] = value
    if getattr(args, "policy", None):
        kw["policy"] = args.policy
    if getattr(args, "cs_mode", None):
        kw["cs_mode"] = args.cs_mode
    return PipelineOptions(**kw)


def cmd_generate(args):
    cfg = _load_config(args.config)
    seed = cfg.seed if args.seed is None else args.seed
    name = Path(args.config).stem if args.config else "default"
    for r in range(args.count):
        c = GenConfig(**{**{f.name: getattr(cfg, f.name) for f in fields(GenConfig)}, "seed": seed + r})
        if args.level is not None:
            c = c.with_utilization(args.level / 100)
        ts = generate_taskset(c)
        _emit(taskmodel.dumps(ts, indent=1), args.out, f"taskset_{name}_seed{seed + r}.json")


def cmd_validate(args):
    ts = taskmodel.loads(Path(args.taskset).read_text())
    problems = taskmodel.validate(ts)
    for p in problems:
        print(p)
    if problems:
        return EXIT_INVALID
    pattern = taskmodel.classify_access_pattern(ts)
    print(f"ok: {len(ts.tasks)} tasks, {ts.processors} processors, {ts.resources} resources, "
          f"{'flow-shop' if pattern.flow_shop else 'job-shop'} access pattern")
    return EXIT_OK


def cmd_reduce(args):
    ts = _load_taskset(args.taskset)
    inst = jobshop.reduce(ts, args.reduction or "auto")
    _emit(jobshop.dumps(inst, indent=1), args.out, "instance.json")


def cmd_solve(args):
    ts = _load_taskset(args.taskset)
    stage = build_graph(ts, _options(args))
    doc = {
        "status": stage.status,
        "objective": stage.shop.objective_value,
        "objective_kind": stage.instance.objective,
        "starts": [list(s) for s in stage.shop.starts],
        "machine_sequences": stage.shop.machine_sequences(),
    }
    _emit(json.dumps(doc, indent=1), args.out, "schedule.json")


def cmd_graph(args):
    ts = _load_taskset(args.taskset)
    stage = build_graph(ts, _options(args))
    _emit(depgraph.to_dot(stage.graph), args.out, "graph.dot")


def cmd_schedule(args):
    ts = _load_taskset(args.taskset)
    row = run_pipeline(ts, _options(args))
    print(json.dumps(row.summary()), file=sys.stderr)
    _emit(row.schedule.to_csv(), args.out, "trace.csv")


def cmd_tickets(args):
    ts = _load_taskset(args.taskset)
    stage = build_graph(ts, _options(args))
    _emit(tickets.build_ticket_table(ts, stage.graph).dumps(indent=1), args.out, "tickets.json")


def cmd_sweep(args):
    cfg = _load_config(args.config)
    levels = DEFAULT_LEVELS if args.levels is None else tuple(int(x) for x in args.levels.split(","))
    variants = tuple(args.variants.split(",")) if args.variants else (
        f"JS-{args.policy or 'LEDF'}-{args.cs_mode or 'P'}",)
    res = acceptance_sweep(cfg, levels, args.replicates, variants, args.seed or 0,
                           options=_options(args), jobs=args.jobs, audit=True)
    if args.out:
        print(res.write(args.out))
    else:
        sys.stdout.write(res.table_csv())


def cmd_oracle_corpus(args):
    seed = oracle.CORPUS_SEED if args.seed is None else args.seed
    corpus = oracle.build_corpus(args.count, seed)
    _emit(json.dumps(corpus, indent=1), args.out, "oracle_corpus.json")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dga", description="Dependency-graph scheduling of tasks with critical sections.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, taskset=True):
        if taskset:
            sp.add_argument("taskset", help="TaskSet JSON file")
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--out", default=None, help="output file or directory (default: stdout)")
        return sp

    def solving(sp):
        sp.add_argument("--solver", choices=("dispatch", "local", "exact"), default="local")
        sp.add_argument("--rule", default=None, help="dispatch rule: edf, mwr, lpt, fifo, random")
        sp.add_argument("--budget", type=int, default=None, help="local-search iterations")
        sp.add_argument("--max-time", dest="max_time", type=float, default=None, help="exact solver time limit (s)")
        sp.add_argument("--reduction", choices=("auto", "frame", "delays", "periodic"), default=None)
        return sp

    def policy(sp):
        sp.add_argument("--policy", choices=("LEDF", "PEDF"), default=None)
        sp.add_argument("--cs-mode", dest="cs_mode", choices=("P", "NP"), default=None)
        return sp

    g = common(sub.add_parser("generate", help="generate task sets"), taskset=False)
    g.add_argument("--config", default=None)
    g.add_argument("--count", type=int, default=1)
    g.add_argument("--level", type=int, default=None, help="utilization level in percent of M")
    g.set_defaults(func=cmd_generate)

    common(sub.add_parser("validate", help="check a task set")).set_defaults(func=cmd_validate)
    r = common(sub.add_parser("reduce", help="print the job-shop instance"))
    r.add_argument("--reduction", choices=("auto", "frame", "delays", "periodic"), default=None)
    r.set_defaults(func=cmd_reduce)
    solving(common(sub.add_parser("solve", help="solve the job-shop instance"))).set_defaults(func=cmd_solve)
    solving(common(sub.add_parser("graph", help="dependency graph as DOT"))).set_defaults(func=cmd_graph)
    policy(solving(common(sub.add_parser("schedule", help="simulate and write a trace CSV")))).set_defaults(
        func=cmd_schedule)
    solving(common(sub.add_parser("tickets", help="ticket table JSON"))).set_defaults(func=cmd_tickets)

    s = policy(solving(common(sub.add_parser("sweep", help="acceptance-ratio sweep"), taskset=False)))
    s.add_argument("--config", default=None)
    s.add_argument("--levels", default=None, help="comma-separated percentages (default 0,5,...,100)")
    s.add_argument("--replicates", type=int, default=100)
    s.add_argument("--variants", default=None, help="comma-separated, e.g. JS-LEDF-P,JS-PEDF-NP")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    o = common(sub.add_parser("oracle-corpus", help="regenerate the oracle corpus"), taskset=False)
    o.add_argument("--count", type=int, default=oracle.CORPUS_SIZE)
    o.set_defaults(func=cmd_oracle_corpus)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args) or EXIT_OK
    except _Invalid as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (taskmodel.TaskSetFormatError, GenerationError, json.JSONDecodeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except PipelineError as exc:
        print(f"stage error: {exc}", file=sys.stderr)
        return EXIT_STAGE
    except Exception as exc:  # noqa: BLE001 - any other failure is a stage failure
        print(f"stage error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
