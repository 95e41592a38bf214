"""Command-line interface: generate workloads, run simulations, aggregate and benchmark."""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .core import LatencyModel, ProcessorConfig, Scheduler
from .greedy import CornerGreedyScheduler
from .ilp import IlpScheduler
from .report import (BenchRow, RunRecord, bench_csv, bench_text, read_records, summarize, summary_csv,
                     summary_text, write_records)
from .sim import SimConfig, simulate
from .workload import CLASS_NAMES, Workload, generate_instances


class CliError(Exception):
    pass


def parse_chip(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        W, H = int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"chip must look like 20x20, got {text!r}") from None
    if W < 1 or H < 1:
        raise argparse.ArgumentTypeError("chip dimensions must be positive")
    return W, H


def parse_int_list(text: str) -> list[int]:
    text = text.strip()
    if not text:
        return []
    try:
        vals = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError("batch sizes must be >= 1")
    return vals


def _latency(text: str) -> str:
    try:
        LatencyModel.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None
    return text


@dataclass(frozen=True)
class RunSpec:
    """Everything a worker process needs to run one simulation."""

    workload: str
    scheduler: str
    defrag: bool
    chip: tuple[int, int]
    code_distance: int
    code_cycle_us: str
    B: int
    I: int
    latency: str
    ilp_time_limit_ms: float
    ilp_node_limit: int | None
    external_solver: str | None
    relocation_cost_steps: int
    seed: int | None
    max_cycles: int | None
    validate: bool
    out_dir: str | None


def make_scheduler(name: str, time_limit_ms: float | None = 2000, node_limit: int | None = None,
                   external_solver: str | None = None) -> Scheduler:
    if name == "cg":
        return CornerGreedyScheduler()
    if name == "ilp":
        return IlpScheduler(time_limit_ms=time_limit_ms, node_limit=node_limit, external_solver=external_solver)
    raise CliError(f"unknown scheduler {name!r}; expected cg or ilp")


def _processor(spec) -> ProcessorConfig:
    return ProcessorConfig(spec.chip[0], spec.chip[1], Fraction(spec.code_cycle_us), spec.code_distance)


def execute(spec: RunSpec) -> RunRecord:
    wl = Workload.load(spec.workload)
    config = SimConfig(
        processor=_processor(spec),
        B=spec.B,
        I=spec.I,
        defrag=spec.defrag,
        scheduler=make_scheduler(spec.scheduler, spec.ilp_time_limit_ms, spec.ilp_node_limit, spec.external_solver),
        latency=LatencyModel.parse(spec.latency),
        seed=spec.seed,
        max_cycles=spec.max_cycles,
        validate_every_commit=spec.validate,
        relocation_cost_steps=spec.relocation_cost_steps,
    )
    res = simulate(config, wl.requests)
    m = res.report
    rec = RunRecord(
        cls=wl.cls or "", seed=wl.seed if wl.seed is not None else spec.seed, scheduler=spec.scheduler,
        defrag=spec.defrag, B=spec.B, n_jobs=m.n_jobs, makespan=m.makespan,
        packing_makespan=m.packing_makespan, sum_l=m.sum_l, speedup=float(m.speedup),
        sched_mean_us=m.sched_mean_us, sched_min_us=m.sched_min_us, sched_max_us=m.sched_max_us,
        sched_std_us=m.sched_std_us, stall_steps=m.stall_steps, defrag_count=m.defrag_count,
        cycles=m.cycles, latency=spec.latency, workload=Path(spec.workload).name,
    )
    if spec.out_dir:
        out = Path(spec.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        stem = f"{Path(spec.workload).stem}.{spec.scheduler}{'.wd' if spec.defrag else ''}"
        metrics = m.to_dict() | {"speedup_exact": f"{m.speedup.numerator}/{m.speedup.denominator}",
                                 "batch_us": m.batch_us}
        (out / f"{stem}.metrics.json").write_text(json.dumps(metrics, indent=1))
        res.state.dump(out / f"{stem}.ledger.json", wall_makespan=m.makespan,
                       stalls=[{"at": s.at, "steps": s.steps} for s in res.stalls])
        with open(out / f"{stem}.defrag.jsonl", "w") as fh:
            for ev in res.defrags:
                fh.write(json.dumps(ev.to_json()) + "\n")
    return rec


def _map(fn, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args) -> int:
    if args.cls not in CLASS_NAMES:
        raise CliError(f"unknown class {args.cls!r}; expected one of {', '.join(CLASS_NAMES)}")
    if args.n < 0 or args.instances < 0:
        raise CliError("--n and --instances must be non-negative")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(f"cannot create {out}: {e}") from None
    for k, wl in enumerate(generate_instances(args.cls, args.n, args.instances, args.seed)):
        path = out / f"{args.cls}_{k:03d}.json"
        try:
            wl.save(path)
        except OSError as e:
            raise CliError(f"cannot write {path}: {e}") from None
        print(path)
    return 0


def _spec(args, workload: str, scheduler: str, defrag: bool, B: int, latency: str) -> RunSpec:
    return RunSpec(
        workload=workload, scheduler=scheduler, defrag=defrag, chip=args.chip,
        code_distance=args.code_distance, code_cycle_us=args.code_cycle_us, B=B, I=args.defrag_interval,
        latency=latency, ilp_time_limit_ms=args.ilp_time_limit_ms, ilp_node_limit=args.ilp_node_limit,
        external_solver=args.external_solver, relocation_cost_steps=args.relocation_cost_steps,
        seed=args.seed, max_cycles=args.max_cycles, validate=getattr(args, "validate", False),
        out_dir=getattr(args, "out_dir", None),
    )


def cmd_run(args) -> int:
    specs = [_spec(args, w, args.scheduler, args.defrag, args.batch, args.latency) for w in args.workloads]
    records = _map(execute, specs, args.jobs)
    if args.csv:
        path = Path(args.csv)
        new = not path.exists() or path.stat().st_size == 0
        with open(path, "a", newline="") as fh:
            write_records(records, fh, header=new)
    else:
        write_records(records, sys.stdout)
    return 0


def cmd_report(args) -> int:
    records = read_records(args.csv_files)
    if not records:
        raise CliError("no run records found")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        summary = summarize(records)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    text = summary_text(summary)
    print(text, end="")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.csv").write_text(summary_csv(summary))
        (out / "summary.txt").write_text(text)
        if args.plots:
            from .plotting import improvement_figure, speedup_figure

            speedup_figure(summary, out / "speedup.png")
            if summary.improvement:
                improvement_figure(summary, out / "defrag_improvement.png")
    return 0


def cmd_bench(args) -> int:
    rows: list[BenchRow] = []
    wls = generate_instances(args.cls, args.n, args.instances, args.seed) if args.batches else []
    for sched in args.schedulers:
        for B in args.batches:
            samples: list[float] = []
            for wl in wls:
                config = SimConfig(
                    processor=_processor(args), B=B, I=args.defrag_interval, defrag=args.defrag,
                    scheduler=make_scheduler(sched, args.ilp_time_limit_ms, args.ilp_node_limit,
                                             args.external_solver),
                    latency=LatencyModel.measured(),
                    max_cycles=args.ilp_max_cycles if sched == "ilp" else args.max_cycles,
                )
                samples += simulate(config, wl.requests).report.batch_us
            rows.append(BenchRow(sched, B, samples))
            print(f"{sched} B={B}: {len(samples)} batches", file=sys.stderr)
    text = bench_text(rows)
    print(text, end="")
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench.csv").write_text(bench_csv(rows))
        (out / "bench.txt").write_text(text)
        if args.plots and rows:
            from .plotting import bench_figure

            bench_figure(rows, out / "bench.png")
    return 0


# ---------------------------------------------------------------------------
# argument parsing


def _add_processor_flags(p: argparse.ArgumentParser, ilp_limit: float = 2000) -> None:
    g = p.add_argument_group("processor and scheduler")
    g.add_argument("--chip", type=parse_chip, default=(20, 20), metavar="WxH", help="chip size (default 20x20)")
    g.add_argument("--code-distance", type=int, default=31, help="code distance d (default 31)")
    g.add_argument("--code-cycle-us", default="1", help="code cycle in µs (default 1)")
    g.add_argument("--defrag", dest="defrag", action="store_true", default=True,
                   help="enable defragmentation (default)")
    g.add_argument("--no-defrag", dest="defrag", action="store_false", help="disable defragmentation")
    g.add_argument("--defrag-interval", type=int, default=20_000, metavar="STEPS",
                   help="minimum finish-time gap that triggers a defrag (default 20000)")
    g.add_argument("--ilp-time-limit-ms", type=float, default=ilp_limit,
                   help=f"ILP time limit per batch (default {ilp_limit:g})")
    g.add_argument("--ilp-node-limit", type=int, default=None, help="optional ILP node budget per batch")
    g.add_argument("--external-solver", default=None, metavar="CMD",
                   help="solve the ILP through a command template using {lp}, {sol}, {time_limit_s}")
    g.add_argument("--relocation-cost-steps", type=int, default=0,
                   help="steps the machine pauses for each defrag relocation (default 0)")
    g.add_argument("--seed", type=int, default=0, help="RNG seed")
    g.add_argument("--max-cycles", type=int, default=None, help="stop after this many scheduling cycles")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qmpsched", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write random workload files")
    p.add_argument("--class", dest="cls", required=True, help="job class A..I")
    p.add_argument("--n", type=int, default=300, help="jobs per instance (default 300)")
    p.add_argument("--instances", type=int, default=50, help="number of instances (default 50)")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(fn=cmd_generate)

    p = sub.add_parser("run", help="simulate workloads and emit one CSV row per run")
    p.add_argument("workloads", nargs="+", help="workload JSON files")
    p.add_argument("--scheduler", choices=("cg", "ilp"), default="cg")
    p.add_argument("--batch", type=int, default=5, help="batch size B (default 5)")
    p.add_argument("--latency", type=_latency, default="measured",
                   help="measured, or synthetic:<us per job>[:<us per reserved job>]")
    p.add_argument("--csv", default=None, help="append rows to this file instead of stdout")
    p.add_argument("--out-dir", default=None, help="write metrics JSON, ledger JSON and defrag log per run")
    p.add_argument("--validate", action="store_true", help="full validation after every commit")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    _add_processor_flags(p)
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("report", help="aggregate run CSVs into tables and figures")
    p.add_argument("csv_files", nargs="+")
    p.add_argument("--out-dir", default=None, help="write summary.csv, summary.txt and figures here")
    p.add_argument("--no-plots", dest="plots", action="store_false", help="skip figures")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("bench", help="per-batch scheduling time in measured mode")
    p.add_argument("--class", dest="cls", default="G", choices=CLASS_NAMES)
    p.add_argument("--batches", type=parse_int_list, default=[5, 10, 15, 20], help="comma-separated batch sizes")
    p.add_argument("--schedulers", type=lambda s: [x for x in s.split(",") if x], default=["cg", "ilp"])
    p.add_argument("--n", type=int, default=300)
    p.add_argument("--instances", type=int, default=1)
    p.add_argument("--ilp-max-cycles", type=int, default=2, help="scheduling cycles per ILP run (default 2)")
    p.add_argument("--out-dir", default=None, help="write bench.csv, bench.txt and bench.png here")
    p.add_argument("--no-plots", dest="plots", action="store_false", help="skip the figure")
    _add_processor_flags(p, ilp_limit=30_000)
    p.set_defaults(fn=cmd_bench)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (CliError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
