"""Run records (one CSV row per simulation) and their aggregation."""

from __future__ import annotations

import csv
import io
import math
import statistics
import warnings
from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

# stable CSV schema of ``run`` output; ``report`` reads these back
RUN_FIELDS = (
    "class", "seed", "scheduler", "defrag", "B", "n_jobs", "makespan", "packing_makespan", "sum_l",
    "speedup", "sched_mean_us", "sched_min_us", "sched_max_us", "sched_std_us", "stall_steps",
    "defrag_count", "cycles", "latency", "workload",
)
_INT = {"seed", "B", "n_jobs", "makespan", "packing_makespan", "sum_l", "stall_steps", "defrag_count", "cycles"}
_FLOAT = {"speedup", "sched_mean_us", "sched_min_us", "sched_max_us", "sched_std_us"}


@dataclass
class RunRecord:
    cls: str
    seed: int | None
    scheduler: str
    defrag: bool
    B: int
    n_jobs: int
    makespan: int
    packing_makespan: int
    sum_l: int
    speedup: float
    sched_mean_us: float
    sched_min_us: float
    sched_max_us: float
    sched_std_us: float
    stall_steps: int
    defrag_count: int
    cycles: int
    latency: str = ""
    workload: str = ""

    @property
    def config(self) -> str:
        return f"{self.scheduler.upper()}{' w.d.' if self.defrag else ''}"

    def row(self) -> dict:
        d = {k: getattr(self, k) for k in RUN_FIELDS if k not in ("class", "defrag")}
        d["class"] = self.cls
        d["defrag"] = int(self.defrag)
        d["speedup"] = repr(float(self.speedup))
        return {k: d[k] for k in RUN_FIELDS}

    @classmethod
    def from_row(cls, row: dict) -> "RunRecord":
        kw = {}
        for k in RUN_FIELDS:
            v = row.get(k, "")
            if k in _INT:
                v = int(v) if v not in ("", None) else None
            elif k in _FLOAT:
                v = float(v)
            elif k == "defrag":
                v = str(v).strip().lower() in ("1", "true", "yes")
            kw["cls" if k == "class" else k] = v
        return cls(**kw)


def write_records(records: Iterable[RunRecord], fh, header: bool = True) -> None:
    w = csv.DictWriter(fh, fieldnames=RUN_FIELDS, lineterminator="\n")
    if header:
        w.writeheader()
    for r in records:
        w.writerow(r.row())


def records_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    write_records(records, buf)
    return buf.getvalue()


def read_records(paths: Sequence[str | Path]) -> list[RunRecord]:
    out = []
    for p in paths:
        with open(p, newline="") as fh:
            out.extend(RunRecord.from_row(row) for row in csv.DictReader(fh))
    return out


# ---------------------------------------------------------------------------
# aggregation


def geometric_mean(xs: Sequence[float]) -> float:
    if not xs:
        raise ValueError("geometric mean of an empty sequence")
    if any(x <= 0 for x in xs):
        raise ValueError("geometric mean needs positive values")
    return math.exp(sum(math.log(x) for x in xs) / len(xs))


@dataclass
class Summary:
    classes: list[str]
    configs: list[str]
    mean_speedup: dict[tuple[str, str], float]  # (config, class) -> mean
    runs: dict[tuple[str, str], int]
    geomean: dict[str, float]  # config -> geometric mean over classes
    improvement: dict[tuple[str, str], float]  # (scheduler, class) -> mean improvement %
    pairs: dict[tuple[str, str], int]


def _config_order(c: str) -> tuple:
    return ({"ILP": 0, "CG": 1}.get(c.split()[0], 2), c)


def summarize(records: Sequence[RunRecord]) -> Summary:
    groups: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in records:
        groups[(r.config, r.cls)].append(r.speedup)
    classes = sorted({r.cls for r in records})
    configs = sorted({r.config for r in records}, key=_config_order)
    mean = {k: statistics.fmean(v) for k, v in groups.items()}
    runs = {k: len(v) for k, v in groups.items()}
    geo = {}
    for cfg in configs:
        vals = [mean[(cfg, c)] for c in classes if (cfg, c) in mean]
        geo[cfg] = geometric_mean(vals)

    # defrag improvement, runs paired on (class, seed, scheduler)
    on: dict[tuple, RunRecord] = {}
    off: dict[tuple, RunRecord] = {}
    for r in records:
        key = (r.cls, r.seed, r.scheduler)
        (on if r.defrag else off)[key] = r
    both = {k[::2] for k in on} & {k[::2] for k in off}  # (class, scheduler) seen both ways
    imp: dict[tuple[str, str], list[float]] = defaultdict(list)
    for key in sorted(set(on) | set(off), key=str):
        if key not in on or key not in off:
            if key[::2] in both:
                warnings.warn(f"no defrag counterpart for class {key[0]} seed {key[1]} "
                              f"scheduler {key[2]}; pair skipped")
            continue
        imp[(key[2], key[0])].append(100.0 * (on[key].speedup / off[key].speedup - 1.0))
    improvement = {k: statistics.fmean(v) for k, v in imp.items()}
    pairs = {k: len(v) for k, v in imp.items()}
    return Summary(classes, configs, mean, runs, geo, improvement, pairs)


SUMMARY_FIELDS = ("table", "config", "class", "value", "runs")


def summary_rows(s: Summary) -> list[dict]:
    rows = []
    for cfg in s.configs:
        for c in s.classes:
            if (cfg, c) in s.mean_speedup:
                rows.append({"table": "speedup", "config": cfg, "class": c,
                             "value": f"{s.mean_speedup[(cfg, c)]:.6f}", "runs": s.runs[(cfg, c)]})
        rows.append({"table": "geomean", "config": cfg, "class": "all",
                     "value": f"{s.geomean[cfg]:.6f}", "runs": ""})
    for (sched, c), v in sorted(s.improvement.items()):
        rows.append({"table": "defrag_improvement_pct", "config": sched.upper(), "class": c,
                     "value": f"{v:.6f}", "runs": s.pairs[(sched, c)]})
    return rows


def summary_csv(s: Summary) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(summary_rows(s))
    return buf.getvalue()


def _table(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *rows)]
    fmt = "  ".join(f"{{:<{w}}}" if k == 0 else f"{{:>{w}}}" for k, w in enumerate(widths))
    lines = [fmt.format(*header), fmt.format(*["-" * w for w in widths])]
    lines += [fmt.format(*r) for r in rows]
    return "\n".join(lines)


def summary_text(s: Summary) -> str:
    parts = []
    header = ["class", *s.configs]
    rows = [[c, *[f"{s.mean_speedup[(cfg, c)]:.3f}" if (cfg, c) in s.mean_speedup else "-"
                  for cfg in s.configs]] for c in s.classes]
    rows.append(["geomean", *[f"{s.geomean[cfg]:.3f}" for cfg in s.configs]])
    parts.append("Mean speedup (sum of l / makespan)\n" + _table(header, rows))
    if s.improvement:
        scheds = sorted({k[0] for k in s.improvement})
        header = ["class", *[x.upper() for x in scheds]]
        rows = [[c, *[f"{s.improvement[(x, c)]:+.2f}" if (x, c) in s.improvement else "-" for x in scheds]]
                for c in s.classes]
        parts.append("Defrag improvement (%), paired by class, seed and scheduler\n" + _table(header, rows))
    return "\n\n".join(parts) + "\n"


# ---------------------------------------------------------------------------
# responsiveness benchmark


BENCH_FIELDS = ("scheduler", "B", "batches", "mean_us", "min_us", "max_us", "std_us")


@dataclass
class BenchRow:
    scheduler: str
    B: int
    samples: list[float]

    def row(self) -> dict:
        xs = self.samples
        return {
            "scheduler": self.scheduler,
            "B": self.B,
            "batches": len(xs),
            "mean_us": f"{statistics.fmean(xs):.1f}" if xs else "",
            "min_us": f"{min(xs):.1f}" if xs else "",
            "max_us": f"{max(xs):.1f}" if xs else "",
            "std_us": f"{statistics.pstdev(xs):.1f}" if len(xs) > 1 else ("0.0" if xs else ""),
        }


def bench_csv(rows: Sequence[BenchRow]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    w.writeheader()
    w.writerows(r.row() for r in rows)
    return buf.getvalue()


def bench_text(rows: Sequence[BenchRow]) -> str:
    data = [r.row() for r in rows]
    return _table(list(BENCH_FIELDS), [[str(d[k]) for k in BENCH_FIELDS] for d in data]) + "\n"
