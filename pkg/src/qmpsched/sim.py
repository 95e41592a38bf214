"""Discrete-event simulation of the online scheduling loop.

Geometry lives in the execution frame: ``z`` counts logical steps of
program execution, which never move when the machine pauses.  A pause
(the scheduler overrunning its schedule point) is kept in a separate stall
ledger, so the wall-clock finish of the whole workload is
``max z2 + total stall``.  Pausing everything uniformly is the same as
shifting every not-yet-executed segment by the stall, without rewriting
the reservation geometry.
"""

from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .core import (JobRequest, LatencyModel, ProcessorConfig, ScheduleState, Scheduler, commit,
                   estimate_schedule_point, sort_queue, take_waiting_jobs, validate)
from .defrag import DefragEvent, defrag
from .geometry import overlaps
from .greedy import CornerGreedyScheduler


class SimulationError(RuntimeError):
    def __init__(self, message: str, violations=()):
        super().__init__(message)
        self.violations = list(violations)


@dataclass
class SimConfig:
    processor: ProcessorConfig = field(default_factory=ProcessorConfig)
    B: int = 5
    I: int = 20_000
    defrag: bool = True
    scheduler: Scheduler = field(default_factory=CornerGreedyScheduler)
    latency: LatencyModel = field(default_factory=LatencyModel.measured)
    seed: int | None = None
    max_cycles: int | None = None
    validate_every_commit: bool = False
    relocation_cost_steps: int = 0

    def __post_init__(self):
        if self.B < 1:
            raise ValueError("batch size must be >= 1")
        if self.I < 1:
            raise ValueError("defrag interval must be >= 1")
        if self.relocation_cost_steps < 0:
            raise ValueError("relocation cost must be non-negative")


@dataclass
class Stall:
    at: int  # execution-frame step where the machine waited
    steps: int


@dataclass
class MetricsReport:
    makespan: int
    sum_l: int
    n_jobs: int
    cycles: int
    batch_us: list[float]
    stall_steps: int
    defrag_count: int
    packing_makespan: int

    @property
    def speedup(self) -> Fraction:
        return Fraction(self.sum_l, self.makespan) if self.makespan else Fraction(0)

    @property
    def sched_mean_us(self) -> float:
        return statistics.fmean(self.batch_us) if self.batch_us else 0.0

    @property
    def sched_min_us(self) -> float:
        return min(self.batch_us, default=0.0)

    @property
    def sched_max_us(self) -> float:
        return max(self.batch_us, default=0.0)

    @property
    def sched_std_us(self) -> float:
        return statistics.pstdev(self.batch_us) if len(self.batch_us) > 1 else 0.0

    def to_dict(self) -> dict:
        return {
            "makespan": self.makespan,
            "packing_makespan": self.packing_makespan,
            "sum_l": self.sum_l,
            "n_jobs": self.n_jobs,
            "speedup": float(self.speedup),
            "cycles": self.cycles,
            "sched_mean_us": self.sched_mean_us,
            "sched_min_us": self.sched_min_us,
            "sched_max_us": self.sched_max_us,
            "sched_std_us": self.sched_std_us,
            "stall_steps": self.stall_steps,
            "defrag_count": self.defrag_count,
        }


@dataclass
class SimResult:
    state: ScheduleState
    report: MetricsReport
    stalls: list[Stall]
    defrags: list[DefragEvent]


def _check_fit(requests: Sequence[JobRequest], W: int, H: int) -> None:
    for r in requests:
        c = r.cuboid
        if not c.fits(W, H):
            raise ValueError(f"job {r.id} ({c.w}x{c.h}) cannot fit on a {W}x{H} chip in any orientation")


def _check_commit(state: ScheduleState, placements, sp: int, full: bool) -> None:
    if full:
        bad = validate(state)
        if bad:
            raise SimulationError(f"schedule invalid after commit: {bad[0]}", bad)
        return
    # cheap check: only the new placements against everything else
    segs = state.segments()
    for p in placements:
        if p.z1 < sp or p.x2 > state.W or p.y2 > state.H:
            raise SimulationError(f"job {p.id} placed outside the chip or before sp={sp}: {p}")
        for s in segs:
            if s.id != p.id and overlaps(p, s):
                raise SimulationError(f"job {p.id} overlaps job {s.id}")
        for b in state.barriers:
            if b.blocks(p):
                raise SimulationError(f"job {p.id} straddles relocation plane {b.t}")


def simulate(config: SimConfig, requests: Sequence[JobRequest]) -> SimResult:
    proc = config.processor
    _check_fit(requests, proc.W, proc.H)
    ids = [r.id for r in requests]
    if len(set(ids)) != len(ids):
        raise ValueError("job ids must be unique")

    state = ScheduleState(processor=proc)
    queue = sort_queue(requests)
    latency = config.latency
    latency.history.clear()
    now = 0  # execution frame
    stalls: list[Stall] = []
    events: list[DefragEvent] = []
    batch_us: list[float] = []
    stalled = 0
    cycles = 0

    while queue:
        if config.max_cycles is not None and cycles >= config.max_cycles:
            break
        wall = now + sum(st.steps for st in stalls if st.at <= now)
        if queue[0].arrival > wall:
            # idle until the next arrival; the machine keeps executing meanwhile
            now += queue[0].arrival - wall
            continue
        state.advance(now)
        if config.defrag:
            new = defrag(state, config.I)
            events += new
            if config.relocation_cost_steps:
                # each relocation pauses the machine when executed
                for ev in new:
                    stalls.append(Stall(ev.t, config.relocation_cost_steps))
                    stalled += config.relocation_cost_steps
        size = min(config.B, sum(1 for r in queue[:config.B] if r.arrival <= wall))
        sp = estimate_schedule_point(state, now, latency, size)
        batch = take_waiting_jobs(queue, config.B, wall)
        snapshot = state.copy()
        result, us = latency.measure(lambda: config.scheduler.schedule(snapshot, batch, sp),
                                     len(batch), len(state.reserved))
        latency.record(us)
        batch_us.append(us)
        lat = proc.us_to_steps(us)
        if lat > sp - now:
            stalls.append(Stall(sp, lat - (sp - now)))
            stalled += lat - (sp - now)
            now = sp
        else:
            now += lat
        if sorted(p.id for p in result.placements) != sorted(r.id for r in batch):
            raise SimulationError("scheduler did not place exactly the batch")
        commit(state, result)
        state.sp = sp
        _check_commit(state, result.placements, sp, config.validate_every_commit)
        cycles += 1

    packing = state.makespan()
    sum_l = sum(r.cuboid.l for r in requests if r.id in state.reserved)
    report = MetricsReport(
        makespan=packing + stalled,
        sum_l=sum_l,
        n_jobs=len(state.reserved),
        cycles=cycles,
        batch_us=batch_us,
        stall_steps=stalled,
        defrag_count=len(events),
        packing_makespan=packing,
    )
    return SimResult(state, report, stalls, events)


def run(config: SimConfig, requests: Sequence[JobRequest]) -> tuple[ScheduleState, MetricsReport]:
    res = simulate(config, requests)
    return res.state, res.report
