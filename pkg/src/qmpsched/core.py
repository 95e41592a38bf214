"""Shared scheduling substrate: jobs, the reservation ledger and the schedule point."""

from __future__ import annotations

import enum
import json
import math
import time
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .geometry import Cuboid, PlacedCuboid, Polycube, Rect
from .preprocess import bounding_cuboid

Point = tuple[int, int, int]


@dataclass(frozen=True)
class ProcessorConfig:
    W: int = 20
    H: int = 20
    code_cycle_us: Fraction = Fraction(1)
    code_distance: int = 31

    def __post_init__(self):
        if self.W < 1 or self.H < 1:
            raise ValueError("chip dimensions must be positive")
        if self.code_distance < 1 or self.code_cycle_us <= 0:
            raise ValueError("code distance and code cycle must be positive")
        object.__setattr__(self, "code_cycle_us", Fraction(self.code_cycle_us))

    @property
    def step_us(self) -> Fraction:
        """Wall time of one logical step (``d`` code cycles)."""
        return self.code_distance * self.code_cycle_us

    def us_to_steps(self, us: float) -> int:
        """Round a duration up to whole logical steps."""
        if us <= 0:
            return 0
        return math.ceil(Fraction(us) / self.step_us)


@dataclass(frozen=True)
class JobRequest:
    id: int
    program: Cuboid | Polycube
    arrival: int = 0

    def __post_init__(self):
        if self.arrival < 0:
            raise ValueError("arrival time must be non-negative")

    @property
    def cuboid(self) -> Cuboid:
        if isinstance(self.program, Cuboid):
            return self.program
        return bounding_cuboid(self.program)


@dataclass
class ReservedJob:
    id: int
    segments: list[PlacedCuboid]
    length: int

    @classmethod
    def single(cls, p: PlacedCuboid) -> "ReservedJob":
        return cls(p.id, [p], p.l)

    @property
    def start(self) -> int:
        return self.segments[0].z1

    @property
    def finish(self) -> int:
        return self.segments[-1].z2

    @property
    def volume(self) -> int:
        return sum(s.volume for s in self.segments)


@dataclass(frozen=True)
class DefragBarrier:
    """Relocation plane: new jobs may not straddle ``t`` over any of ``regions``."""

    t: int
    regions: tuple[Rect, ...]

    def blocks(self, p: PlacedCuboid) -> bool:
        if not (p.z1 < self.t < p.z2):
            return False
        fp = p.footprint
        return any(fp.intersects(r) for r in self.regions)


def barrier_blocks(barriers: Iterable[DefragBarrier], candidate: PlacedCuboid) -> bool:
    return any(b.blocks(candidate) for b in barriers)


@dataclass
class ScheduleState:
    """The processor's reservation ledger.

    ``candidates`` is the corner-greedy candidate set; a dict keeps
    insertion order, which is the last tie-break of the greedy rule.
    """

    processor: ProcessorConfig = field(default_factory=ProcessorConfig)
    reserved: dict[int, ReservedJob] = field(default_factory=dict)
    candidates: dict[Point, None] = field(default_factory=lambda: {(0, 0, 0): None})
    barriers: list[DefragBarrier] = field(default_factory=list)
    sp: int = 0
    z_last: int = 0
    executed: int = 0
    _cache: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def W(self) -> int:
        return self.processor.W

    @property
    def H(self) -> int:
        return self.processor.H

    def segments(self) -> list[PlacedCuboid]:
        return [s for job in self.reserved.values() for s in job.segments]

    def segment_array(self) -> np.ndarray:
        """All segments as an (N, 6) int64 array of x1, y1, z1, x2, y2, z2."""
        if self._cache is None:
            segs = self.segments()
            if segs:
                self._cache = np.array([(s.x1, s.y1, s.z1, s.x2, s.y2, s.z2) for s in segs],
                                       dtype=np.int64)
            else:
                self._cache = np.zeros((0, 6), dtype=np.int64)
        return self._cache

    def touch(self) -> None:
        self._cache = None

    @property
    def top(self) -> int:
        """Largest finish time over reserved jobs (0 on an empty processor)."""
        return max((j.finish for j in self.reserved.values()), default=0)

    def makespan(self) -> int:
        return self.top

    def add(self, placements: Iterable[PlacedCuboid]) -> None:
        for p in placements:
            if p.id in self.reserved:
                raise ValueError(f"job {p.id} is already reserved")
            self.reserved[p.id] = ReservedJob.single(p)
        self.touch()

    def advance(self, executed: int) -> None:
        """Move the executed-time marker and drop state that can never matter again."""
        if executed < self.executed:
            raise ValueError("executed time cannot go backwards")
        self.executed = executed
        self.barriers = [b for b in self.barriers if b.t > executed]
        stale = [c for c in self.candidates if c[2] < executed]
        for c in stale:
            del self.candidates[c]

    def copy(self) -> "ScheduleState":
        return ScheduleState(
            processor=self.processor,
            reserved={k: ReservedJob(j.id, list(j.segments), j.length) for k, j in self.reserved.items()},
            candidates=dict(self.candidates),
            barriers=list(self.barriers),
            sp=self.sp,
            z_last=self.z_last,
            executed=self.executed,
        )

    def to_json(self, **extra) -> dict:
        jobs = [
            {"id": j.id, "segments": [{k: v for k, v in s.to_json().items() if k != "id"}
                                      for s in j.segments]}
            for j in sorted(self.reserved.values(), key=lambda j: j.id)
        ]
        out = {"jobs": jobs, "makespan": self.makespan()}
        out.update(extra)
        return out

    def dump(self, path, **extra) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(**extra), fh, indent=1)


# ---------------------------------------------------------------------------
# latency and the schedule point


class LatencyMode(enum.Enum):
    MEASURED = "measured"
    SYNTHETIC = "synthetic"


CostFn = Callable[[int, int], float]


@dataclass
class LatencyModel:
    """Scheduler latency source plus a bounded history of past durations (µs).

    A synthetic model with ``predict_cold_start`` set knows its own cost, so
    it estimates the first cycle exactly instead of using ``default_offset``.
    """

    mode: LatencyMode = LatencyMode.MEASURED
    cost: CostFn | None = None
    window: int = 16
    default_offset: int = 1
    predict_cold_start: bool = False
    history: deque = field(default_factory=deque)

    def __post_init__(self):
        self.history = deque(self.history, maxlen=self.window)
        if self.mode is LatencyMode.SYNTHETIC and self.cost is None:
            raise ValueError("synthetic latency needs a cost function")

    @classmethod
    def measured(cls, window: int = 16) -> "LatencyModel":
        return cls(LatencyMode.MEASURED, window=window)

    @classmethod
    def synthetic(cls, cost: CostFn, window: int = 16, predict_cold_start: bool = True) -> "LatencyModel":
        return cls(LatencyMode.SYNTHETIC, cost=cost, window=window,
                   predict_cold_start=predict_cold_start)

    @classmethod
    def parse(cls, spec: str) -> "LatencyModel":
        """``measured`` or ``synthetic:<us per job>[:<us per reserved job>]``."""
        if spec == "measured":
            return cls.measured()
        if spec.startswith("synthetic"):
            parts = spec.split(":")[1:]
            if not parts or len(parts) > 2:
                raise ValueError(f"bad latency spec {spec!r}")
            per_job = float(parts[0])
            per_reserved = float(parts[1]) if len(parts) == 2 else 0.0
            return cls.synthetic(lambda b, r: per_job * b + per_reserved * r)
        raise ValueError(f"bad latency spec {spec!r}")

    def record(self, us: float) -> None:
        self.history.append(float(us))

    def mean_us(self) -> float | None:
        if not self.history:
            return None
        return sum(self.history) / len(self.history)

    def measure(self, fn: Callable[[], object], batch_size: int, reserved: int):
        """Run ``fn`` and return ``(result, duration_us)`` under this model."""
        t0 = time.perf_counter()
        result = fn()
        elapsed = (time.perf_counter() - t0) * 1e6
        if self.mode is LatencyMode.SYNTHETIC:
            return result, float(self.cost(batch_size, reserved))
        return result, elapsed


def measure_latency(latency: LatencyModel, fn: Callable[[], object], batch_size: int = 0,
                    reserved: int = 0) -> float:
    return latency.measure(fn, batch_size, reserved)[1]


def estimate_schedule_point(state: ScheduleState, now: int, latency: LatencyModel,
                            batch_size: int = 0) -> int:
    """Earliest step the next batch may start at.

    Never earlier than the schedule point already in force, so successive
    schedule points are non-decreasing.
    """
    mean = latency.mean_us()
    if mean is not None:
        offset = state.processor.us_to_steps(mean)
    elif latency.predict_cold_start and latency.cost is not None:
        offset = state.processor.us_to_steps(latency.cost(batch_size, len(state.reserved)))
    else:
        offset = latency.default_offset
    return max(now + offset, state.sp)


def take_waiting_jobs(queue: list[JobRequest], B: int, now: int) -> list[JobRequest]:
    """Pop up to ``B`` arrived jobs in FIFO order; ``queue`` must be sorted by arrival."""
    if B < 1:
        raise ValueError("batch size must be >= 1")
    k = 0
    while k < len(queue) and k < B and queue[k].arrival <= now:
        k += 1
    batch = queue[:k]
    del queue[:k]
    return batch


def sort_queue(requests: Iterable[JobRequest]) -> list[JobRequest]:
    return sorted(requests, key=lambda r: r.arrival)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str  # Overlap | OutOfBounds | Discontiguous | Barrier
    jobs: tuple[int, ...]
    detail: str = ""


def pairwise_overlaps(arr: np.ndarray, chunk: int = 512) -> list[tuple[int, int]]:
    """Index pairs (i < j) of overlapping half-open boxes in an (N, 6) array."""
    out: list[tuple[int, int]] = []
    n = len(arr)
    for s in range(0, n, chunk):
        a = arr[s:s + chunk, None, :]
        b = arr[None, :, :]
        hit = ((a[..., 0] < b[..., 3]) & (b[..., 0] < a[..., 3])
               & (a[..., 1] < b[..., 4]) & (b[..., 1] < a[..., 4])
               & (a[..., 2] < b[..., 5]) & (b[..., 2] < a[..., 5]))
        ii, jj = np.nonzero(hit)
        for i, j in zip(ii + s, jj):
            if i < j:
                out.append((int(i), int(j)))
    return out


def validate(state: ScheduleState, W: int | None = None, H: int | None = None) -> list[Violation]:
    W = state.W if W is None else W
    H = state.H if H is None else H
    found: list[Violation] = []
    owners: list[int] = []
    segs: list[PlacedCuboid] = []
    for job in state.reserved.values():
        total = 0
        for k, s in enumerate(job.segments):
            owners.append(job.id)
            segs.append(s)
            total += s.l
            if s.x2 > W or s.y2 > H:
                found.append(Violation("OutOfBounds", (job.id,), f"segment {k} ends at ({s.x2},{s.y2})"))
            if k and job.segments[k - 1].z2 != s.z1:
                found.append(Violation("Discontiguous", (job.id,),
                                       f"segment {k - 1} ends at {job.segments[k - 1].z2}, next starts at {s.z1}"))
        if total != job.length:
            found.append(Violation("Discontiguous", (job.id,), f"length {total} != {job.length}"))
        for s in job.segments:
            for b in state.barriers:
                if b.blocks(s):
                    found.append(Violation("Barrier", (job.id,), f"straddles relocation plane {b.t}"))
    if segs:
        arr = np.array([(s.x1, s.y1, s.z1, s.x2, s.y2, s.z2) for s in segs], dtype=np.int64)
        for i, j in pairwise_overlaps(arr):
            found.append(Violation("Overlap", tuple(sorted((owners[i], owners[j]))),
                                   f"{segs[i]} vs {segs[j]}"))
    return found


# ---------------------------------------------------------------------------
# scheduler interface


@dataclass
class ScheduleResult:
    placements: list[PlacedCuboid]
    candidates: dict[Point, None] | None = None
    status: str = "ok"


class Scheduler:
    """Maps ``(state snapshot, batch, sp)`` to placements; never mutates ``state``."""

    name = "base"

    def schedule(self, state: ScheduleState, batch: Sequence[JobRequest], sp: int) -> ScheduleResult:
        raise NotImplementedError


def commit(state: ScheduleState, result: ScheduleResult) -> None:
    state.add(result.placements)
    if result.candidates is not None:
        state.candidates = result.candidates
