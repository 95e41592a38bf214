"""Defragmentation: cut reservations at a time plane and compact the future part.

Parts above the plane are swept toward the origin, first along -y and then
along -x.  A job that is running across the plane physically moves there, so its
old and new footprints become a barrier that later jobs may not
straddle.  Parts that have not started by then only change their plan.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import DefragBarrier, ScheduleState, barrier_blocks
from .geometry import PlacedCuboid
from .greedy import add_corners

__all__ = ["DefragBarrier", "DefragEvent", "barrier_blocks", "defrag", "defrag_at", "defrag_points"]


@dataclass
class DefragEvent:
    t: int
    moved: list[tuple[int, tuple[int, int], tuple[int, int]]] = field(default_factory=list)
    barrier: DefragBarrier | None = None

    def to_json(self) -> dict:
        return {"t": self.t,
                "moved": [{"id": i, "from": list(a), "to": list(b)} for i, a, b in self.moved]}


def _sweep(parts: list[PlacedCuboid], axis: str) -> list[PlacedCuboid]:
    """Push every part toward 0 on ``axis`` ('x' or 'y'), in ascending start order."""
    a, o = (0, 1) if axis == "x" else (1, 0)
    box = np.array([(p.x1, p.y1, p.z1, p.x2, p.y2, p.z2) for p in parts], dtype=np.int64)
    order = np.lexsort((box[:, o], box[:, a]))
    done = np.zeros((len(parts), 6), dtype=np.int64)
    out: list[PlacedCuboid | None] = [None] * len(parts)
    for n, i in enumerate(order):
        b = box[i]
        d = done[:n]
        hit = ((b[o] < d[:, o + 3]) & (d[:, o] < b[o + 3])
               & (b[2] < d[:, 5]) & (d[:, 2] < b[5]))
        lo = int(d[hit, a + 3].max()) if hit.any() else 0
        b = b.copy()
        size = b[a + 3] - b[a]
        b[a], b[a + 3] = lo, lo + size
        done[n] = b
        out[i] = parts[i].moved(**{axis: lo})
    return out


def defrag_at(state: ScheduleState, t: int) -> DefragEvent | None:
    """Compact every reservation above the plane ``z = t`` toward the origin.

    Only segments whose part actually changes position are cut; a segment
    that crosses ``t`` but stays put is left whole since the two pieces
    would occupy exactly the same space.
    """
    if t <= state.executed:
        raise ValueError(f"cannot defragment at {t}: already executed up to {state.executed}")
    if t < state.sp:
        raise ValueError(f"cannot defragment at {t}: before schedule point {state.sp}")
    if t < state.z_last:
        raise ValueError(f"defragmentation must be chronological: {t} < {state.z_last}")

    owners: list[int] = []
    above: list[PlacedCuboid] = []
    for job in state.reserved.values():
        for s in job.segments:
            if s.z2 <= t:
                continue
            owners.append(job.id)
            above.append(s if s.z1 >= t else PlacedCuboid(s.id, s.x, s.y, t, s.w, s.h, s.z2 - t))
    state.z_last = t
    if not above:
        return None

    placed = _sweep(_sweep(above, "y"), "x")

    event = DefragEvent(t)
    regions = []
    moved_ids: dict[int, PlacedCuboid] = {}
    for jid, old, new in zip(owners, above, placed):
        if (old.x, old.y) == (new.x, new.y):
            continue
        moved_ids[jid] = new
        event.moved.append((jid, (old.x, old.y), (new.x, new.y)))
        if state.reserved[jid].start < t:
            # only a job running at t physically moves; a later part just gets a new plan
            regions.extend([old.footprint, new.footprint])

    for jid, new in moved_ids.items():
        job = state.reserved[jid]
        segs = []
        for s in job.segments:
            if s.z2 <= t:
                segs.append(s)
            elif s.z1 < t:
                segs.append(PlacedCuboid(s.id, s.x, s.y, s.z, s.w, s.h, t - s.z))
        segs.append(new)
        job.segments = segs
        add_corners(state.candidates, new, state.W, state.H)
    state.touch()

    if regions:
        event.barrier = DefragBarrier(t, tuple(dict.fromkeys(regions)))
        state.barriers.append(event.barrier)
    return event if event.moved else None


def defrag_points(finish_times, z_last: int, I: int) -> list[int]:
    """Finish times followed by a gap of at least ``I`` before the next one."""
    Z = sorted({z for z in finish_times if z > z_last})
    return [Z[k] for k in range(len(Z) - 1) if Z[k + 1] - Z[k] >= I]


def defrag(state: ScheduleState, I: int) -> list[DefragEvent]:
    """Run ``defrag_at`` at every eligible gap, in chronological order."""
    if I < 1:
        raise ValueError("defrag interval must be >= 1")
    floor = max(state.z_last, state.executed, state.sp - 1)
    finish = [j.finish for j in state.reserved.values()]
    events = []
    for t in defrag_points(finish, floor, I):
        ev = defrag_at(state, t)
        if ev is not None:
            events.append(ev)
    return events
