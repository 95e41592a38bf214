"""Corner-greedy scheduler.

Each job goes to the candidate corner with the smallest start time; ties
go to the smallest x + y, then the smallest x, then the oldest candidate,
then the unrotated orientation.  After a placement the used corner is
removed and the corners ``(x1, y1, z2)``, ``(x1, y2, z1)``, ``(x2, y1, z1)``
and ``(0, 0, z2)`` are added.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import JobRequest, Point, ScheduleResult, ScheduleState, Scheduler
from .geometry import Cuboid, PlacedCuboid

_CHUNK = 256


def seed_candidates(state: ScheduleState) -> dict[Point, None]:
    """The persisted candidate set; a fresh state holds only the origin."""
    if not state.reserved and not state.candidates:
        return {(0, 0, 0): None}
    return dict(state.candidates)


def add_corners(cands: dict[Point, None], p: PlacedCuboid, W: int, H: int) -> None:
    for c in ((p.x1, p.y1, p.z2), (p.x1, p.y2, p.z1), (p.x2, p.y1, p.z1), (0, 0, p.z2)):
        if c[0] < W and c[1] < H:
            cands.setdefault(c, None)


def _barrier_rows(state: ScheduleState, sp: int) -> np.ndarray:
    rows = [(r.x1, r.y1, r.x2, r.y2, b.t) for b in state.barriers if b.t > sp for r in b.regions]
    return np.array(rows, dtype=np.int64).reshape(-1, 5)


def _feasible(P: np.ndarray, dims: Cuboid, segs: np.ndarray, bars: np.ndarray, W: int, H: int) -> np.ndarray:
    x1, y1, z1 = P[:, 0], P[:, 1], P[:, 2]
    x2, y2, z2 = x1 + dims.w, y1 + dims.h, z1 + dims.l
    ok = (x2 <= W) & (y2 <= H)
    if len(segs):
        hit = ((x1[:, None] < segs[None, :, 3]) & (segs[None, :, 0] < x2[:, None])
               & (y1[:, None] < segs[None, :, 4]) & (segs[None, :, 1] < y2[:, None])
               & (z1[:, None] < segs[None, :, 5]) & (segs[None, :, 2] < z2[:, None]))
        ok &= ~hit.any(axis=1)
    if len(bars):
        t = bars[None, :, 4]
        hit = ((z1[:, None] < t) & (t < z2[:, None])
               & (x1[:, None] < bars[None, :, 2]) & (bars[None, :, 0] < x2[:, None])
               & (y1[:, None] < bars[None, :, 3]) & (bars[None, :, 1] < y2[:, None]))
        ok &= ~hit.any(axis=1)
    return ok


def _select(points: list[Point], orients: list[Cuboid], segs: np.ndarray, bars: np.ndarray,
            W: int, H: int) -> tuple[Point, Cuboid]:
    P = np.array(points, dtype=np.int64)
    # stable lexsort: last key is primary; insertion order breaks remaining ties
    order = np.lexsort((P[:, 0], P[:, 0] + P[:, 1], P[:, 2]))
    for s in range(0, len(order), _CHUNK):
        idx = order[s:s + _CHUNK]
        Q = P[idx]
        best = None
        for o in orients:
            ok = _feasible(Q, o, segs, bars, W, H)
            hits = np.flatnonzero(ok)
            if len(hits) and (best is None or hits[0] < best[0]):
                best = (int(hits[0]), o)
        if best is not None:
            k, o = best
            return points[int(idx[k])], o
    raise RuntimeError("no feasible candidate; the top-of-stack fallback is missing")


def corner_greedy_schedule(state: ScheduleState, batch: Sequence[JobRequest | Cuboid], sp: int,
                           rotate: bool = True) -> tuple[list[PlacedCuboid], dict[Point, None]]:
    """Place ``batch`` in order; returns the placements and the updated candidate set.

    ``state`` is not modified.
    """
    W, H = state.W, state.H
    cands = seed_candidates(state)
    # top-of-stack corner: above every reservation and relocation plane, so always feasible
    cands.setdefault((0, 0, max([sp, state.top] + [b.t for b in state.barriers])), None)

    segs = state.segment_array()
    segs = segs[segs[:, 5] > sp]
    bars = _barrier_rows(state, sp)

    placements: list[PlacedCuboid] = []
    for k, job in enumerate(batch):
        if isinstance(job, JobRequest):
            jid, cub = job.id, job.cuboid
        else:
            jid, cub = k, job
        orients = cub.orientations(W, H) if rotate else [c for c in [cub] if c.w <= W and c.h <= H]
        if not orients:
            raise ValueError(f"job {jid} ({cub.w}x{cub.h}) cannot fit a {W}x{H} chip")
        points = [c for c in cands if c[2] >= sp]
        (x, y, z), o = _select(points, orients, segs, bars, W, H)
        p = PlacedCuboid.at(jid, o, x, y, z)
        placements.append(p)
        del cands[(x, y, z)]
        add_corners(cands, p, W, H)
        segs = np.vstack([segs, np.array([[p.x1, p.y1, p.z1, p.x2, p.y2, p.z2]], dtype=np.int64)])
    return placements, cands


class CornerGreedyScheduler(Scheduler):
    name = "cg"

    def __init__(self, rotate: bool = True):
        self.rotate = rotate

    def schedule(self, state, batch, sp):
        placements, cands = corner_greedy_schedule(state, batch, sp, rotate=self.rotate)
        return ScheduleResult(placements, candidates=cands)
