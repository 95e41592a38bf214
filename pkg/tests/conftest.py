"""Shared helpers and independent oracles for the test suite."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from qmpsched.core import JobRequest, ScheduleState
from qmpsched.geometry import Cuboid, PlacedCuboid


def occupancy_conflicts(boxes, W, H):
    """Brute-force voxel grid: set of (i, j) index pairs sharing a voxel, and out-of-chip indices."""
    top = max((b.z2 for b in boxes), default=0)
    owner = {}
    pairs, outside = set(), set()
    for k, b in enumerate(boxes):
        if b.x2 > W or b.y2 > H:
            outside.add(k)
        for v in itertools.product(range(b.x1, b.x2), range(b.y1, b.y2), range(b.z1, min(b.z2, top))):
            if v in owner:
                pairs.add((owner[v], k))
            else:
                owner[v] = k
    return pairs, outside


def random_requests(rng: np.random.Generator, n: int, side=(1, 6), length=(1, 30), start_id: int = 0):
    out = []
    for i in range(n):
        w, h = (int(v) for v in rng.integers(side[0], side[1] + 1, size=2))
        out.append(JobRequest(start_id + i, Cuboid(w, h, int(rng.integers(length[0], length[1] + 1)))))
    return out


def state_with(placements, W=20, H=20, **kw) -> ScheduleState:
    from qmpsched.core import ProcessorConfig

    st = ScheduleState(processor=ProcessorConfig(W, H), **kw)
    st.add(placements)
    return st


def box(id, x, y, z, w, h, l) -> PlacedCuboid:
    return PlacedCuboid(id, x, y, z, w, h, l)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
