"""Polycube -> cuboid approximations used before scheduling."""

from __future__ import annotations

from typing import NamedTuple

from .geometry import Cuboid, Polycube


class Band(NamedTuple):
    """One z-band of a k-cuboid cover, positioned relative to the polycube's min corner."""

    cuboid: Cuboid
    z_offset: int
    x_offset: int = 0
    y_offset: int = 0


def _extent(p: Polycube) -> tuple[list[int], list[int]]:
    if not p.voxels:
        raise ValueError("empty program")
    lo = [min(v[a] for v in p.voxels) for a in range(3)]
    hi = [max(v[a] for v in p.voxels) for a in range(3)]
    return lo, hi


def bounding_cuboid(p: Polycube) -> Cuboid:
    lo, hi = _extent(p)
    return Cuboid(hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1)


def band_lengths(extent: int, k: int) -> list[int]:
    """Near-equal split of ``extent`` into ``k`` parts, remainder to the earliest parts."""
    base, rem = divmod(extent, k)
    return [base + 1 if i < rem else base for i in range(k)]


def k_split(p: Polycube, k: int) -> list[Band]:
    """Cut ``p`` into ``k`` contiguous time bands and box each one.

    A band that happens to contain no voxels (the polycube has an idle gap)
    keeps the footprint of the nearest earlier non-empty band, so the
    program still holds its patches while it waits.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    lo, hi = _extent(p)
    depth = hi[2] - lo[2] + 1
    if k > depth:
        raise ValueError(f"over-split: k={k} exceeds z-extent {depth}")

    bands: list[Band] = []
    z0 = 0
    box = (0, 0, 1, 1)
    for length in band_lengths(depth, k):
        layer = [v for v in p.voxels if z0 <= v.z - lo[2] < z0 + length]
        # the first band always holds the lowest voxel, so ``box`` is set before reuse
        if layer:
            box = (min(v.x for v in layer) - lo[0], min(v.y for v in layer) - lo[1],
                   max(v.x for v in layer) - lo[0] + 1, max(v.y for v in layer) - lo[1] + 1)
        bx0, by0, bx1, by1 = box
        bands.append(Band(Cuboid(bx1 - bx0, by1 - by0, length), z0, bx0, by0))
        z0 += length
    return bands


def cover_volume(bands: list[Band]) -> int:
    return sum(b.cuboid.volume for b in bands)
