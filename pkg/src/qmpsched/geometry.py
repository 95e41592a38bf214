"""Integer space-time geometry: voxels, polycubes, cuboids and placements.

The z axis is time, measured in logical steps (one step is ``d`` code
cycles).  Occupancy is half-open on every axis, so boxes that share a face
do not overlap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, NamedTuple


class Voxel(NamedTuple):
    x: int
    y: int
    z: int


class Rotation(enum.Enum):
    R0 = 0
    R90 = 90


@dataclass(frozen=True)
class Transform:
    """Rotation about the time axis, optionally preceded by a mirror x -> -x."""

    rotation: Rotation = Rotation.R0
    flip: bool = False


@dataclass(frozen=True)
class Polycube:
    voxels: frozenset[Voxel]

    def __post_init__(self):
        if not self.voxels:
            raise ValueError("empty program")
        for v in self.voxels:
            if min(v) < 0:
                raise ValueError(f"negative voxel coordinate {tuple(v)}")

    @classmethod
    def from_points(cls, points: Iterable[Iterable[int]]) -> "Polycube":
        return cls(frozenset(Voxel(*map(int, p)) for p in points))

    def __len__(self) -> int:
        return len(self.voxels)

    def __iter__(self):
        return iter(sorted(self.voxels))

    def to_json(self) -> list[list[int]]:
        return [list(v) for v in sorted(self.voxels)]

    @classmethod
    def from_json(cls, data) -> "Polycube":
        return cls.from_points(data)


@dataclass(frozen=True)
class Cuboid:
    w: int
    h: int
    l: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1 or self.l < 1:
            raise ValueError(f"cuboid sides must be >= 1, got {self.w}x{self.h}x{self.l}")

    @property
    def volume(self) -> int:
        return self.w * self.h * self.l

    def rotated(self) -> "Cuboid":
        return Cuboid(self.h, self.w, self.l)

    def orientations(self, W: int | None = None, H: int | None = None) -> list["Cuboid"]:
        """Distinct xy-orientations, optionally limited to those fitting a W x H chip."""
        out = [self] if self.w == self.h else [self, self.rotated()]
        if W is not None and H is not None:
            out = [c for c in out if c.w <= W and c.h <= H]
        return out

    def fits(self, W: int, H: int) -> bool:
        return bool(self.orientations(W, H))

    def to_json(self) -> dict:
        return {"w": self.w, "h": self.h, "l": self.l}

    @classmethod
    def from_json(cls, data: dict) -> "Cuboid":
        return cls(int(data["w"]), int(data["h"]), int(data["l"]))


@dataclass(frozen=True)
class PlacedCuboid:
    id: int
    x: int
    y: int
    z: int
    w: int
    h: int
    l: int

    def __post_init__(self):
        if min(self.x, self.y, self.z) < 0:
            raise ValueError(f"placement of job {self.id} has a negative coordinate")
        if self.w < 1 or self.h < 1 or self.l < 1:
            raise ValueError(f"placement of job {self.id} has a non-positive side")

    @classmethod
    def at(cls, id: int, cuboid: Cuboid, x: int, y: int, z: int) -> "PlacedCuboid":
        return cls(id, x, y, z, cuboid.w, cuboid.h, cuboid.l)

    x1 = property(lambda self: self.x)
    y1 = property(lambda self: self.y)
    z1 = property(lambda self: self.z)
    x2 = property(lambda self: self.x + self.w)
    y2 = property(lambda self: self.y + self.h)
    z2 = property(lambda self: self.z + self.l)

    @property
    def cuboid(self) -> Cuboid:
        return Cuboid(self.w, self.h, self.l)

    @property
    def volume(self) -> int:
        return self.w * self.h * self.l

    @property
    def footprint(self) -> "Rect":
        return Rect(self.x, self.y, self.x + self.w, self.y + self.h)

    def moved(self, x: int | None = None, y: int | None = None, z: int | None = None) -> "PlacedCuboid":
        return PlacedCuboid(
            self.id,
            self.x if x is None else x,
            self.y if y is None else y,
            self.z if z is None else z,
            self.w,
            self.h,
            self.l,
        )

    def to_json(self) -> dict:
        return {"id": self.id, "x": self.x, "y": self.y, "z": self.z,
                "w": self.w, "h": self.h, "l": self.l}

    @classmethod
    def from_json(cls, data: dict) -> "PlacedCuboid":
        return cls(*(int(data[k]) for k in ("id", "x", "y", "z", "w", "h", "l")))


class Rect(NamedTuple):
    """Half-open xy rectangle [x1, x2) x [y1, y2)."""

    x1: int
    y1: int
    x2: int
    y2: int

    def intersects(self, other: "Rect") -> bool:
        return (self.x1 < other.x2 and other.x1 < self.x2
                and self.y1 < other.y2 and other.y1 < self.y2)


@dataclass(frozen=True)
class PlacedPolycube:
    polycube: Polycube
    x: int = 0
    y: int = 0
    z: int = 0

    def voxels(self) -> set[Voxel]:
        return {Voxel(v.x + self.x, v.y + self.y, v.z + self.z) for v in self.polycube.voxels}

    def bounding_box(self) -> PlacedCuboid:
        vs = self.polycube.voxels
        lo = [min(v[a] for v in vs) for a in range(3)]
        hi = [max(v[a] for v in vs) for a in range(3)]
        return PlacedCuboid(0, self.x + lo[0], self.y + lo[1], self.z + lo[2],
                            hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1)


def _intervals_overlap(a1: int, a2: int, b1: int, b2: int) -> bool:
    return a1 < b2 and b1 < a2


def overlaps(a: PlacedCuboid, b: PlacedCuboid) -> bool:
    return (_intervals_overlap(a.x1, a.x2, b.x1, b.x2)
            and _intervals_overlap(a.y1, a.y2, b.y1, b.y2)
            and _intervals_overlap(a.z1, a.z2, b.z1, b.z2))


def in_bounds(p: PlacedCuboid, W: int, H: int) -> bool:
    return p.x2 <= W and p.y2 <= H


def transform_polycube(p: Polycube, t: Transform) -> Polycube:
    pts = [(v.x, v.y, v.z) for v in p.voxels]
    if t.flip:
        pts = [(-x, y, z) for x, y, z in pts]
    if t.rotation is Rotation.R90:
        pts = [(-y, x, z) for x, y, z in pts]
    # time is never transformed, so only x and y need re-anchoring at 0
    mx = min(q[0] for q in pts)
    my = min(q[1] for q in pts)
    return Polycube(frozenset(Voxel(x - mx, y - my, z) for x, y, z in pts))


def polycubes_overlap(p: PlacedPolycube, q: PlacedPolycube) -> bool:
    # cheap reject on bounding boxes first
    if not overlaps(p.bounding_box(), q.bounding_box()):
        return False
    small, big = (p, q) if len(p.polycube) <= len(q.polycube) else (q, p)
    big_voxels = big.voxels()
    return any(v in big_voxels for v in small.voxels())
