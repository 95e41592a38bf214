"""Random job instances: the six job types, the nine class mixtures, random polycubes."""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .core import JobRequest
from .geometry import Cuboid, Polycube


@dataclass(frozen=True)
class JobType:
    name: str
    side: tuple[int, int]
    length: tuple[int, int]
    area: tuple[int, int] | None = None


SMALL, LARGE = (5, 10), (10, 20)
SHORT, MEDIUM, LONG = (10_000, 20_000), (40_000, 60_000), (80_000, 100_000)
BIG_AREA = (101, 200)

TYPES: dict[str, JobType] = {
    "G1": JobType("G1", SMALL, SHORT),
    "G2": JobType("G2", SMALL, MEDIUM),
    "G3": JobType("G3", SMALL, LONG),
    "G4": JobType("G4", LARGE, SHORT, BIG_AREA),
    "G5": JobType("G5", LARGE, MEDIUM, BIG_AREA),
    "G6": JobType("G6", LARGE, LONG, BIG_AREA),
}
TYPE_NAMES = tuple(TYPES)


def _dominant(t: str) -> dict[str, Fraction]:
    return {g: Fraction(1, 2) if g == t else Fraction(1, 10) for g in TYPE_NAMES}


CLASSES: dict[str, dict[str, Fraction]] = {
    "A": _dominant("G1"),
    "B": _dominant("G2"),
    "C": _dominant("G3"),
    "D": _dominant("G4"),
    "E": _dominant("G5"),
    "F": _dominant("G6"),
    "G": {g: Fraction(1, 6) for g in TYPE_NAMES},
    "H": {g: Fraction(3, 10) if g in ("G1", "G2", "G3") else Fraction(1, 30) for g in TYPE_NAMES},
    "I": {g: Fraction(1, 30) if g in ("G1", "G2", "G3") else Fraction(3, 10) for g in TYPE_NAMES},
}
CLASS_NAMES = tuple(CLASSES)

assert all(sum(mix.values()) == 1 for mix in CLASSES.values())


def feasible_sides(t: JobType) -> list[tuple[int, int]]:
    lo, hi = t.side
    pairs = [(w, h) for w in range(lo, hi + 1) for h in range(lo, hi + 1)]
    if t.area is not None:
        pairs = [(w, h) for w, h in pairs if t.area[0] <= w * h <= t.area[1]]
    return pairs


def gen_type(t: str | JobType, rng: np.random.Generator) -> Cuboid:
    t = TYPES[t] if isinstance(t, str) else t
    lo, hi = t.side
    while True:
        w, h = (int(v) for v in rng.integers(lo, hi + 1, size=2))
        if t.area is None or t.area[0] <= w * h <= t.area[1]:
            break
    l = int(rng.integers(t.length[0], t.length[1] + 1))
    return Cuboid(w, h, l)


def gen_class(c: str, n: int, rng: np.random.Generator) -> list[JobRequest]:
    if c not in CLASSES:
        raise ValueError(f"unknown class {c!r}; expected one of {', '.join(CLASS_NAMES)}")
    mix = CLASSES[c]
    p = np.array([float(mix[g]) for g in TYPE_NAMES])
    kinds = rng.choice(len(TYPE_NAMES), size=n, p=p / p.sum())
    return [JobRequest(i, gen_type(TYPE_NAMES[k], rng), 0) for i, k in enumerate(kinds)]


def instance_seeds(seed: int, count: int) -> list[int]:
    """Independent per-instance seeds derived from one master seed."""
    return [int(v) for v in np.random.SeedSequence(seed).generate_state(max(count, 0))]


_NEIGHBOURS = ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1))


def gen_polycube(volume: int, rng: np.random.Generator) -> Polycube:
    """Face-connected polycube grown one voxel at a time from a uniform frontier pick."""
    if volume < 1:
        raise ValueError("volume must be >= 1")
    cells = {(0, 0, 0)}
    while len(cells) < volume:
        frontier = sorted({(x + dx, y + dy, z + dz) for x, y, z in cells for dx, dy, dz in _NEIGHBOURS} - cells)
        cells.add(frontier[int(rng.integers(len(frontier)))])
    mins = [min(c[a] for c in cells) for a in range(3)]
    return Polycube.from_points((x - mins[0], y - mins[1], z - mins[2]) for x, y, z in cells)


# ---------------------------------------------------------------------------
# workload files


@dataclass
class Workload:
    seed: int | None
    cls: str | None
    requests: list[JobRequest]

    def to_json(self) -> dict:
        reqs = []
        for r in self.requests:
            c = r.cuboid
            reqs.append({"id": r.id, "w": c.w, "h": c.h, "l": c.l, "arrival": r.arrival})
        return {"seed": self.seed, "class": self.cls, "requests": reqs}

    @classmethod
    def from_json(cls, data: dict) -> "Workload":
        reqs = [JobRequest(int(r["id"]), Cuboid(int(r["w"]), int(r["h"]), int(r["l"])), int(r.get("arrival", 0)))
                for r in data["requests"]]
        return cls(data.get("seed"), data.get("class"), reqs)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path: str | Path) -> "Workload":
        return cls.from_json(json.loads(Path(path).read_text()))


def generate_instances(c: str, n: int, instances: int, seed: int) -> list[Workload]:
    """``instances`` workloads; each records its own seed, which regenerates it exactly."""
    if c not in CLASSES:
        raise ValueError(f"unknown class {c!r}; expected one of {', '.join(CLASS_NAMES)}")
    return [Workload(s, c, gen_class(c, n, np.random.default_rng(s))) for s in instance_seeds(seed, instances)]
