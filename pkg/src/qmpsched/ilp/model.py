"""Cuboid placement ILP with big-M separation constraints.

Variable names (stable, used by the LP writer and the solution reader):

* ``x_i``, ``y_i``, ``z_i`` -- origin of free job ``i`` (``0 <= i < n``)
* ``r_i`` -- 1 if free job ``i`` is rotated by 90 degrees (only for jobs
  whose two orientations differ and both fit)
* ``a_i_j``, ``b_i_j``, ``c_i_j`` -- 1 if item ``i`` lies entirely before
  item ``j`` along x, y, z; indices ``n .. n+m-1`` are the fixed items
* ``v`` -- makespan of the free jobs

For ``a_ij = 1`` the x-separation row forces ``w_i <= x_j - x_i``; for
``a_ij = 0`` it reduces to ``x_i - x_j + w_i <= W``, which the chip bound
``x_i + w_i <= W`` already implies (fixed items lie inside the chip too).
The same holds on y with ``H`` and on z with ``L``, where ``L`` covers
every fixed item and any stacking of the free jobs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from ..core import DefragBarrier
from ..geometry import Cuboid, PlacedCuboid

AXES = ("x", "y", "z")
SEP = {"x": "a", "y": "b", "z": "c"}
TOL = 1e-6


class JobDoesNotFit(ValueError):
    pass


@dataclass(frozen=True)
class Box:
    """Fixed half-open item.  A zero-length box (``z1 == z2``) is a relocation
    plane: anything straddling it over the footprint counts as overlapping."""

    x1: int
    y1: int
    z1: int
    x2: int
    y2: int
    z2: int
    id: int | None = None

    @classmethod
    def of(cls, p: PlacedCuboid) -> "Box":
        return cls(p.x1, p.y1, p.z1, p.x2, p.y2, p.z2, p.id)

    def lo(self, axis: int) -> int:
        return (self.x1, self.y1, self.z1)[axis]

    def hi(self, axis: int) -> int:
        return (self.x2, self.y2, self.z2)[axis]

    @property
    def volume(self) -> int:
        return (self.x2 - self.x1) * (self.y2 - self.y1) * (self.z2 - self.z1)


def barrier_boxes(barriers: Iterable[DefragBarrier]) -> list[Box]:
    return [Box(r.x1, r.y1, b.t, r.x2, r.y2, b.t) for b in barriers for r in b.regions]


@dataclass
class Row:
    name: str
    coefs: dict[str, int]
    sense: str  # "<=" or ">="
    rhs: int

    def satisfied(self, values: Mapping[str, float], tol: float = TOL) -> bool:
        lhs = sum(c * values[v] for v, c in self.coefs.items())
        if self.sense == "<=":
            return lhs <= self.rhs + tol
        return lhs >= self.rhs - tol


@dataclass
class IlpModel:
    jobs: list[Cuboid]  # base orientation, guaranteed to fit the chip
    ids: list[int]
    fixed: list[Box]
    sp: int
    W: int
    H: int
    L: int
    rotatable: list[bool]
    rows: list[Row] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)
    generals: list[str] = field(default_factory=list)
    lower: dict[str, int] = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def m(self) -> int:
        return len(self.fixed)

    @property
    def pair_binaries(self) -> list[str]:
        return [b for b in self.binaries if b[0] in "abc"]

    def dims(self, i: int, rotated: bool) -> Cuboid:
        c = self.jobs[i]
        return c.rotated() if rotated else c

    def row(self, name: str) -> Row:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)


def _size_terms(model: IlpModel, i: int, axis: str) -> tuple[int, dict[str, int]]:
    """(constant, variable terms) of job i's extent along ``axis``."""
    c = model.jobs[i]
    if axis == "z":
        return c.l, {}
    base, other = (c.w, c.h) if axis == "x" else (c.h, c.w)
    if model.rotatable[i] and other != base:
        return base, {f"r_{i}": other - base}
    return base, {}


def _add(terms: dict[str, int], var: str, coef: int) -> None:
    terms[var] = terms.get(var, 0) + coef
    if terms[var] == 0:
        del terms[var]


def build_model(batch: Sequence[Cuboid], fixed: Sequence[PlacedCuboid | Box], sp: int, W: int, H: int,
                rotate: bool = True, ids: Sequence[int] | None = None,
                barriers: Iterable[DefragBarrier] = ()) -> IlpModel:
    if not batch:
        raise ValueError("batch must be non-empty")
    jobs: list[Cuboid] = []
    rotatable: list[bool] = []
    for k, c in enumerate(batch):
        fits = c.orientations(W, H) if rotate else [o for o in [c] if o.w <= W and o.h <= H]
        if not fits:
            raise JobDoesNotFit(f"job cannot fit: {c.w}x{c.h} on a {W}x{H} chip")
        jobs.append(fits[0])
        rotatable.append(len(fits) == 2)
    boxes = [f if isinstance(f, Box) else Box.of(f) for f in fixed] + barrier_boxes(barriers)
    L = sum(c.l for c in jobs) + max((b.z2 for b in boxes), default=0) + sp
    model = IlpModel(jobs, list(ids) if ids is not None else list(range(len(jobs))), boxes,
                     sp, W, H, L, rotatable)
    n, m = model.n, model.m
    bound = {"x": W, "y": H, "z": L}

    for i in range(n):
        model.generals += [f"x_{i}", f"y_{i}", f"z_{i}"]
        model.lower[f"z_{i}"] = sp
        if rotatable[i]:
            model.binaries.append(f"r_{i}")
    model.generals.append("v")

    def coord(k: int, axis: str) -> tuple[int, dict[str, int]]:
        if k < n:
            return 0, {f"{axis}_{k}": 1}
        return model.fixed[k - n].lo(AXES.index(axis)), {}

    def size(k: int, axis: str) -> tuple[int, dict[str, int]]:
        if k < n:
            return _size_terms(model, k, axis)
        b = model.fixed[k - n]
        ax = AXES.index(axis)
        return b.hi(ax) - b.lo(ax), {}

    for i in range(n + m):
        for j in range(i + 1, n + m):
            if i >= n:  # both fixed: already disjoint
                continue
            names = []
            for axis in AXES:
                s = SEP[axis]
                for p, q in ((i, j), (j, i)):
                    var = f"{s}_{p}_{q}"
                    names.append(var)
                    model.binaries.append(var)
                    # size_p + M (s_pq - 1) <= coord_q - coord_p
                    cp, tp = coord(p, axis)
                    cq, tq = coord(q, axis)
                    sz, ts = size(p, axis)
                    terms: dict[str, int] = {}
                    for v, c in tp.items():
                        _add(terms, v, c)
                    for v, c in tq.items():
                        _add(terms, v, -c)
                    for v, c in ts.items():
                        _add(terms, v, c)
                    _add(terms, var, bound[axis])
                    rhs = bound[axis] - sz - cp + cq
                    model.rows.append(Row(f"s{axis}_{p}_{q}", terms, "<=", rhs))
            model.rows.insert(len(model.rows) - 6,
                              Row(f"d_{i}_{j}", {v: 1 for v in sorted(names, key=_pair_order)}, ">=", 1))

    for i in range(n):
        for axis in AXES:
            sz, ts = _size_terms(model, i, axis)
            terms = {f"{axis}_{i}": 1}
            for v, c in ts.items():
                _add(terms, v, c)
            model.rows.append(Row(f"b{axis}_{i}", terms, "<=", bound[axis] - sz))
    for i in range(n):
        model.rows.append(Row(f"mk_{i}", {f"z_{i}": 1, "v": -1}, "<=", -model.jobs[i].l))
    return model


def _pair_order(name: str) -> tuple:
    s, p, q = name.split("_")
    return ("abc".index(s), int(p) > int(q))


# ---------------------------------------------------------------------------
# assignments


def placements_from_values(model: IlpModel, values: Mapping[str, float]) -> list[PlacedCuboid]:
    out = []
    for i in range(model.n):
        rot = model.rotatable[i] and round(values.get(f"r_{i}", 0)) == 1
        c = model.dims(i, rot)
        out.append(PlacedCuboid.at(model.ids[i], c, round(values[f"x_{i}"]), round(values[f"y_{i}"]),
                                   round(values[f"z_{i}"])))
    return out


def _extent(model: IlpModel, k: int, placed: Sequence[PlacedCuboid]) -> tuple[int, ...]:
    if k < model.n:
        p = placed[k]
        return (p.x1, p.y1, p.z1, p.x2, p.y2, p.z2)
    b = model.fixed[k - model.n]
    return (b.x1, b.y1, b.z1, b.x2, b.y2, b.z2)


def values_from_placements(model: IlpModel, placed: Sequence[PlacedCuboid]) -> dict[str, int]:
    """Full variable assignment (positions, rotations, separations, v) for free-job placements."""
    vals: dict[str, int] = {}
    n = model.n
    for i, p in enumerate(placed):
        vals[f"x_{i}"], vals[f"y_{i}"], vals[f"z_{i}"] = p.x, p.y, p.z
        if model.rotatable[i]:
            vals[f"r_{i}"] = int((p.w, p.h) != (model.jobs[i].w, model.jobs[i].h))
    vals["v"] = max(p.z2 for p in placed)
    for i in range(n + model.m):
        for j in range(i + 1, n + model.m):
            if i >= n:
                continue
            ei, ej = _extent(model, i, placed), _extent(model, j, placed)
            for ax, axis in enumerate(AXES):
                s = SEP[axis]
                vals[f"{s}_{i}_{j}"] = int(ei[ax + 3] <= ej[ax])
                vals[f"{s}_{j}_{i}"] = int(ej[ax + 3] <= ei[ax])
    return vals


def violated_rows(model: IlpModel, values: Mapping[str, float], tol: float = TOL) -> list[str]:
    bad = [r.name for r in model.rows if not r.satisfied(values, tol)]
    for var, lo in model.lower.items():
        if values[var] < lo - tol:
            bad.append(f"lower:{var}")
    for var in model.generals:
        if values[var] < -tol:
            bad.append(f"nonneg:{var}")
    for var in model.binaries:
        if not (-tol <= values[var] <= 1 + tol):
            bad.append(f"binary:{var}")
    return bad


def geometric_violations(model: IlpModel, placed: Sequence[PlacedCuboid]) -> list[str]:
    """Direct check of the packing, independent of the row encoding."""
    bad = []
    for i, p in enumerate(placed):
        if p.x2 > model.W or p.y2 > model.H:
            bad.append(f"job {i} leaves the chip")
        if p.z1 < model.sp:
            bad.append(f"job {i} starts before the schedule point")
    for i in range(model.n):
        ei = _extent(model, i, placed)
        for j in range(i + 1, model.n + model.m):
            ej = _extent(model, j, placed)
            if all(ei[a] < ej[a + 3] and ej[a] < ei[a + 3] for a in range(3)):
                bad.append(f"items {i} and {j} overlap")
    return bad
