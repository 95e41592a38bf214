"""Exact depth-first branch and bound for the cuboid placement model.

Every branch fixes one separation binary to 1 (or one rotation binary), so
a node is a system of difference constraints per axis.  Its least solution
(longest paths from the lower bounds) minimises every coordinate at once,
which gives both the node's makespan lower bound and a candidate packing.
If that packing has no overlap it is optimal for the node; otherwise the
search branches on one overlapping pair, over the six ways to separate it.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass

import numpy as np

from ..geometry import PlacedCuboid
from .model import IlpModel, geometric_violations, placements_from_values, values_from_placements, violated_rows


class Status(enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    TIMED_OUT = "TimedOut"


@dataclass
class SolveResult:
    placements: list[PlacedCuboid]
    status: Status
    objective: int
    nodes: int = 0
    elapsed_ms: float = 0.0


class _Node:
    __slots__ = ("orient", "lb", "ub", "edges", "ev")

    def __init__(self, orient, lb, ub, edges):
        self.orient = orient  # per job: None (undecided, base used), 0 or 1
        self.lb = lb  # [axis][job] lower bound of the origin
        self.ub = ub  # [axis][job] upper bound of the far face
        self.edges = edges  # [axis] -> frozenset of (p, q): coord_q >= coord_p + size_p
        self.ev = False  # cached evaluate() result; False = not computed

    def child(self):
        return _Node(list(self.orient), [list(a) for a in self.lb], [list(a) for a in self.ub],
                     list(self.edges))


class _Search:
    def __init__(self, model: IlpModel, deadline: float | None, node_limit: int | None):
        self.model = model
        self.n = model.n
        self.deadline = deadline
        self.node_limit = node_limit
        self.nodes = 0
        self.best_v: int | None = None
        self.best: list[tuple[int, int, int, int]] | None = None  # (x, y, z, rot)
        F = model.fixed
        self.F = np.array([(b.x1, b.y1, b.z1, b.x2, b.y2, b.z2) for b in F], dtype=np.int64).reshape(-1, 6)
        self.fvol = [b.volume for b in F]

    def sizes(self, node: _Node) -> list[list[int]]:
        sx, sy, sz = [], [], []
        for i, c in enumerate(self.model.jobs):
            w, h = (c.h, c.w) if node.orient[i] == 1 else (c.w, c.h)
            sx.append(w)
            sy.append(h)
            sz.append(c.l)
        return [sx, sy, sz]

    def evaluate(self, node: _Node):
        """Least solution per axis, or ('orient', job) / None when it cannot be trusted / is infeasible."""
        n = self.n
        size = self.sizes(node)
        est = []
        for ax in range(3):
            succ = [[] for _ in range(n)]
            indeg = [0] * n
            for p, q in node.edges[ax]:
                succ[p].append(q)
                indeg[q] += 1
            pos = list(node.lb[ax])
            pred_of: list[set[int]] = [set() for _ in range(n)]
            queue = [i for i in range(n) if indeg[i] == 0]
            seen = 0
            while queue:
                p = queue.pop()
                seen += 1
                for q in succ[p]:
                    pred_of[q] |= pred_of[p] | {p}
                    if pos[p] + size[ax][p] > pos[q]:
                        pos[q] = pos[p] + size[ax][p]
                    indeg[q] -= 1
                    if indeg[q] == 0:
                        queue.append(q)
            if seen < n:
                return None  # positive cycle
            for i in range(n):
                if pos[i] + size[ax][i] > node.ub[ax][i]:
                    if ax == 2:
                        return None
                    for k in [i, *sorted(pred_of[i])]:
                        if node.orient[k] is None and self.model.rotatable[k]:
                            return ("orient", k)
                    return None
            est.append(pos)
        return est, size

    def conflict(self, est, size, node: _Node):
        """Smallest-volume overlapping pair in the least solution, or None."""
        n = self.n
        lo = np.array(est, dtype=np.int64).T
        hi = lo + np.array(size, dtype=np.int64).T
        vol = [size[0][i] * size[1][i] * size[2][i] for i in range(n)]
        best = None
        for i in range(n):
            for j in range(i + 1, n):
                if np.all(lo[i] < hi[j]) and np.all(lo[j] < hi[i]):
                    key = (vol[i] + vol[j], i, j)
                    if best is None or key < best[0]:
                        best = (key, i, j)
        if len(self.F):
            F = self.F
            hit = ((lo[:, None, :] < F[None, :, 3:]) & (F[None, :, :3] < hi[:, None, :])).all(axis=2)
            for i, f in zip(*np.nonzero(hit)):
                key = (vol[i] + self.fvol[f], i, n + int(f))
                if best is None or key < best[0]:
                    best = (key, int(i), n + int(f))
        if best is None:
            return None
        return best[1], best[2]

    def children(self, node: _Node, i: int, j: int):
        n = self.n
        out = []
        for ax in range(3):
            if j < n:
                for p, q in ((i, j), (j, i)):
                    c = node.child()
                    c.edges[ax] = node.edges[ax] | {(p, q)}
                    out.append((ax, c))
            else:
                f = self.F[j - n]
                c = node.child()  # i before f
                c.ub[ax][i] = min(c.ub[ax][i], int(f[ax]))
                out.append((ax, c))
                c = node.child()  # f before i
                c.lb[ax][i] = max(c.lb[ax][i], int(f[ax + 3]))
                out.append((ax, c))
        return out

    def lower_bound(self, est, size) -> int:
        return max(est[2][i] + size[2][i] for i in range(self.n))

    def out_of_budget(self) -> bool:
        if self.node_limit is not None and self.nodes >= self.node_limit:
            return True
        return self.deadline is not None and time.perf_counter() >= self.deadline

    def run(self) -> bool:
        """Search; returns True if the tree was exhausted."""
        m = self.model
        n = self.n
        lb = [[0] * n, [0] * n, [m.sp] * n]
        ub = [[m.W] * n, [m.H] * n, [m.L] * n]
        root = _Node([None if m.rotatable[i] else 0 for i in range(n)], lb, ub,
                     [frozenset(), frozenset(), frozenset()])
        stack = [root]
        while stack:
            if self.out_of_budget():
                return False
            node = stack.pop()
            self.nodes += 1
            ev = node.ev if node.ev is not False else self.evaluate(node)
            if ev is None:
                continue
            if ev[0] == "orient":
                stack.extend(self._orient_children(node, ev[1]))
                continue
            est, size = ev
            bound = self.lower_bound(est, size)
            if self.best_v is not None and bound >= self.best_v:
                continue
            pair = self.conflict(est, size, node)
            if pair is None:
                self.best_v = bound
                self.best = [(est[0][i], est[1][i], est[2][i], 1 if node.orient[i] == 1 else 0)
                             for i in range(n)]
                continue
            i, j = pair
            undecided = [k for k in (i, j) if k < n and node.orient[k] is None]
            if undecided:
                stack.extend(self._orient_children(node, undecided[0]))
                continue
            scored = []
            for k, (ax, c) in enumerate(self.children(node, i, j)):
                cev = c.ev = self.evaluate(c)
                if cev is None:
                    continue
                if cev[0] == "orient":
                    scored.append((ax == 2, -1, k, c))
                    continue
                cb = self.lower_bound(*cev)
                if self.best_v is not None and cb >= self.best_v:
                    continue
                scored.append((ax == 2, cb, k, c))
            # spatial separations first, then by bound; the stack pops the last element first
            scored.sort(key=lambda s: (s[0], s[1], s[2]))
            stack.extend(c for *_, c in reversed(scored))
        return True

    def _orient_children(self, node: _Node, k: int):
        kids = []
        for o in (1, 0):  # pushed so that the base orientation is tried first
            c = node.child()
            c.orient[k] = o
            kids.append(c)
        return kids


def stacking_fallback(model: IlpModel) -> list[PlacedCuboid]:
    """Free jobs piled at (0, 0) above everything fixed."""
    z = max([model.sp] + [b.z2 for b in model.fixed])
    out = []
    for i, c in enumerate(model.jobs):
        out.append(PlacedCuboid.at(model.ids[i], c, 0, 0, z))
        z += c.l
    return out


def solve_exact(model: IlpModel, time_limit_ms: float | None = 2000, node_limit: int | None = None) -> SolveResult:
    t0 = time.perf_counter()
    deadline = None if time_limit_ms is None else t0 + time_limit_ms / 1000.0
    search = _Search(model, deadline, node_limit)
    exhausted = search.run()
    elapsed = (time.perf_counter() - t0) * 1000.0

    if search.best is None:
        placed = stacking_fallback(model)
        status = Status.TIMED_OUT
    else:
        placed = []
        for i, (x, y, z, rot) in enumerate(search.best):
            placed.append(PlacedCuboid.at(model.ids[i], model.dims(i, bool(rot)), x, y, z))
        status = Status.OPTIMAL if exhausted else Status.FEASIBLE

    # re-check through both the row encoding and direct geometry
    bad = violated_rows(model, values_from_placements(model, placed)) + geometric_violations(model, placed)
    if bad:
        raise AssertionError(f"solver produced an invalid packing: {bad[:5]}")
    return SolveResult(placed, status, max(p.z2 for p in placed), search.nodes, elapsed)


__all__ = ["SolveResult", "Status", "placements_from_values", "solve_exact", "stacking_fallback"]
