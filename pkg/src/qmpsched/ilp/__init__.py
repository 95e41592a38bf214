"""ILP-based batch scheduler over the cuboid placement model."""

from __future__ import annotations

from ..core import ScheduleResult, Scheduler
from .lpformat import SolutionError, export_lp, import_solution, run_external
from .model import Box, IlpModel, JobDoesNotFit, build_model
from .solver import SolveResult, Status, solve_exact, stacking_fallback

__all__ = [
    "Box", "IlpModel", "IlpScheduler", "JobDoesNotFit", "SolutionError", "SolveResult", "Status",
    "build_model", "export_lp", "import_solution", "run_external", "solve_exact", "stacking_fallback",
]


class IlpScheduler(Scheduler):
    """Places a whole batch at once; reserved segments and live barriers enter as fixed items."""

    name = "ilp"

    def __init__(self, time_limit_ms: float | None = 2000, node_limit: int | None = None,
                 rotate: bool = True, external_solver: str | None = None):
        self.time_limit_ms = time_limit_ms
        self.node_limit = node_limit
        self.rotate = rotate
        self.external_solver = external_solver
        self.last: SolveResult | None = None

    def model_for(self, state, batch, sp) -> IlpModel:
        fixed = [s for s in state.segments() if s.z2 > sp]
        barriers = [b for b in state.barriers if b.t > sp]
        return build_model([j.cuboid for j in batch], fixed, sp, state.W, state.H,
                           rotate=self.rotate, ids=[j.id for j in batch], barriers=barriers)

    def schedule(self, state, batch, sp):
        model = self.model_for(state, batch, sp)
        if self.external_solver:
            placed = run_external(model, self.external_solver, self.time_limit_ms)
            return ScheduleResult(placed, status="External")
        self.last = solve_exact(model, self.time_limit_ms, self.node_limit)
        return ScheduleResult(self.last.placements, status=self.last.status.value)
