"""CPLEX-LP text export and solution import for external MILP solvers."""

from __future__ import annotations

import re
import shlex
import subprocess
import tempfile
from pathlib import Path

from ..geometry import PlacedCuboid
from .model import IlpModel, geometric_violations, placements_from_values, values_from_placements, violated_rows

_NUM = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


class SolutionError(ValueError):
    pass


def _expr(coefs: dict[str, int]) -> str:
    parts = []
    for k, (var, c) in enumerate(coefs.items()):
        sign = "-" if c < 0 else ("+" if k else "")
        mag = abs(c)
        term = var if mag == 1 else f"{mag} {var}"
        parts.append(f"{sign} {term}" if sign else term)
    return " ".join(parts)


def export_lp(model: IlpModel) -> str:
    lines = [
        f"\\ cuboid placement: {model.n} free, {model.m} fixed, chip {model.W}x{model.H}, sp {model.sp}, L {model.L}",
        "Minimize",
        " obj: v",
        "Subject To",
    ]
    for r in model.rows:
        lines.append(f" {r.name}: {_expr(r.coefs)} {r.sense} {r.rhs}")
    lines.append("Bounds")
    for var in model.generals:
        lo = model.lower.get(var, 0)
        lines.append(f" {var} >= {lo}")
    if model.binaries:
        lines.append("Binaries")
        lines.extend(f" {b}" for b in model.binaries)
    lines.append("Generals")
    lines.extend(f" {g}" for g in model.generals)
    lines.append("End")
    return "\n".join(lines) + "\n"


def parse_solution(text: str, names: set[str]) -> dict[str, float]:
    """Pick ``name value`` pairs out of a solver's solution listing.

    Accepts plain ``name value`` lines, ``name = value`` and column listings
    such as ``idx name value cost``; anything else is ignored.
    """
    values: dict[str, float] = {}
    for line in text.splitlines():
        toks = line.replace("=", " ").split()
        for k, tok in enumerate(toks[:-1]):
            if tok in names and _NUM.match(toks[k + 1]):
                values[tok] = float(toks[k + 1])
                break
    return values


def import_solution(model: IlpModel, text: str) -> list[PlacedCuboid]:
    required = {f"{a}_{i}" for i in range(model.n) for a in "xyz"}
    required |= {f"r_{i}" for i in range(model.n) if model.rotatable[i]}
    names = set(model.binaries) | set(model.generals)
    values = parse_solution(text, names)
    missing = sorted(required - values.keys())
    if missing:
        raise SolutionError(f"solution is missing variables: {', '.join(missing[:8])}")
    for var, val in values.items():
        if abs(val - round(val)) > 1e-6:
            raise SolutionError(f"variable {var} = {val} is not integral")
    placed = placements_from_values(model, values)
    full = values_from_placements(model, placed)
    # trust the solver's binaries where it reported them, derive the rest
    for var in model.binaries:
        if var in values:
            full[var] = round(values[var])
    bad = violated_rows(model, full) + geometric_violations(model, placed)
    if bad:
        raise SolutionError(f"claimed solution violates the model: {', '.join(bad[:8])}")
    return placed


def run_external(model: IlpModel, command: str, time_limit_ms: float | None = None,
                 workdir: str | Path | None = None) -> list[PlacedCuboid]:
    """Solve through a user-supplied command template.

    The template may use ``{lp}``, ``{sol}`` and ``{time_limit_s}``; if it
    has no ``{sol}`` the solution is read from standard output.
    """
    limit_s = "" if time_limit_ms is None else f"{time_limit_ms / 1000.0:g}"
    with tempfile.TemporaryDirectory(dir=workdir) as tmp:
        lp = Path(tmp) / "model.lp"
        sol = Path(tmp) / "model.sol"
        lp.write_text(export_lp(model))
        argv = [a.format(lp=lp, sol=sol, time_limit_s=limit_s) for a in shlex.split(command)]
        timeout = None if time_limit_ms is None else max(5.0, 3 * time_limit_ms / 1000.0)
        proc = subprocess.run(argv, capture_output=True, text=True, timeout=timeout)
        if proc.returncode != 0:
            raise SolutionError(f"external solver failed ({proc.returncode}): {proc.stderr.strip()[:400]}")
        text = sol.read_text() if "{sol}" in command else proc.stdout
    return import_solution(model, text)


def objective_of(placed: list[PlacedCuboid]) -> int:
    return max(p.z2 for p in placed) if placed else 0


__all__ = ["SolutionError", "export_lp", "import_solution", "parse_solution", "run_external"]
