"""Brute-force reference solver via exhaustive integer enumeration.

Every integer assignment inside the instance's integer bound box is
classified with the feasibility subproblem (threshold 1e-8) and, when
feasible, solved as a continuous restriction. The best objective wins;
ties go to the lexicographically smallest assignment.

Two exact shortcuts keep desk-scale enumeration fast without changing
any decision:

* rows that reduce to constants at a fixed assignment (integer-only
  rows) already decide infeasibility when their maximum exceeds the
  threshold, since the feasibility optimum can only be larger;
* assignments whose reduced x-problems are byte-identical (same linear
  rhs, same reduced quadratic data, no general rows) share one solve.
  The continuous part of the optimum and its feasibility classification
  are properties of the reduced problem alone.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import Point, ProblemInstance, as_param
from .nlp import FEAS_TOL, _fixed_y_blocks, solve_nlp

_TIE_TOL = 1e-9


class OracleError(Exception):
    pass


class AssignmentOverflowError(OracleError):
    """Integer box too large to enumerate; restrict the sub-box and retry."""

    def __init__(self, count: int, limit: int):
        self.count = count
        self.limit = limit
        super().__init__(
            f"integer box holds {count} assignments, limit is {limit}; "
            "re-run on an instance with a restricted integer sub-box"
        )


@dataclass
class OracleResult:
    status: str  # "optimal" | "infeasible"
    point: Point | None
    objective: float
    assignments: int
    table: list = field(default_factory=list)  # rows (y, feasible, objective)


def _box_iter(lo: np.ndarray, hi: np.ndarray):
    ranges = [range(int(a), int(b) + 1) for a, b in zip(lo, hi)]
    idx = np.ndindex(*[len(r) for r in ranges])
    for ix in idx:
        yield np.array([r[i] for r, i in zip(ranges, ix)], dtype=float)


def enumerate_solve(
    inst: ProblemInstance,
    lam=None,
    max_assignments: int = 200_000,
    table_path: str | None = None,
) -> OracleResult:
    """Exhaustively solve inst at lam over its integer bound box.

    Raises AssignmentOverflowError when the box holds more than
    max_assignments assignments. Optionally dumps the per-assignment
    table to table_path as CSV for debugging.
    """
    lam = as_param(inst, inst.default_param if lam is None else lam)
    n, m = inst.n, inst.m
    lo, hi = inst.lb[n:], inst.ub[n:]
    count = int(np.prod(hi - lo + 1.0))
    if count > max_assignments:
        raise AssignmentOverflowError(count, max_assignments)

    cache: dict[bytes, tuple[bool, float, np.ndarray]] = {}
    best_obj = np.inf
    best_pt: Point | None = None
    table = []
    xprev = None

    for y in _box_iter(lo, hi):
        A, b, quad, smooth, consts = _fixed_y_blocks(inst, y, lam)
        cmax = float(np.max(consts)) if consts.size else -np.inf
        if cmax > FEAS_TOL:
            # a row without x dependence is violated; r >= cmax regardless of x
            table.append((y.copy(), False, np.inf))
            continue

        key = None
        if not smooth:
            parts = [b.tobytes()]
            if quad is not None:
                parts += [quad[1].tobytes(), quad[2].tobytes()]
            key = b"|".join(parts)

        if key is not None and key in cache:
            feasible, cobj, cx = cache[key]
            obj = cobj + float(inst.d @ y) if feasible else np.inf
            table.append((y.copy(), feasible, obj))
        else:
            # solve_nlp owns the feasibility verdict: it cross-checks the
            # feasibility phase against the restricted solve, so a single
            # overestimated residual cannot mislabel an assignment
            res = solve_nlp(inst, y, lam, x0=xprev)
            xprev = res.x
            if res.status != "optimal":
                feasible, obj, cx = False, np.inf, res.x
            else:
                feasible, cx = True, res.x
                obj = res.objective
            table.append((y.copy(), feasible, obj))
            if key is not None:
                cache[key] = (feasible, obj - float(inst.d @ y), cx)

        if feasible and obj < best_obj - _TIE_TOL:
            best_obj = obj
            best_pt = Point(x=cx.copy(), y=y.copy())

    if table_path is not None:
        _dump_table(table_path, table)

    if best_pt is None:
        return OracleResult("infeasible", None, np.inf, count, table)
    return OracleResult("optimal", best_pt, best_obj, count, table)


def _dump_table(path: str, table) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("y,feasible,objective\n")
        for y, feasible, obj in table:
            ystr = " ".join("%g" % v for v in y)
            fh.write(f"{ystr},{int(feasible)},{obj!r}\n")


__all__ = [
    "OracleResult",
    "OracleError",
    "AssignmentOverflowError",
    "enumerate_solve",
]
