"""Gradient cuts, cut-pool assembly, and the outer-approximation loop.

The main loop alternates between a fixed-assignment NLP (upper bounds,
linearization points) and a MILP over the accumulated gradient cuts
(lower bounds, next assignment), terminating when the gap closes below
eps. Infeasible assignments contribute linearization points through the
feasibility subproblem instead of an upper bound. No objective cut is
added; the gap test alone decides termination.

Cut pools are always rebuilt from their linearization points at the
pool's parameter value, so carrying points to a new parameter
re-evaluates every cut there. For rows whose parameter enters only the
right-hand side, the rebuilt cut keeps its normal and shifts its rhs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .milp import MilpProblem, solve_milp
from .model import Point, ProblemInstance, SmoothFn, as_param
from .nlp import solve_nlp

_ZERO_NORMAL = 1e-12
_STALL_SHRINK = 1e-12
DEFAULT_EPS = 1e-6
DEFAULT_MAX_ITER = 500


class OaError(Exception):
    pass


class CutEvaluationError(OaError):
    """A constraint value or gradient came back non-finite."""

    def __init__(self, name: str, point: np.ndarray):
        self.name = name
        self.point = np.asarray(point)
        super().__init__(f"non-finite cut data for row '{name}' at {point}")


class InfeasibleParameterError(OaError):
    """A zero-gradient cut with positive value: no point satisfies the row."""

    def __init__(self, name: str, value: float):
        self.name = name
        self.value = value
        super().__init__(
            f"row '{name}' has zero gradient and positive value {value:.3e}; "
            "the parameter lies outside the feasible region"
        )


class OaStallError(OaError):
    """The MILP revisited an assignment without measurable gap progress."""

    def __init__(self, y: np.ndarray, gap: float):
        self.y = np.asarray(y)
        self.gap = gap
        super().__init__(
            f"assignment {y} revisited with gap {gap:.3e} not shrinking; "
            "numerical stall"
        )


@dataclass
class LinearizationPoint:
    point: Point
    source: str  # "nlp_optimal" | "nlp_feas" | "relaxation"
    lam: np.ndarray


@dataclass
class LinearCut:
    normal: np.ndarray  # over (x, y)
    rhs: float
    constraint: int  # index into g + h
    point_id: int  # index into the pool's point list
    lam: np.ndarray


@dataclass
class CutPool:
    points: list[LinearizationPoint]
    cuts: list[LinearCut]
    inst: ProblemInstance
    lam: np.ndarray

    @property
    def constraint_count(self) -> int:
        return len(self.cuts) + self.inst.num_static_rows


@dataclass
class TraceRow:
    iteration: int
    ub: float
    lb: float
    y: np.ndarray  # assignment chosen by this iteration's MILP
    nlp_feasible: bool  # whether this iteration's NLP was feasible


@dataclass
class OaRun:
    status: str  # "converged" | "iter_limit" | "infeasible"
    x: np.ndarray | None
    y: np.ndarray | None
    ub: float
    lb: float
    X: list[LinearizationPoint]
    oa_iterations: int
    nlp_solves: int
    milp_solves: int
    final_constraint_count: int
    trace: list[TraceRow] = field(default_factory=list)
    y_init: np.ndarray | None = None
    certificate: bool = False  # first MILP returned the feasible warm start


def gradient_cut(fn: SmoothFn, pt: Point, lam: np.ndarray,
                 constraint: int = -1, point_id: int = -1) -> LinearCut:
    """Linearize fn at pt: normal = grad, rhs = grad.pt - value."""
    z = pt.z
    val = fn.value(z, lam)
    normal = np.asarray(fn.grad(z, lam), dtype=float)
    if not np.isfinite(val) or not np.all(np.isfinite(normal)):
        raise CutEvaluationError(fn.name, z)
    rhs = float(normal @ z) - float(val)
    return LinearCut(normal=normal, rhs=rhs, constraint=constraint,
                     point_id=point_id, lam=np.asarray(lam, dtype=float).copy())


def assemble(X: list[LinearizationPoint], lam, inst: ProblemInstance) -> CutPool:
    """Build the cut pool for linearization points X at parameter lam.

    One cut per (point, nonlinear row) pair, re-evaluated at lam. A cut
    whose normal vanishes is vacuous when its row value is nonpositive
    and is dropped; with a positive value no (x, y) can satisfy the row,
    which raises InfeasibleParameterError.
    """
    lam = as_param(inst, lam)
    rows = list(inst.g) + list(inst.h)
    cuts: list[LinearCut] = []
    for pid, lp in enumerate(X):
        z = lp.point.z
        for ci, fn in enumerate(rows):
            cut = gradient_cut(fn, lp.point, lam, constraint=ci, point_id=pid)
            if np.max(np.abs(cut.normal)) < _ZERO_NORMAL:
                value = float(fn.value(z, lam))
                if value > 0.0:
                    raise InfeasibleParameterError(fn.name, value)
                continue
            cuts.append(cut)
    return CutPool(points=list(X), cuts=cuts, inst=inst, lam=lam)


def milp_problem(pool: CutPool) -> MilpProblem:
    """Master MILP over the pool's cuts plus the static linear rows.

    Rows with byte-identical normals are merged keeping the smallest
    rhs; the feasible set is unchanged and the master stays small when
    many points linearize the same affine row.
    """
    inst = pool.inst
    nz = inst.nz
    normals: list[np.ndarray] = []
    rhs: list[float] = []
    seen: dict[bytes, int] = {}

    def push(row: np.ndarray, h: float) -> None:
        key = row.tobytes()
        at = seen.get(key)
        if at is None:
            seen[key] = len(normals)
            normals.append(row)
            rhs.append(h)
        elif h < rhs[at]:
            rhs[at] = h

    for cut in pool.cuts:
        push(cut.normal, cut.rhs)
    if inst.num_static_rows:
        static = np.hstack([inst.A, inst.B])
        for i in range(static.shape[0]):
            push(static[i], float(inst.b[i]))

    G = np.vstack(normals) if normals else np.zeros((0, nz))
    h = np.array(rhs)
    c = np.concatenate([inst.c, inst.d])
    int_index = np.arange(inst.n, nz)
    return MilpProblem(c=c, G=G, h=h, lb=inst.lb.copy(), ub=inst.ub.copy(),
                       int_index=int_index)


def _check_y0(inst: ProblemInstance, y0) -> np.ndarray:
    y0 = np.asarray(y0, dtype=float)
    if y0.shape != (inst.m,):
        raise OaError(f"warm-start assignment has shape {y0.shape}, "
                      f"expected ({inst.m},)")
    if np.any(np.abs(y0 - np.round(y0)) > 1e-9):
        raise OaError(f"warm-start assignment {y0} is not integral")
    if np.any(y0 < inst.lb[inst.n:] - 1e-9) or np.any(y0 > inst.ub[inst.n:] + 1e-9):
        raise OaError(f"warm-start assignment {y0} violates integer bounds")
    return np.round(y0) + 0.0


def run_oa(
    inst: ProblemInstance,
    lam,
    y0=None,
    X0: list[LinearizationPoint] | None = None,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> OaRun:
    """Outer approximation at parameter lam from warm start (y0, X0).

    Terminates when UB - LB < eps. Returns the incumbent, the final
    linearization points (for warm-starting the next parameter), per
    iteration trace, and solve counters. A MILP with empty feasible set
    means the parameter itself is infeasible. Revisiting an assignment
    without gap progress raises OaStallError; exact OA cannot cycle, but
    floating point can.
    """
    lam = as_param(inst, lam)
    y = _check_y0(inst, inst.default_y_init if y0 is None else y0)
    y_init = y.copy()
    X = list(X0) if X0 else []

    ub, lb = np.inf, -np.inf
    x_best: np.ndarray | None = None
    y_best: np.ndarray | None = None
    nlp_solves = 0
    milp_solves = 0
    trace: list[TraceRow] = []
    visited: dict[tuple, float] = {}
    pool: CutPool | None = None
    first_nlp_feasible = False
    certificate = False

    for k in range(1, max_iter + 1):
        visited[tuple(y)] = ub - lb
        res = solve_nlp(inst, y, lam)
        nlp_solves += 1 + (1 if res.feas is not None else 0)
        feasible = res.status == "optimal"
        if k == 1:
            first_nlp_feasible = feasible
        if feasible:
            if res.objective < ub:
                ub = res.objective
                x_best, y_best = res.x.copy(), res.y.copy()
            px = res.x
        else:
            px = res.feas.x
        X.append(LinearizationPoint(point=Point(x=px.copy(), y=y.copy()),
                                    source="nlp_optimal" if feasible else "nlp_feas",
                                    lam=lam.copy()))

        try:
            pool = assemble(X, lam, inst)
        except InfeasibleParameterError:
            return OaRun("infeasible", x_best, y_best, ub, lb, X,
                         k, nlp_solves, milp_solves,
                         pool.constraint_count if pool else inst.num_static_rows,
                         trace, y_init, certificate)
        milp = solve_milp(milp_problem(pool),
                          cutoff=ub if np.isfinite(ub) else None)
        milp_solves += 1
        if milp.status == "cutoff":
            # no assignment beats the incumbent by more than the pruning
            # tolerance, so the gap is closed; the first master proving
            # this about a feasible warm start is the certificate case
            # (any master optimum ties the warm start's value)
            lb = max(lb, milp.bound)
            if k == 1 and first_nlp_feasible:
                certificate = True
            trace.append(TraceRow(k, ub, lb, y.copy(), feasible))
            return OaRun("converged", x_best, y_best, ub, lb, X,
                         k, nlp_solves, milp_solves, pool.constraint_count,
                         trace, y_init, certificate)
        if milp.status != "optimal":
            return OaRun("infeasible", x_best, y_best, ub, lb, X,
                         k, nlp_solves, milp_solves, pool.constraint_count,
                         trace, y_init, certificate)
        lb = milp.objective
        y_next = np.round(milp.x[inst.n:]) + 0.0
        trace.append(TraceRow(k, ub, lb, y_next.copy(), feasible))

        if k == 1 and first_nlp_feasible and np.array_equal(y_next, y_init):
            certificate = True

        if ub - lb < eps:
            return OaRun("converged", x_best, y_best, ub, lb, X,
                         k, nlp_solves, milp_solves, pool.constraint_count,
                         trace, y_init, certificate)

        key = tuple(y_next)
        if key in visited and not (visited[key] - (ub - lb) >= _STALL_SHRINK):
            raise OaStallError(y_next, ub - lb)
        y = y_next

    return OaRun("iter_limit", x_best, y_best, ub, lb, X,
                 max_iter, nlp_solves, milp_solves,
                 pool.constraint_count if pool else inst.num_static_rows,
                 trace, y_init, certificate)


__all__ = [
    "LinearizationPoint",
    "LinearCut",
    "CutPool",
    "TraceRow",
    "OaRun",
    "OaError",
    "CutEvaluationError",
    "InfeasibleParameterError",
    "OaStallError",
    "gradient_cut",
    "assemble",
    "milp_problem",
    "run_oa",
    "DEFAULT_EPS",
    "DEFAULT_MAX_ITER",
]
