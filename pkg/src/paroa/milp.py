"""Best-bound branch and bound over the LP solver in paroa.lp.

The master problems produced by outer approximation are pure LPs plus
integrality on the y block, so this is a plain B&B: no presolve, no cut
generation, no heuristics. Determinism contract:

* node selection: best LP bound, ties broken by insertion order;
* branch variable: most fractional, ties broken by lowest index;
* each node's children are evaluated eagerly and pushed with their own
  LP values; node_count counts solved node LPs including the root.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .lp import LpProblem, LpResult, solve_lp

_INT_TOL = 1e-6
_PRUNE_TOL = 1e-9


class MilpError(Exception):
    pass


class NodeLimitError(MilpError):
    """Raised when the node budget is exhausted; carries the best incumbent."""

    def __init__(self, limit: int, incumbent=None, objective=None):
        self.limit = limit
        self.incumbent = incumbent
        self.objective = objective
        super().__init__(f"branch-and-bound node limit {limit} reached")


class BranchError(MilpError):
    pass


@dataclass
class MilpProblem:
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    int_index: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        self.int_index = np.asarray(self.int_index, dtype=int)


@dataclass(order=True)
class Node:
    sort_key: tuple = field(compare=True)
    lb: np.ndarray = field(compare=False, default=None)
    ub: np.ndarray = field(compare=False, default=None)
    lp_value: float = field(compare=False, default=np.inf)
    lp_x: np.ndarray = field(compare=False, default=None)
    order: int = field(compare=False, default=0)
    depth: int = field(compare=False, default=0)
    warm: object = field(compare=False, default=None)  # parent LP basis


@dataclass
class MilpResult:
    status: str  # "optimal" | "infeasible" | "cutoff"
    x: np.ndarray | None
    objective: float | None
    node_count: int = 0
    bound: float | None = None  # valid lower bound on the true optimum


def _fractional(x: np.ndarray, int_index: np.ndarray, tol: float = _INT_TOL):
    """Indices and distances-to-integer of fractional integer variables."""
    vals = x[int_index]
    dist = np.abs(vals - np.round(vals))
    mask = dist > tol
    return int_index[mask], dist[mask]


def branch(node: Node, var: int) -> tuple[Node, Node]:
    """Split node on integer variable `var` at its LP value (floor / ceil).

    The children inherit the node's bound arrays; their LP data is not yet
    evaluated. Raises BranchError when the variable is not fractional in
    the node's LP solution.
    """
    if node.lp_x is None:
        raise BranchError("node has no LP solution to branch on")
    v = node.lp_x[var]
    if abs(v - round(v)) <= _INT_TOL:
        raise BranchError(f"variable {var} is integral ({v}) in this node")
    down = Node(sort_key=node.sort_key, lb=node.lb.copy(), ub=node.ub.copy(),
                depth=node.depth + 1)
    up = Node(sort_key=node.sort_key, lb=node.lb.copy(), ub=node.ub.copy(),
              depth=node.depth + 1)
    down.ub[var] = np.floor(v)
    up.lb[var] = np.ceil(v)
    return down, up


def solve_milp(
    problem: MilpProblem,
    node_limit: int = 100_000,
    int_tol: float = _INT_TOL,
    cutoff: float | None = None,
) -> MilpResult:
    """Solve min c'z s.t. Gz <= h, lb <= z <= ub, z_i integer for i in int_index.

    `cutoff` seeds the incumbent value without an incumbent point: subtrees
    whose LP bound cannot beat it are pruned. If the search finishes with no
    solution below the cutoff (and the root LP was feasible), the result has
    status "cutoff" and `bound` = cutoff - 1e-9, which is a valid lower
    bound on the true optimum because every pruned or discarded node sat at
    or above it. With cutoff=None the search is exhaustive as before.
    """
    order = 0
    nodes_solved = 0
    heap: list[Node] = []
    inc_x = None
    inc_val = np.inf if cutoff is None else float(cutoff)

    def evaluate(lo, hi, depth, warm=None) -> Node | None:
        nonlocal order, nodes_solved
        if np.any(lo > hi + 1e-12):
            return None
        res = solve_lp(LpProblem(problem.c, problem.G, problem.h, lo, np.maximum(lo, hi)),
                       warm=warm, keep_basis=True)
        nodes_solved += 1
        if res.status != "optimal":
            return None
        node = Node(sort_key=(res.objective, order), lb=lo, ub=hi,
                    lp_value=res.objective, lp_x=res.x, order=order, depth=depth,
                    warm=res.warm)
        order += 1
        return node

    root = evaluate(problem.lb.copy(), problem.ub.copy(), 0)
    if root is None:
        return MilpResult("infeasible", None, None, nodes_solved)
    heapq.heappush(heap, root)

    while heap:
        node = heapq.heappop(heap)
        if node.lp_value >= inc_val - _PRUNE_TOL:
            break  # best bound can no longer improve the incumbent
        frac_idx, frac_dist = _fractional(node.lp_x, problem.int_index, int_tol)
        if frac_idx.size == 0:
            if node.lp_value < inc_val - _PRUNE_TOL:
                inc_val = node.lp_value
                inc_x = node.lp_x.copy()
            continue
        # most fractional variable, lowest index on ties
        best = np.max(frac_dist)
        var = int(np.min(frac_idx[frac_dist >= best - 1e-12]))
        if nodes_solved + 2 > node_limit:
            raise NodeLimitError(node_limit, inc_x, None if inc_x is None else inc_val)
        down, up = branch(node, var)
        for child in (evaluate(down.lb, down.ub, down.depth, node.warm),
                      evaluate(up.lb, up.ub, up.depth, node.warm)):
            if child is not None and child.lp_value < inc_val - _PRUNE_TOL:
                heapq.heappush(heap, child)

    if inc_x is None:
        if cutoff is not None:
            # root was feasible, nothing beat the cutoff
            return MilpResult("cutoff", None, None, nodes_solved,
                              bound=float(cutoff) - _PRUNE_TOL)
        return MilpResult("infeasible", None, None, nodes_solved)

    # polish: fix the integer block exactly and re-solve for the x part
    y_fix = np.round(inc_x[problem.int_index])
    lo, hi = problem.lb.copy(), problem.ub.copy()
    lo[problem.int_index] = y_fix
    hi[problem.int_index] = y_fix
    res = solve_lp(LpProblem(problem.c, problem.G, problem.h, lo, hi))
    if res.status == "optimal":
        return MilpResult("optimal", res.x, res.objective, nodes_solved)
    x = inc_x.copy()
    x[problem.int_index] = y_fix
    return MilpResult("optimal", x, float(problem.c @ x), nodes_solved)
