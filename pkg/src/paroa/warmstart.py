"""Sequence driver and the four initialization rules for parameter sweeps.

A sweep solves the same instance at a list of parameter values, threading
warm-start state from each solved problem into the next:

* baseline: ignore previous work; solve the continuous relaxation, cut at
  its optimum, and let an initialization MILP pick the starting
  assignment;
* restart (rule 1): keep only the previous optimal assignment, drop all
  linearization points;
* cut tightening (rule 2): keep the previous assignment and all
  linearization points; their cuts are re-evaluated at the new parameter
  inside the OA run;
* point based (rule 3): re-solve the NLP (or feasibility) subproblem at
  the new parameter for each distinct assignment among the carried
  points, and start from those fresh linearization points.

Failures on one parameter are recorded in that row and the sweep
continues with the last good warm-start state.
"""

from __future__ import annotations

import enum
import logging
import time
from dataclasses import dataclass, field

import numpy as np

from .milp import MilpError, solve_milp
from .model import Point, ProblemInstance, as_param
from .nlp import NlpError, solve_nlp, solve_relaxation
from .oa import (
    DEFAULT_EPS,
    DEFAULT_MAX_ITER,
    LinearizationPoint,
    OaStallError,
    assemble,
    milp_problem,
    run_oa,
)

log = logging.getLogger(__name__)


class Rule(enum.Enum):
    BASELINE = "relaxation"
    RESTART = "rule1"
    CUT_TIGHTENING = "rule2"
    POINT_BASED = "rule3"


@dataclass
class WarmStart:
    """Initialization handed to one OA run, plus the solves it cost."""

    X: list[LinearizationPoint]
    y: np.ndarray | None
    nlp_solves: int = 0
    milp_solves: int = 0
    infeasible: bool = False


@dataclass
class SequenceRow:
    param: np.ndarray
    status: str
    objective: float
    y: np.ndarray | None
    oa_iterations: int
    nlp_solves: int
    milp_solves: int
    final_constraint_count: int
    wall_ms: float


@dataclass
class SequenceReport:
    instance: str
    rule: Rule
    eps: float
    rows: list[SequenceRow] = field(default_factory=list)
    incumbents: list[Point | None] = field(default_factory=list)


def rule_baseline(inst: ProblemInstance, lam) -> WarmStart:
    """Relaxation point plus one MILP over its cuts to pick the start."""
    lam = as_param(inst, lam)
    rel = solve_relaxation(inst, lam)
    if rel.status != "optimal":
        return WarmStart(X=[], y=None, nlp_solves=1, infeasible=True)
    pt = LinearizationPoint(point=Point(x=rel.x.copy(), y=rel.y.copy()),
                            source="relaxation", lam=lam.copy())
    pool = assemble([pt], lam, inst)
    res = solve_milp(milp_problem(pool))
    if res.status != "optimal":
        return WarmStart(X=[pt], y=None, nlp_solves=1, milp_solves=1,
                         infeasible=True)
    y = np.round(res.x[inst.n:]) + 0.0
    return WarmStart(X=[pt], y=y, nlp_solves=1, milp_solves=1)


def rule_restart(X_prev: list[LinearizationPoint], y_star) -> WarmStart:
    """Keep the previous optimal assignment, discard every cut."""
    return WarmStart(X=[], y=None if y_star is None else np.asarray(y_star, float).copy())


def rule_cut_tighten(X_prev: list[LinearizationPoint], y_star) -> WarmStart:
    """Carry the linearization points; cuts are rebuilt at the new parameter."""
    return WarmStart(X=list(X_prev),
                     y=None if y_star is None else np.asarray(y_star, float).copy())


def rule_point_based(X_prev: list[LinearizationPoint], y_star,
                     inst: ProblemInstance, lam_next) -> WarmStart:
    """Re-solve each carried assignment at the new parameter.

    Assignments are processed in order of first appearance among the
    carried points and solved once each; the NLP solution (or the
    feasibility minimizer when the assignment is infeasible there)
    becomes the new linearization point.
    """
    lam_next = as_param(inst, lam_next)
    seen: set[tuple] = set()
    X_new: list[LinearizationPoint] = []
    nlp_solves = 0
    for lp in X_prev:
        key = tuple(np.round(lp.point.y).tolist())
        if key in seen:
            continue
        seen.add(key)
        try:
            res = solve_nlp(inst, lp.point.y, lam_next, x0=lp.point.x)
        except NlpError as exc:
            log.warning("point-based rule: assignment %s skipped at %s: %s",
                        lp.point.y, lam_next, exc)
            nlp_solves += 2
            continue
        nlp_solves += 1 + (1 if res.feas is not None else 0)
        px = res.x if res.status == "optimal" else res.feas.x
        X_new.append(LinearizationPoint(
            point=Point(x=px.copy(), y=np.asarray(lp.point.y, float).copy()),
            source="nlp_optimal" if res.status == "optimal" else "nlp_feas",
            lam=lam_next.copy()))
    return WarmStart(X=X_new,
                     y=None if y_star is None else np.asarray(y_star, float).copy(),
                     nlp_solves=nlp_solves)


def prepare_warmstart(rule: Rule, inst: ProblemInstance, lam, first: bool,
                      X_prev: list[LinearizationPoint], y_prev) -> WarmStart:
    """Dispatch one rule: initialization for the problem at lam.

    `first` marks the first problem of a sweep, which starts from
    (no cuts, y_prev) under every rule except the baseline.
    """
    if rule is Rule.BASELINE:
        return rule_baseline(inst, lam)
    if first:
        return WarmStart(X=[], y=None if y_prev is None else np.asarray(y_prev, float).copy())
    if rule is Rule.RESTART:
        return rule_restart(X_prev, y_prev)
    if rule is Rule.CUT_TIGHTENING:
        return rule_cut_tighten(X_prev, y_prev)
    if rule is Rule.POINT_BASED:
        return rule_point_based(X_prev, y_prev, inst, lam)
    raise ValueError(f"unknown rule {rule!r}")


def run_sequence(
    inst: ProblemInstance,
    lam_list,
    rule: Rule,
    y_init=None,
    eps: float = DEFAULT_EPS,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SequenceReport:
    """Solve inst at every parameter in lam_list, warm-starting per rule.

    The first problem starts from (empty cuts, y_init) except under the
    baseline rule, which always builds its own start. Each row carries
    the OA counters plus whatever solves its rule initialization cost.
    """
    lam_list = [as_param(inst, lam) for lam in lam_list]
    if not lam_list:
        raise ValueError("lam_list must be nonempty")
    if y_init is None:
        y_init = inst.default_y_init
    report = SequenceReport(instance=inst.name, rule=rule, eps=eps)
    X_carry: list[LinearizationPoint] = []
    y_carry = np.asarray(y_init, dtype=float)

    for i, lam in enumerate(lam_list):
        t0 = time.perf_counter()
        ws = prepare_warmstart(rule, inst, lam, i == 0, X_carry, y_carry)
        status = None
        run = None
        if ws.infeasible:
            status = "infeasible"
        else:
            try:
                run = run_oa(inst, lam, y0=ws.y, X0=ws.X, eps=eps,
                             max_iter=max_iter)
                status = run.status
            except (OaStallError, NlpError, MilpError) as exc:
                log.warning("sweep %s rule %s at %s failed: %s",
                            inst.name, rule.value, lam, exc)
                status = "stall" if isinstance(exc, OaStallError) else "error"
        wall_ms = (time.perf_counter() - t0) * 1e3

        if run is not None:
            row = SequenceRow(
                param=lam.copy(), status=status,
                objective=run.ub if run.y is not None else np.inf,
                y=None if run.y is None else run.y.copy(),
                oa_iterations=run.oa_iterations,
                nlp_solves=run.nlp_solves + ws.nlp_solves,
                milp_solves=run.milp_solves + ws.milp_solves,
                final_constraint_count=run.final_constraint_count,
                wall_ms=wall_ms)
        else:
            row = SequenceRow(
                param=lam.copy(), status=status, objective=np.inf, y=None,
                oa_iterations=0, nlp_solves=ws.nlp_solves,
                milp_solves=ws.milp_solves, final_constraint_count=0,
                wall_ms=wall_ms)
        report.rows.append(row)

        if run is not None and run.y is not None:
            report.incumbents.append(Point(x=run.x.copy(), y=run.y.copy()))
        else:
            report.incumbents.append(None)

        if run is not None and status in ("converged", "iter_limit"):
            X_carry = run.X
            if run.y is not None:
                y_carry = run.y
    return report


__all__ = [
    "Rule",
    "WarmStart",
    "SequenceRow",
    "SequenceReport",
    "rule_baseline",
    "rule_restart",
    "rule_cut_tighten",
    "rule_point_based",
    "prepare_warmstart",
    "run_sequence",
]
