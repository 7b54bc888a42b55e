"""Dense primal simplex for box-constrained linear programs.

Solves

    min  c'x   s.t.  G x <= h,   lb <= x <= ub   (lb, ub finite)

with a bounded-variable tableau simplex. The entering column follows Bland's
rule (lowest eligible index); the leaving row uses a two-pass ratio test
that first bounds the step with every limit relaxed by a small slack and
then picks the largest pivot magnitude within that step, which keeps
degenerate near-zero pivots out of the basis. All remaining ties break on
the lowest index, so the solve path (and hence the returned vertex) is a
pure function of the input data. Phase I uses artificial variables on the
violated rows and its optimal value is the infeasibility certificate.

Re-solves of the same rows under changed variable bounds (branch and bound
nodes) can reuse the previous optimal basis: solve_lp(..., warm=...) runs
dual simplex from that basis and falls back to the cold primal path on any
breakdown, so the warm route never changes what is solvable, only how fast.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_AT_LB, _AT_UB, _BASIC = 0, 1, 2
_PIVOT_MIN = 1e-11
_OPT_TOL = 1e-9
_FEAS_TOL = 1e-8
_TIE_TOL = 1e-12
_RELAX = 1e-9  # ratio-test bound slack; basics may overshoot by at most this


class LpError(Exception):
    pass


class LpPivotError(LpError):
    """Pivot magnitude below 1e-11; carries the offending column index."""

    def __init__(self, column: int, magnitude: float):
        self.column = column
        self.magnitude = magnitude
        super().__init__(
            f"numerically degenerate pivot in column {column} "
            f"(|pivot| = {magnitude:.3e} < {_PIVOT_MIN:.0e})"
        )


class LpNumericalError(LpError):
    pass


@dataclass
class LpProblem:
    c: np.ndarray
    G: np.ndarray
    h: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.c.shape[0]
        if self.G is None or np.size(self.G) == 0:
            self.G = np.zeros((0, n))
            self.h = np.zeros(0)
        self.G = np.atleast_2d(np.asarray(self.G, dtype=float))
        self.h = np.atleast_1d(np.asarray(self.h, dtype=float))
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        if self.G.shape[1] != n or self.G.shape[0] != self.h.shape[0]:
            raise LpError("row block shape mismatch")
        if self.lb.shape != (n,) or self.ub.shape != (n,):
            raise LpError("bound arrays must match objective length")
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise LpError("variable bounds must be finite")
        if np.any(self.lb > self.ub + 1e-12):
            raise LpError("lb > ub")


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible"
    x: np.ndarray | None
    objective: float | None
    pivots: int = 0
    warm: WarmBasis | None = None


@dataclass
class _Dict:
    """Mutable simplex state over the working matrix M = [G | I]."""

    M: np.ndarray
    rhs: np.ndarray
    lbv: np.ndarray
    ubv: np.ndarray
    T: np.ndarray = None
    xB: np.ndarray = None
    basis: np.ndarray = None
    status: np.ndarray = None
    barred: np.ndarray = None  # columns excluded from entering (artificials)
    pivots: int = 0

    def nb_values(self) -> np.ndarray:
        v = np.where(self.status == _AT_UB, self.ubv, self.lbv)
        v[self.basis] = 0.0
        return v

    def refactor(self):
        """Recompute T and xB from the basis by direct solves."""
        B = self.M[:, self.basis]
        try:
            self.T = np.linalg.solve(B, self.M)
            self.xB = np.linalg.solve(B, self.rhs - self.M @ self.nb_values())
        except np.linalg.LinAlgError as exc:
            raise LpNumericalError(f"singular basis: {exc}") from exc

    def values(self) -> np.ndarray:
        v = self.nb_values()
        v[self.basis] = self.xB
        return v


def _price(d: _Dict, cvec: np.ndarray) -> np.ndarray:
    return cvec - cvec[d.basis] @ d.T


_REFACTOR_EVERY = 40


def _iterate(d: _Dict, cvec: np.ndarray, max_pivots: int,
             refactor_every: int = _REFACTOR_EVERY) -> None:
    """Run primal simplex to optimality for the objective cvec."""
    red = _price(d, cvec)
    free_range = d.ubv - d.lbv > 0
    since_refactor = 0
    while True:
        if since_refactor >= refactor_every:
            # tableau updates drift over long pivot runs; rebuild exactly
            d.refactor()
            red = _price(d, cvec)
            since_refactor = 0
        enter_lb = (d.status == _AT_LB) & (red < -_OPT_TOL)
        enter_ub = (d.status == _AT_UB) & (red > _OPT_TOL)
        cand = (enter_lb | enter_ub) & ~d.barred & free_range
        idx = np.flatnonzero(cand)
        if idx.size == 0:
            return
        q = int(idx[0])  # Bland: lowest eligible index
        dirn = 1.0 if d.status[q] == _AT_LB else -1.0

        w = d.T[:, q]
        we = dirn * w
        base_lb = d.lbv[d.basis]
        base_ub = d.ubv[d.basis]
        with np.errstate(divide="ignore", invalid="ignore"):
            t_dn = np.where(we > _PIVOT_MIN, (d.xB - base_lb) / we, np.inf)
            t_up = np.where(we < -_PIVOT_MIN, (base_ub - d.xB) / (-we), np.inf)
            # pass 1: largest step if every bound may flex by _RELAX
            h_dn = np.where(we > _PIVOT_MIN, (d.xB - base_lb + _RELAX) / we, np.inf)
            h_up = np.where(we < -_PIVOT_MIN, (base_ub + _RELAX - d.xB) / (-we), np.inf)
        ratios = np.minimum(t_dn, t_up)
        ratios = np.maximum(ratios, 0.0)  # clamp tiny negatives from roundoff
        t_max = float(np.min(np.minimum(h_dn, h_up))) if ratios.size else np.inf
        t_max = max(t_max, 0.0)
        t_flip = float(d.ubv[q] - d.lbv[q])

        if t_max == np.inf and t_flip == np.inf:
            nz = np.abs(w) > 0
            if np.any(nz) and float(np.max(np.abs(w[nz]))) < _PIVOT_MIN:
                raise LpPivotError(q, float(np.max(np.abs(w[nz]))))
            raise LpNumericalError(
                f"unbounded direction in column {q}; box should prevent this"
            )

        if t_flip <= t_max:
            # bound flip, no basis change
            d.xB = d.xB - we * t_flip
            d.status[q] = _AT_UB if dirn > 0 else _AT_LB
        else:
            # pass 2: among rows blocking within the relaxed step, pivot on
            # the largest magnitude; lowest basic index only breaks ties
            # inside that group
            rows = np.flatnonzero(ratios <= t_max)
            mag = np.abs(we[rows])
            rows = rows[mag >= 0.1 * float(np.max(mag))]
            leave = int(rows[np.argmin(d.basis[rows])])
            pe = w[leave]
            if abs(pe) < _PIVOT_MIN:
                raise LpPivotError(q, abs(pe))
            lv = d.basis[leave]
            step = ratios[leave]
            # move basics, then swap q in / lv out
            d.xB = d.xB - we * step
            enter_val = (d.lbv[q] if dirn > 0 else d.ubv[q]) + dirn * step
            prow = d.T[leave, :] / pe
            d.T -= np.outer(d.T[:, q], prow)
            d.T[leave, :] = prow
            d.T[:, q] = 0.0
            d.T[leave, q] = 1.0
            red = red - red[q] * prow
            red[q] = 0.0
            d.status[lv] = _AT_LB if we[leave] > 0 else _AT_UB
            d.status[q] = _BASIC
            d.basis[leave] = q
            d.xB[leave] = enter_val
            since_refactor += 1
        d.pivots += 1
        if d.pivots > max_pivots:
            raise LpNumericalError(f"pivot limit {max_pivots} exceeded")


@dataclass
class WarmBasis:
    """Optimal basis snapshot (in scaled space) for restarting a re-bounded LP."""

    basis: np.ndarray
    status: np.ndarray


def _scale(problem: LpProblem) -> tuple[LpProblem, np.ndarray]:
    """Max-norm equilibrate rows then columns; returns (scaled, col scale)."""
    rs = np.maximum(np.abs(problem.G).max(axis=1), 1e-12)
    G = problem.G / rs[:, None]
    h = problem.h / rs
    colmax = np.abs(G).max(axis=0)
    cs = 1.0 / np.where(colmax > 0.0, colmax, 1.0)
    scaled = LpProblem(problem.c * cs, G * cs[None, :], h,
                       problem.lb / cs, problem.ub / cs)
    return scaled, cs


def solve_lp(problem: LpProblem, max_pivots: int = 200000,
             warm: WarmBasis | None = None,
             keep_basis: bool = False) -> LpResult:
    """Solve the LP; returns a vertex solution on optimality.

    Raises LpPivotError / LpNumericalError on numerical breakdown; returns
    status "infeasible" when Phase I terminates with positive row violation.

    Rows and columns are max-norm equilibrated before pivoting so that the
    fixed pivot and tie tolerances act relative to the data scale; both
    transformations are exact reformulations and the reported solution is
    mapped back to the original variables.

    The tableau is refactorized periodically; if the fast path still ends
    in a numerical breakdown (drift can make a dependent column look like
    a valid pivot), the solve is repeated once with an exact
    refactorization after every pivot.

    `warm` may carry the optimal basis of a previous solve of the SAME
    rows (G, h, c) under different variable bounds; the solve then runs
    dual simplex from that basis and falls back to a cold solve on any
    breakdown. `keep_basis` attaches a WarmBasis snapshot to the result
    (result.warm) when the solve ends cleanly; the snapshot is only
    meaningful for re-solves with identical rows.
    """
    if problem.G.shape[0] == 0:
        res = _solve_core(problem, max_pivots)
        res.warm = None
        return res
    scaled, cs = _scale(problem)
    res = None
    if warm is not None:
        # a useful warm basis resolves in a few dual pivots; give up early
        # (degenerate dual cycling included) and let the cold path decide
        budget = min(max_pivots, 6 * (problem.G.shape[0] + problem.c.shape[0]) + 100)
        try:
            res = _dual_core(scaled, warm, budget)
        except (LpPivotError, LpNumericalError):
            res = None  # cold fallback below
    if res is None:
        try:
            res = _solve_core(scaled, max_pivots, keep_basis=keep_basis)
        except (LpPivotError, LpNumericalError):
            res = _solve_core(scaled, max_pivots, refactor_every=1,
                              keep_basis=keep_basis)
    if res.status != "optimal":
        return res
    x = np.clip(cs * res.x, problem.lb, problem.ub)
    out = LpResult("optimal", x, float(problem.c @ x), res.pivots)
    out.warm = res.warm
    return out


def _dual_iterate(d: _Dict, cvec: np.ndarray, max_pivots: int,
                  refactor_every: int = _REFACTOR_EVERY) -> None:
    """Dual simplex from a dual-feasible basis with out-of-bounds basics.

    Leaving row: most violated basic (lowest row index on ties). Entering:
    minimum dual ratio among sign-admissible nonbasics, lowest index on
    ties; an entering variable that would cross its own opposite bound is
    bound-flipped instead (no basis change). Raises on breakdown or when a
    violated row has no admissible entering column (primal infeasible or
    numerics; the caller re-solves cold either way).
    """
    red = _price(d, cvec)
    width = d.ubv - d.lbv
    since_refactor = 0
    while True:
        if since_refactor >= refactor_every:
            d.refactor()
            red = _price(d, cvec)
            since_refactor = 0
        lo = d.lbv[d.basis] - d.xB
        hi = d.xB - d.ubv[d.basis]
        vio = np.maximum(lo, hi)
        r = int(np.argmax(vio))
        if vio[r] <= _FEAS_TOL:
            return
        below = lo[r] >= hi[r]
        sigma = 1.0 if below else -1.0
        arow = sigma * d.T[r, :]
        can = ((d.status == _AT_LB) & (arow < -_PIVOT_MIN)) | \
              ((d.status == _AT_UB) & (arow > _PIVOT_MIN))
        can &= width > 0
        cidx = np.flatnonzero(can)
        if cidx.size == 0:
            raise LpNumericalError(
                f"no admissible entering column for violated row {r}"
            )
        th = np.maximum(red[cidx] / (-arow[cidx]), 0.0)
        q = int(cidx[int(np.argmin(th))])
        pe = d.T[r, q]
        if abs(pe) < 10 * _PIVOT_MIN:
            raise LpPivotError(q, abs(pe))
        lv = d.basis[r]
        target = d.lbv[lv] if below else d.ubv[lv]
        delta_q = (d.xB[r] - target) / pe

        wq = width[q]
        flip = np.isfinite(wq) and (
            (d.status[q] == _AT_LB and delta_q > wq)
            or (d.status[q] == _AT_UB and delta_q < -wq)
        )
        if flip:
            # entering would cross its far bound first: flip it there and
            # pick a fresh entering for the still-violated row
            if d.status[q] == _AT_LB:
                d.xB = d.xB - d.T[:, q] * wq
                d.status[q] = _AT_UB
            else:
                d.xB = d.xB + d.T[:, q] * wq
                d.status[q] = _AT_LB
        else:
            start_val = d.lbv[q] if d.status[q] == _AT_LB else d.ubv[q]
            d.xB = d.xB - d.T[:, q] * delta_q
            prow = d.T[r, :] / pe
            d.T -= np.outer(d.T[:, q], prow)
            d.T[r, :] = prow
            d.T[:, q] = 0.0
            d.T[r, q] = 1.0
            red = red - red[q] * prow
            red[q] = 0.0
            d.status[lv] = _AT_LB if below else _AT_UB
            d.status[q] = _BASIC
            d.basis[r] = q
            d.xB[r] = start_val + delta_q
            since_refactor += 1
        d.pivots += 1
        if d.pivots > max_pivots:
            raise LpNumericalError(f"dual pivot limit {max_pivots} exceeded")


def _dual_core(problem: LpProblem, warm: WarmBasis, max_pivots: int) -> LpResult:
    """Re-solve a re-bounded LP from a prior optimal basis (scaled space)."""
    n = problem.c.shape[0]
    r = problem.G.shape[0]
    ncols = n + r
    basis = np.asarray(warm.basis, dtype=int)
    status = np.asarray(warm.status, dtype=int)
    if basis.shape != (r,) or status.shape != (ncols,) or np.any(basis >= ncols):
        raise LpNumericalError("warm basis does not match the problem shape")

    d = _Dict(M=np.hstack([problem.G, np.eye(r)]), rhs=problem.h.copy(),
              lbv=np.concatenate([problem.lb, np.zeros(r)]),
              ubv=np.concatenate([problem.ub, np.full(r, np.inf)]))
    d.basis = basis.copy()
    d.status = status.copy()
    d.status[d.basis] = _BASIC
    d.barred = np.zeros(ncols, dtype=bool)
    d.refactor()
    cvec = np.concatenate([problem.c, np.zeros(r)])
    _dual_iterate(d, cvec, max_pivots)

    d.refactor()
    red = _price(d, cvec)
    fixed = d.ubv - d.lbv <= 0
    ok_lb = (d.status != _AT_LB) | (red >= -_OPT_TOL) | fixed
    ok_ub = (d.status != _AT_UB) | (red <= _OPT_TOL) | fixed
    if not np.all(ok_lb & ok_ub):
        raise LpNumericalError("warm-start solve lost dual feasibility")
    scale = max(1.0, float(np.max(np.abs(problem.h), initial=1.0)))
    bvio = np.maximum(d.lbv[d.basis] - d.xB, d.xB - d.ubv[d.basis])
    if float(np.max(bvio, initial=0.0)) > _FEAS_TOL * scale:
        raise LpNumericalError("warm-start solve left a basic out of bounds")
    vals = d.values()
    x = vals[:n]
    resid = problem.G @ x - problem.h
    if np.any(resid > _FEAS_TOL * scale):
        raise LpNumericalError(
            f"warm-start basis violates rows by {float(np.max(resid)):.3e}"
        )
    x = np.clip(x, problem.lb, problem.ub)
    return LpResult("optimal", x, float(problem.c @ x), d.pivots,
                    WarmBasis(d.basis.copy(), d.status.copy()))


def _solve_core(problem: LpProblem, max_pivots: int,
                refactor_every: int = _REFACTOR_EVERY,
                keep_basis: bool = False) -> LpResult:
    n = problem.c.shape[0]
    r = problem.G.shape[0]
    ncols = n + r

    M = np.hstack([problem.G, np.eye(r)]) if r else np.zeros((0, n))
    lbv = np.concatenate([problem.lb, np.zeros(r)])
    ubv = np.concatenate([problem.ub, np.full(r, np.inf)])

    d = _Dict(M=M, rhs=problem.h.copy(), lbv=lbv, ubv=ubv)
    d.basis = np.arange(n, n + r)
    d.status = np.full(ncols, _AT_LB, dtype=int)
    d.status[d.basis] = _BASIC
    d.barred = np.zeros(ncols, dtype=bool)
    d.T = M.copy()
    d.xB = problem.h - problem.G @ problem.lb if r else np.zeros(0)

    if r == 0:
        # pure box problem: each variable sits at the bound favored by c
        x = np.where(problem.c >= 0, problem.lb, problem.ub)
        return LpResult("optimal", x, float(problem.c @ x), 0)

    viol = d.xB < -_TIE_TOL
    if np.any(viol):
        # Phase I: artificial column -e_i on each violated row
        art_rows = np.flatnonzero(viol)
        Art = np.zeros((r, art_rows.size))
        Art[art_rows, np.arange(art_rows.size)] = -1.0
        d.M = np.hstack([d.M, Art])
        d.T = np.hstack([d.T, Art.copy()])
        d.lbv = np.concatenate([d.lbv, np.zeros(art_rows.size)])
        d.ubv = np.concatenate([d.ubv, np.full(art_rows.size, np.inf)])
        d.status = np.concatenate(
            [d.status, np.full(art_rows.size, _AT_LB, dtype=int)]
        )
        d.barred = np.concatenate([d.barred, np.zeros(art_rows.size, dtype=bool)])
        art_cols = np.arange(ncols, ncols + art_rows.size)
        for i, row in enumerate(art_rows):
            d.status[d.basis[row]] = _AT_LB  # displaced slack leaves at zero
            d.basis[row] = art_cols[i]
            d.status[art_cols[i]] = _BASIC
            d.xB[row] = -d.xB[row]
            d.T[row, :] *= -1.0  # basis column is -e_row, so B^-1 negates the row
        c1 = np.zeros(d.M.shape[1])
        c1[art_cols] = 1.0
        _iterate(d, c1, max_pivots, refactor_every)
        d.refactor()
        infeas = float(np.sum(d.values()[art_cols]))
        if infeas > _FEAS_TOL * max(1.0, float(np.max(np.abs(problem.h), initial=1.0))):
            return LpResult("infeasible", None, None, d.pivots)
        # pivot residual artificials out of the basis where possible
        for i, row in enumerate(np.flatnonzero(np.isin(d.basis, art_cols))):
            choices = np.flatnonzero(np.abs(d.T[row, :ncols]) > 1e-9)
            choices = choices[d.status[choices] != _BASIC]
            if choices.size:
                q = int(choices[0])
                pe = d.T[row, q]
                prow = d.T[row, :] / pe
                d.T -= np.outer(d.T[:, q], prow)
                d.T[row, :] = prow
                d.T[:, q] = 0.0
                d.T[row, q] = 1.0
                old = d.basis[row]
                d.status[old] = _AT_LB
                d.status[q] = _BASIC
                d.basis[row] = q
        # freeze artificials at zero for Phase II
        d.ubv[art_cols] = 0.0
        d.barred[art_cols] = True
        d.refactor()

    c2 = np.zeros(d.M.shape[1])
    c2[:n] = problem.c
    for attempt in range(3):
        _iterate(d, c2, max_pivots, refactor_every)
        d.refactor()  # clean basic values before the optimality audit
        red = _price(d, c2)
        fixed = d.ubv - d.lbv <= 0
        ok_lb = (d.status != _AT_LB) | (red >= -_OPT_TOL) | d.barred | fixed
        ok_ub = (d.status != _AT_UB) | (red <= _OPT_TOL) | d.barred | fixed
        if np.all(ok_lb & ok_ub):
            break
    else:
        raise LpNumericalError("could not certify optimality after refactoring")

    vals = d.values()
    x = vals[:n]
    resid = problem.G @ x - problem.h if r else np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(problem.h), initial=1.0)))
    if np.any(resid > _FEAS_TOL * scale):
        raise LpNumericalError(
            f"optimal basis violates rows by {float(np.max(resid)):.3e}"
        )
    warm_out = None
    if keep_basis and bool(np.all(d.basis < ncols)):
        # snapshot only when no artificial stayed basic
        warm_out = WarmBasis(d.basis.copy(), d.status[:ncols].copy())
    x = np.clip(x, problem.lb, problem.ub)
    return LpResult("optimal", x, float(problem.c @ x), d.pivots, warm_out)
