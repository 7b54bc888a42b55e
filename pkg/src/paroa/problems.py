"""Builders for the benchmark problem families.

Every builder returns a ProblemInstance; nothing here knows about the
solver. Families:

* example1 / example2: two tiny instances with known optima, used as
  golden tests throughout the suite;
* ti4 / ti14: epigraph scalarizations of two biobjective toy problems
  (one linear objective minimized, the other bounded by the parameter);
* slr: best-subset ridge regression with big-M binaries, data from a
  semicolon-delimited CSV;
* mpc: finite-horizon tracking control with gridded inputs, matrices
  from a plain-text data file, plus the closed-loop driver that feeds
  each step's end state back in as the next parameter.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .model import Point, ProblemInstance, SmoothFn
from .oa import DEFAULT_EPS, DEFAULT_MAX_ITER, run_oa
from .warmstart import (
    Rule,
    SequenceReport,
    SequenceRow,
    prepare_warmstart,
)


class ProblemError(Exception):
    """Base class for problem construction errors."""


class DataFileError(ProblemError):
    """A data file is missing, malformed, or inconsistent."""


class ConfigError(ProblemError):
    """A configuration value violates a builder precondition."""


_DATA_DIR = Path(__file__).parent / "data"


def _pad(lo: float, hi: float, frac: float = 0.1) -> tuple[float, float]:
    # Widen an interval by frac of its width on each side (epigraph bounds).
    w = hi - lo
    return lo - frac * w, hi + frac * w


# ---------------------------------------------------------------------------
# Worked examples
# ---------------------------------------------------------------------------

def build_example1() -> ProblemInstance:
    """Two variables, one quadratic row, one linear row, no parameter.

    min -2x - y  s.t.  3x^2 + 2y^2 - 2xy + 3x - 4y <= 5.3,
                       -10x + y <= 4,  x, y in [-2, 10],  y integer.
    """
    quad = SmoothFn.from_quadratic(
        np.array([[6.0, -2.0], [-2.0, 4.0]]),
        np.array([3.0, -4.0]),
        -5.3,
        name="bowl",
    )
    return ProblemInstance(
        n=1, m=1, k=0,
        c=np.array([-2.0]), d=np.array([-1.0]),
        g=[], h=[quad],
        A=np.array([[-10.0]]), B=np.array([[1.0]]), b=np.array([4.0]),
        lb=np.array([-2.0, -2.0]), ub=np.array([10.0, 10.0]),
        name="example1",
        default_param=np.zeros(0),
        default_y_init=np.array([2.0]),
    )


def build_example2(lam: float = 1.0) -> ProblemInstance:
    """Disc of parametrized radius intersected with an ellipse and a line.

    min -x  s.t.  x^2 + (y-1)^2 <= 1 + lam,  x^2/4 + 4y^2 <= 1,
                  3x + y <= 3,  x, y in [-2, 2],  y integer.
    """
    disc = SmoothFn.from_quadratic(
        np.array([[2.0, 0.0], [0.0, 2.0]]),
        np.array([0.0, -2.0]),
        0.0,
        b_row=np.array([1.0]),
        name="disc",
    )
    ellipse = SmoothFn.from_quadratic(
        np.array([[0.5, 0.0], [0.0, 8.0]]),
        np.zeros(2),
        -1.0,
        name="ellipse",
    )
    return ProblemInstance(
        n=1, m=1, k=1,
        c=np.array([-1.0]), d=np.array([0.0]),
        g=[disc], h=[ellipse],
        A=np.array([[3.0]]), B=np.array([[1.0]]), b=np.array([3.0]),
        lb=np.array([-2.0, -2.0]), ub=np.array([2.0, 2.0]),
        param_lb=np.array([-2.0]), param_ub=np.array([2.0]),
        name="example2",
        default_param=np.array([float(lam)]),
        default_y_init=np.array([0.0]),
    )


# ---------------------------------------------------------------------------
# Biobjective scalarizations (epigraph variable t, budget row on the
# second criterion)
# ---------------------------------------------------------------------------

_TI_NZ = 9  # z = (t, x1..x4, y1..y4)
_TI_CENTERS = ((2.0, 5.0), (3.0, 8.0))  # integer-ball centers
_TI_RSQ = 10.0


def _ball(i: int, j: int, ci: float, cj: float, rsq: float,
          name: str) -> SmoothFn:
    # (z_i - ci)^2 + (z_j - cj)^2 <= rsq
    P = np.zeros((_TI_NZ, _TI_NZ))
    P[i, i] = P[j, j] = 2.0
    q = np.zeros(_TI_NZ)
    q[i], q[j] = -2.0 * ci, -2.0 * cj
    return SmoothFn.from_quadratic(P, q, ci * ci + cj * cj - rsq, name=name)


def _ti_balls() -> list[SmoothFn]:
    (c1, c2), (c3, c4) = _TI_CENTERS
    return [
        _ball(1, 2, 0.0, 0.0, 1.0, "xball1"),
        _ball(3, 4, 0.0, 0.0, 1.0, "xball2"),
        _ball(5, 6, c1, c2, _TI_RSQ, "yball1"),
        _ball(7, 8, c3, c4, _TI_RSQ, "yball2"),
    ]


def _ti_bounds(integer_box: str) -> tuple[np.ndarray, np.ndarray]:
    tlo, thi = _pad(-80.0, 80.0)
    lb = np.concatenate([[tlo], np.full(4, -20.0), np.full(4, -20.0)])
    ub = np.concatenate([[thi], np.full(4, 20.0), np.full(4, 20.0)])
    if integer_box == "tight":
        # Integer feasibility forces each y pair into its ball, so the
        # lattice box around the centers is exhaustive.
        r = math.sqrt(_TI_RSQ)
        cs = [c for pair in _TI_CENTERS for c in pair]
        lb[5:] = [math.ceil(c - r) for c in cs]
        ub[5:] = [math.floor(c + r) for c in cs]
    elif integer_box != "full":
        raise ConfigError(f"integer_box must be 'full' or 'tight', got {integer_box!r}")
    return lb, ub


def build_ti4(lam: float = 10.5, integer_box: str = "full") -> ProblemInstance:
    """First biobjective toy: both criteria linear; budget on the second.

    min t  s.t.  x1+x3+y1+y3 <= t,  x2+x4+y2+y4 <= lam,
                 two unit x-balls, two radius-sqrt(10) integer balls.
    """
    lb, ub = _ti_bounds(integer_box)
    budget = SmoothFn.from_affine(
        np.array([0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0]),
        0.0,
        b_row=np.array([1.0]),
        name="budget",
    )
    return ProblemInstance(
        n=5, m=4, k=1,
        c=np.array([1.0, 0.0, 0.0, 0.0, 0.0]), d=np.zeros(4),
        g=[budget], h=_ti_balls(),
        A=np.array([[-1.0, 1.0, 0.0, 1.0, 0.0]]),
        B=np.array([[1.0, 0.0, 1.0, 0.0]]),
        b=np.array([0.0]),
        lb=lb, ub=ub,
        param_lb=np.array([5.1]), param_ub=np.array([10.5]),
        name="ti4",
        default_param=np.array([float(lam)]),
        default_y_init=np.array([2.0, 5.0, 3.0, 8.0]),
    )


def build_ti14(lam: float = 7.0, integer_box: str = "full") -> ProblemInstance:
    """Second biobjective toy: the budgeted criterion has an exp term.

    min t  s.t.  x1+x3+y1+exp(y3)-1 <= lam,  x2+x4+y2+y4 <= t,
                 same four balls as ti4.
    """
    lb, ub = _ti_bounds(integer_box)

    def value_fn(z, lam):
        return float(z[1] + z[3] + z[5] + np.exp(z[7]) - 1.0 - lam[0])

    def grad_fn(z, lam):
        grad = np.zeros(_TI_NZ)
        grad[1] = grad[3] = grad[5] = 1.0
        grad[7] = np.exp(z[7])
        return grad

    def hess_fn(z, lam):
        H = np.zeros((_TI_NZ, _TI_NZ))
        H[7, 7] = np.exp(z[7])
        return H

    budget = SmoothFn(value_fn, grad_fn, hess_fn=hess_fn,
                      b_row=np.array([1.0]), name="budget")
    return ProblemInstance(
        n=5, m=4, k=1,
        c=np.array([1.0, 0.0, 0.0, 0.0, 0.0]), d=np.zeros(4),
        g=[budget], h=_ti_balls(),
        A=np.array([[-1.0, 0.0, 1.0, 0.0, 1.0]]),
        B=np.array([[0.0, 1.0, 0.0, 1.0]]),
        b=np.array([0.0]),
        lb=lb, ub=ub,
        param_lb=np.array([-3.0]), param_ub=np.array([7.0]),
        name="ti14",
        default_param=np.array([float(lam)]),
        default_y_init=np.array([2.0, 5.0, 3.0, 8.0]),
    )


# ---------------------------------------------------------------------------
# Sparse ridge regression with big-M binaries
# ---------------------------------------------------------------------------

@dataclass
class SlrConfig:
    """Data and knobs for the best-subset regression family.

    `parameter` picks which knob the sweep varies: "ridge" makes the
    ridge weight the function parameter of the misfit row (its gradient
    depends on the parameter, so cuts must be re-evaluated, not just
    shifted); "cardinality" freezes the ridge weight at `lam` and makes
    the subset-size budget the (rhs-shifting) parameter instead.
    """

    A: np.ndarray
    b: np.ndarray
    kappa: int
    lam: float
    l: np.ndarray | None = None
    u: np.ndarray | None = None
    parameter: str = "ridge"


def default_slr_bounds(A: np.ndarray, b: np.ndarray,
                       lam_floor: float = 0.01) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric big-M box: 10x the sup-norm of the dense ridge solution.

    The ridge system is solved at lam_floor so the box stays valid for
    every larger ridge weight (shrinkage only pulls coefficients in).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    n = A.shape[1]
    x_ridge = np.linalg.solve(A.T @ A + lam_floor * np.eye(n), A.T @ b)
    big = 10.0 * float(np.max(np.abs(x_ridge)))
    if big <= 0.0:
        raise ConfigError("ridge solution is identically zero; set bounds explicitly")
    return np.full(n, -big), np.full(n, big)


def load_wine_csv(path, standardize: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Read a semicolon-delimited table: 11 feature columns + target.

    Returns (A, b) with b the last column, unscaled. With standardize,
    each feature column is centered and scaled to unit variance.
    """
    import csv

    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh, delimiter=";")
        try:
            header = next(reader)
        except StopIteration:
            raise DataFileError(f"{path}: empty file") from None
        if len(header) != 12:
            raise DataFileError(
                f"{path}: expected 12 semicolon-separated columns, "
                f"got {len(header)} in the header"
            )
        rows = []
        for lineno, rec in enumerate(reader, start=2):
            if not rec:
                continue
            if len(rec) != 12:
                raise DataFileError(
                    f"{path}: row {lineno}: expected 12 fields, got {len(rec)}"
                )
            try:
                rows.append([float(s) for s in rec])
            except ValueError:
                raise DataFileError(
                    f"{path}: row {lineno}: non-numeric field"
                ) from None
    if not rows:
        raise DataFileError(f"{path}: no data rows")
    M = np.array(rows, dtype=float)
    A, b = M[:, :11], M[:, 11]
    if standardize:
        sd = A.std(axis=0)
        if np.any(sd == 0.0):
            cols = np.flatnonzero(sd == 0.0).tolist()
            raise DataFileError(f"{path}: constant feature column(s) {cols}")
        A = (A - A.mean(axis=0)) / sd
    return A, b


def default_wine_path() -> Path:
    return _DATA_DIR / "winequality_red_synth.csv"


def build_slr(cfg: SlrConfig) -> ProblemInstance:
    """Epigraph t, n coefficients x, n on/off binaries y.

    min t  s.t.  0.5||Ax-b||^2 + (w/2)||x||^2 <= t,
                 l_i y_i <= x_i <= u_i y_i,  sum(y) <= kappa.
    """
    A = np.atleast_2d(np.asarray(cfg.A, dtype=float))
    bvec = np.atleast_1d(np.asarray(cfg.b, dtype=float))
    if A.shape[0] != bvec.shape[0]:
        raise ConfigError(
            f"data has {A.shape[0]} rows but target has {bvec.shape[0]}"
        )
    nf = A.shape[1]
    kappa = int(cfg.kappa)
    if not 1 <= kappa <= nf:
        raise ConfigError(f"kappa={kappa} outside [1, {nf}]")
    if cfg.lam < 0.0:
        raise ConfigError(f"ridge weight must be nonnegative, got {cfg.lam}")
    if cfg.parameter not in ("ridge", "cardinality"):
        raise ConfigError(f"parameter must be 'ridge' or 'cardinality', "
                          f"got {cfg.parameter!r}")
    if (cfg.l is None) != (cfg.u is None):
        raise ConfigError("set both bounds or neither")
    if cfg.l is None:
        lo, hi = default_slr_bounds(A, bvec)
    else:
        lo = np.asarray(cfg.l, dtype=float)
        hi = np.asarray(cfg.u, dtype=float)
    if lo.shape != (nf,) or hi.shape != (nf,):
        raise ConfigError("coefficient bounds must have one entry per feature")
    if not (np.all(lo < 0.0) and np.all(hi > 0.0)):
        raise ConfigError("coefficient bounds must straddle zero (l < 0 < u)")

    n = 1 + nf  # t plus coefficients
    nz = n + nf
    G = A.T @ A
    Atb = A.T @ bvec
    btb = float(bvec @ bvec)

    def misfit_row(weight: float | None) -> SmoothFn:
        # weight None: ridge weight is the run parameter (lam[0]).
        if weight is not None:
            P = np.zeros((nz, nz))
            P[1:n, 1:n] = G + float(weight) * np.eye(nf)
            q = np.zeros(nz)
            q[0] = -1.0
            q[1:n] = -Atb
            return SmoothFn.from_quadratic(P, q, 0.5 * btb, name="misfit")

        def value_fn(z, lam):
            x = z[1:n]
            return float(0.5 * (x @ G @ x) - Atb @ x + 0.5 * btb
                         + 0.5 * lam[0] * (x @ x) - z[0])

        def grad_fn(z, lam):
            grad = np.zeros(nz)
            grad[0] = -1.0
            grad[1:n] = G @ z[1:n] - Atb + lam[0] * z[1:n]
            return grad

        def hess_fn(z, lam):
            H = np.zeros((nz, nz))
            H[1:n, 1:n] = G + lam[0] * np.eye(nf)
            return H

        return SmoothFn(value_fn, grad_fn, hess_fn=hess_fn, name="misfit")

    # Big-M switch rows: x_i - u_i y_i <= 0 and -x_i + l_i y_i <= 0.
    A_st = np.zeros((2 * nf, n))
    B_st = np.zeros((2 * nf, nf))
    for i in range(nf):
        A_st[2 * i, 1 + i] = 1.0
        B_st[2 * i, i] = -hi[i]
        A_st[2 * i + 1, 1 + i] = -1.0
        B_st[2 * i + 1, i] = lo[i]
    b_st = np.zeros(2 * nf)

    if cfg.parameter == "ridge":
        g_rows = [misfit_row(None)]
        h_rows = []
        A_st = np.vstack([A_st, np.zeros((1, n))])
        B_st = np.vstack([B_st, np.ones((1, nf))])
        b_st = np.append(b_st, float(kappa))
        param_lb, param_ub = np.array([0.0]), np.array([20.0])
        default_param = np.array([float(cfg.lam)])
    else:
        g_rows = [SmoothFn.from_affine(
            np.concatenate([np.zeros(n), np.ones(nf)]), 0.0,
            b_row=np.array([1.0]), name="cardinality")]
        h_rows = [misfit_row(cfg.lam)]
        param_lb, param_ub = np.array([1.0]), np.array([float(nf)])
        default_param = np.array([float(kappa)])

    tlo, thi = _pad(0.0, 0.5 * btb)
    lb = np.concatenate([[tlo], lo, np.zeros(nf)])
    ub = np.concatenate([[thi], hi, np.ones(nf)])
    return ProblemInstance(
        n=n, m=nf, k=1,
        c=np.concatenate([[1.0], np.zeros(nf)]), d=np.zeros(nf),
        g=g_rows, h=h_rows,
        A=A_st, B=B_st, b=b_st,
        lb=lb, ub=ub,
        param_lb=param_lb, param_ub=param_ub,
        name=f"slr-{cfg.parameter}",
        default_param=default_param,
        default_y_init=np.zeros(nf),
    )


# ---------------------------------------------------------------------------
# Finite-horizon tracking control with gridded inputs
# ---------------------------------------------------------------------------

@dataclass
class MpcConfig:
    """Plant matrices, tracking weights, horizon, and the input grid."""

    A: np.ndarray
    B: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    x_r: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    x0: np.ndarray
    N: int = 4
    u_min: float = -0.5
    du: float = 0.5
    u_max: float = 2.0
    sims: int = 15

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def levels(self) -> int:
        return int(round((self.u_max - self.u_min) / self.du)) + 1


def _check_psd(M: np.ndarray, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if not np.allclose(M, M.T, atol=1e-12):
        raise ConfigError(f"{name} must be symmetric")
    if float(np.linalg.eigvalsh(M)[0]) < -1e-9:
        raise ConfigError(f"{name} must be positive semidefinite")
    return M


def load_mpc_matrices(path) -> dict[str, np.ndarray]:
    """Parse the plain-text matrix file: `name rows cols` then values.

    '#' starts a comment; entries may span lines. Vectors use cols=1.
    """
    path = Path(path)
    tokens: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tokens.extend(line.split("#", 1)[0].split())
    out: dict[str, np.ndarray] = {}
    pos = 0
    while pos < len(tokens):
        name = tokens[pos]
        try:
            rows, cols = int(tokens[pos + 1]), int(tokens[pos + 2])
        except (IndexError, ValueError):
            raise DataFileError(
                f"{path}: entry {name!r}: expected 'name rows cols' header"
            ) from None
        count = rows * cols
        vals = tokens[pos + 3: pos + 3 + count]
        if len(vals) < count:
            raise DataFileError(
                f"{path}: entry {name!r}: expected {count} values, "
                f"got {len(vals)}"
            )
        try:
            arr = np.array([float(v) for v in vals]).reshape(rows, cols)
        except ValueError:
            raise DataFileError(
                f"{path}: entry {name!r}: non-numeric value"
            ) from None
        out[name] = arr[:, 0] if cols == 1 else arr
        pos += 3 + count
    return out


def default_mpc_path() -> Path:
    return _DATA_DIR / "mpc_quadcopter.txt"


def load_mpc_config(path=None, N: int = 4, sims: int = 15) -> MpcConfig:
    """Build an MpcConfig from a matrix file (vendored plant by default)."""
    entries = load_mpc_matrices(default_mpc_path() if path is None else path)
    need = ("A", "B", "Q", "R", "xr", "xmin", "xmax", "x0")
    missing = [k for k in need if k not in entries]
    if missing:
        raise DataFileError(f"matrix file is missing entries: {missing}")
    return MpcConfig(
        A=entries["A"], B=entries["B"],
        Q=entries["Q"], R=entries["R"],
        x_r=entries["xr"], x_min=entries["xmin"], x_max=entries["xmax"],
        x0=entries["x0"], N=N, sims=sims,
    )


def build_mpc(cfg: MpcConfig, x0=None) -> ProblemInstance:
    """Epigraph t, stacked states x_1..x_N, input-level integers z_0..z_{N-1}.

    The initial state is the run parameter: the step-0 dynamics rows are
    affine in (x_1, z_0) with the parameter entering only their right-hand
    sides. Later steps are static linear rows. Inputs are u = u_min + du*z.
    """
    Ad = np.asarray(cfg.A, dtype=float)
    Bd = np.asarray(cfg.B, dtype=float)
    nx, nu = cfg.n_x, cfg.n_u
    if Ad.shape != (nx, nx) or Bd.shape != (nx, nu):
        raise ConfigError("plant matrices have inconsistent shapes")
    Q = _check_psd(cfg.Q, "Q")
    R = _check_psd(cfg.R, "R")
    if Q.shape != (nx, nx) or R.shape != (nu, nu):
        raise ConfigError("weight matrices have inconsistent shapes")
    span = cfg.u_max - cfg.u_min
    if cfg.du <= 0.0 or abs(span / cfg.du - round(span / cfg.du)) > 1e-9:
        raise ConfigError("input grid must divide [u_min, u_max] evenly")
    N = int(cfg.N)
    if N < 1:
        raise ConfigError(f"horizon must be >= 1, got {N}")
    x0 = cfg.x0 if x0 is None else np.asarray(x0, dtype=float)

    n = 1 + nx * N
    m = nu * N
    nz = n + m
    u_base = np.full(nu, cfg.u_min)

    def xs(k: int) -> slice:
        # continuous slot of state x_k, k = 1..N
        return slice(1 + (k - 1) * nx, 1 + k * nx)

    def zs(k: int) -> slice:
        # integer slot of input levels z_k, k = 0..N-1, offset by n
        return slice(n + k * nu, n + (k + 1) * nu)

    # Tracking cost: sum (x_k - x_r)'Q(x_k - x_r) + sum u_k'R u_k <= t.
    P = np.zeros((nz, nz))
    q = np.zeros(nz)
    q[0] = -1.0
    c0 = 0.0
    for k in range(1, N + 1):
        P[xs(k), xs(k)] = 2.0 * Q
        q[xs(k)] = -2.0 * Q @ cfg.x_r
        c0 += float(cfg.x_r @ Q @ cfg.x_r)
    for k in range(N):
        P[zs(k), zs(k)] = 2.0 * cfg.du**2 * R
        q[zs(k)] = 2.0 * cfg.du * R @ u_base
        c0 += float(u_base @ R @ u_base)
    cost = SmoothFn.from_quadratic(P, q, c0, name="tracking-cost")

    # Step-0 dynamics: +-(x_1 - B u_0) <= +-(A lam); parameter on the rhs.
    g_rows = []
    for i in range(nx):
        for sign in (1.0, -1.0):
            coef = np.zeros(nz)
            coef[1 + i] = sign
            coef[zs(0)] = -sign * cfg.du * Bd[i, :]
            g_rows.append(SmoothFn.from_affine(
                coef, -sign * float(Bd[i, :] @ u_base),
                b_row=sign * Ad[i, :].copy(), name=f"dyn0[{i}]"))

    # Steps 1..N-1: +-(x_{k+1} - A x_k - B u_k) <= 0 as static rows.
    rows = 2 * nx * (N - 1)
    A_st = np.zeros((rows, n))
    B_st = np.zeros((rows, m))
    b_st = np.zeros(rows)
    r = 0
    for k in range(1, N):
        for i in range(nx):
            for sign in (1.0, -1.0):
                A_st[r, 1 + k * nx + i] = sign
                A_st[r, xs(k)] = -sign * Ad[i, :]
                B_st[r, k * nu: (k + 1) * nu] = -sign * cfg.du * Bd[i, :]
                b_st[r] = sign * float(Bd[i, :] @ u_base)
                r += 1

    # Epigraph bounds from a crude interval bound on the cost.
    mx = np.maximum(np.abs(cfg.x_min - cfg.x_r), np.abs(cfg.x_max - cfg.x_r))
    u_abs = max(abs(cfg.u_min), abs(cfg.u_max))
    w = N * float(mx @ np.abs(Q) @ mx) + N * u_abs**2 * float(np.abs(R).sum())
    tlo, thi = _pad(0.0, w)

    lb = np.concatenate([[tlo], np.tile(cfg.x_min, N), np.zeros(m)])
    ub = np.concatenate([[thi], np.tile(cfg.x_max, N),
                         np.full(m, cfg.levels - 1.0)])
    level0 = np.clip(round(-cfg.u_min / cfg.du), 0, cfg.levels - 1)
    return ProblemInstance(
        n=n, m=m, k=nx,
        c=np.concatenate([[1.0], np.zeros(nx * N)]), d=np.zeros(m),
        g=g_rows, h=[cost],
        A=A_st, B=B_st, b=b_st,
        lb=lb, ub=ub,
        param_lb=cfg.x_min.astype(float), param_ub=cfg.x_max.astype(float),
        name="mpc",
        default_param=np.asarray(x0, dtype=float).copy(),
        default_y_init=np.full(m, float(level0)),
    )


def mpc_state_update(cfg: MpcConfig, lam, u0) -> np.ndarray:
    """One plant step from state lam under the applied first input."""
    lam = np.asarray(lam, dtype=float)
    u0 = np.asarray(u0, dtype=float)
    return cfg.A @ lam + cfg.B @ u0


def mpc_inputs(cfg: MpcConfig, y) -> np.ndarray:
    """Decode the integer level block into an (N, n_u) input matrix."""
    levels = np.asarray(y, dtype=float).reshape(cfg.N, cfg.n_u)
    return cfg.u_min + cfg.du * levels


def mpc_objective(cfg: MpcConfig, lam, y) -> float:
    """Cost of an input plan by forward simulation (no solver involved)."""
    u = mpc_inputs(cfg, y)
    x = np.asarray(lam, dtype=float).copy()
    total = 0.0
    for k in range(cfg.N):
        total += float(u[k] @ cfg.R @ u[k])
        x = cfg.A @ x + cfg.B @ u[k]
        dx = x - cfg.x_r
        total += float(dx @ cfg.Q @ dx)
    return total


@dataclass
class MpcClosedLoop:
    """Closed-loop sweep output: per-step rows plus the state trajectory."""

    report: SequenceReport
    states: list[np.ndarray] = field(default_factory=list)
    inputs: list[np.ndarray] = field(default_factory=list)


def run_mpc_closed_loop(cfg: MpcConfig, rule: Rule,
                        eps: float = DEFAULT_EPS,
                        max_iter: int = DEFAULT_MAX_ITER) -> MpcClosedLoop:
    """Simulate cfg.sims steps, re-solving with the rule's warm start.

    Unlike a plain parameter sweep the next parameter is not known in
    advance: it is the plant state after applying the first input of the
    current solution. The report's param column therefore holds the step
    index; the actual states live in `states`.
    """
    inst = build_mpc(cfg)
    report = SequenceReport(instance=inst.name, rule=rule, eps=eps)
    result = MpcClosedLoop(report=report)
    lam = np.asarray(cfg.x0, dtype=float).copy()
    result.states.append(lam.copy())
    X_carry: list = []
    y_carry = inst.default_y_init.copy()

    for step in range(cfg.sims):
        t0 = time.perf_counter()
        ws = prepare_warmstart(rule, inst, lam, step == 0, X_carry, y_carry)
        run = None
        if ws.infeasible:
            status = "infeasible"
        else:
            run = run_oa(inst, lam, y0=ws.y, X0=ws.X, eps=eps,
                         max_iter=max_iter)
            status = run.status
        wall_ms = (time.perf_counter() - t0) * 1e3
        if run is not None:
            report.rows.append(SequenceRow(
                param=np.array([float(step)]), status=status,
                objective=run.ub if run.y is not None else np.inf,
                y=None if run.y is None else run.y.copy(),
                oa_iterations=run.oa_iterations,
                nlp_solves=run.nlp_solves + ws.nlp_solves,
                milp_solves=run.milp_solves + ws.milp_solves,
                final_constraint_count=run.final_constraint_count,
                wall_ms=wall_ms))
        else:
            report.rows.append(SequenceRow(
                param=np.array([float(step)]), status=status,
                objective=np.inf, y=None, oa_iterations=0,
                nlp_solves=ws.nlp_solves, milp_solves=ws.milp_solves,
                final_constraint_count=0, wall_ms=wall_ms))
        if run is None or run.y is None:
            report.incumbents.append(None)
            break  # no input to apply; the trajectory cannot continue
        report.incumbents.append(Point(x=run.x.copy(), y=run.y.copy()))
        if status in ("converged", "iter_limit"):
            X_carry = run.X
            y_carry = run.y
        u0 = mpc_inputs(cfg, run.y)[0]
        result.inputs.append(u0.copy())
        lam = mpc_state_update(cfg, lam, u0)
        result.states.append(lam.copy())
    return result


__all__ = [
    "ProblemError",
    "DataFileError",
    "ConfigError",
    "build_example1",
    "build_example2",
    "build_ti4",
    "build_ti14",
    "SlrConfig",
    "default_slr_bounds",
    "load_wine_csv",
    "default_wine_path",
    "build_slr",
    "MpcConfig",
    "load_mpc_matrices",
    "default_mpc_path",
    "load_mpc_config",
    "build_mpc",
    "mpc_state_update",
    "mpc_inputs",
    "mpc_objective",
    "MpcClosedLoop",
    "run_mpc_closed_loop",
]
