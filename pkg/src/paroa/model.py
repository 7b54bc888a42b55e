"""Problem data model for parametrized convex MINLPs.

A problem instance is

    min  c'x + d'y
    s.t. g_i(x, y; lam) <= 0      i = 1..p   (parameter-dependent, smooth convex)
         h_j(x, y)      <= 0      j = 1..q   (fixed, smooth convex)
         A x + B y      <= b                 (static linear rows)
         lb <= (x, y) <= ub                  (finite box)
         y integer

with lam a parameter vector ranging over a box P. Constraint callbacks
operate on the stacked variable vector z = (x, y).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class ModelError(Exception):
    """Base class for model construction / evaluation errors."""


class DimensionMismatchError(ModelError):
    pass


@dataclass
class SmoothFn:
    """One smooth convex constraint row z -> g(z; lam).

    Attributes
    ----------
    value_fn, grad_fn:
        Callbacks (z, lam) -> float and (z, lam) -> ndarray of len(z).
    b_row:
        When the row has the form g(z) - b_row'lam (parameter enters only
        the right-hand side) this stores the row of the parameter matrix
        and `rhs_parametrized` is true. The gradient of such a row does
        not depend on lam and regenerated cuts keep their normals.
    affine:
        Optional (coef, const) pair when g(z; lam) = coef'z + const
        (- b_row'lam if parametrized). Solvers may evaluate such rows as
        plain matrix algebra; results must agree with the callbacks.
    quadratic:
        Optional (P, q, const) triple when g(z; lam) = z'Pz/2 + q'z + const
        (- b_row'lam if parametrized) with constant PSD P. Same contract as
        `affine`: a vectorization hint, never a semantic change.
    name:
        Label used in error messages and cut provenance.
    """

    value_fn: Callable[[np.ndarray, np.ndarray], float]
    grad_fn: Callable[[np.ndarray, np.ndarray], np.ndarray]
    hess_fn: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    b_row: np.ndarray | None = None
    affine: tuple[np.ndarray, float] | None = None
    quadratic: tuple[np.ndarray, np.ndarray, float] | None = None
    name: str = "g"

    @property
    def rhs_parametrized(self) -> bool:
        return self.b_row is not None

    @property
    def is_affine(self) -> bool:
        return self.affine is not None

    @property
    def is_quadratic(self) -> bool:
        return self.quadratic is not None

    def value(self, z: np.ndarray, lam: np.ndarray) -> float:
        return float(self.value_fn(z, lam))

    def grad(self, z: np.ndarray, lam: np.ndarray) -> np.ndarray:
        return np.asarray(self.grad_fn(z, lam), dtype=float)

    def hess(self, z: np.ndarray, lam: np.ndarray) -> np.ndarray | None:
        """Optional second derivative; enables exact post-solve refinement."""
        if self.hess_fn is None:
            return None
        return np.asarray(self.hess_fn(z, lam), dtype=float)

    @staticmethod
    def from_affine(
        coef: Sequence[float],
        const: float,
        b_row: Sequence[float] | None = None,
        name: str = "affine",
    ) -> "SmoothFn":
        """Build an affine row coef'z + const - b_row'lam <= 0.

        The closures and the stored affine data come from the same arrays,
        so cut generation and solver fast paths cannot drift apart.
        """
        a = np.asarray(coef, dtype=float).copy()
        c0 = float(const)
        br = None if b_row is None else np.asarray(b_row, dtype=float).copy()
        if br is None:
            value_fn = lambda z, lam: float(a @ z) + c0
        else:
            value_fn = lambda z, lam: float(a @ z) + c0 - float(br @ lam)
        grad_fn = lambda z, lam: a
        hess_fn = lambda z, lam: np.zeros((a.size, a.size))
        return SmoothFn(value_fn, grad_fn, hess_fn=hess_fn, b_row=br,
                        affine=(a, c0), name=name)

    @staticmethod
    def from_quadratic(
        P: np.ndarray,
        q: Sequence[float],
        const: float,
        b_row: Sequence[float] | None = None,
        name: str = "quadratic",
    ) -> "SmoothFn":
        """Build z'Pz/2 + q'z + const - b_row'lam <= 0 with PSD P."""
        P = 0.5 * (np.asarray(P, dtype=float) + np.asarray(P, dtype=float).T)
        q = np.asarray(q, dtype=float).copy()
        c0 = float(const)
        br = None if b_row is None else np.asarray(b_row, dtype=float).copy()
        if br is None:
            value_fn = lambda z, lam: 0.5 * float(z @ P @ z) + float(q @ z) + c0
        else:
            value_fn = (
                lambda z, lam: 0.5 * float(z @ P @ z) + float(q @ z) + c0
                - float(br @ lam)
            )
        grad_fn = lambda z, lam: P @ z + q
        hess_fn = lambda z, lam: P
        return SmoothFn(value_fn, grad_fn, hess_fn=hess_fn, b_row=br,
                        quadratic=(P, q, c0), name=name)


@dataclass
class Point:
    """A linearization / solution point (x continuous block, y integer block)."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float))
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float))

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])


@dataclass
class ProblemInstance:
    """Full problem data. Dimensions: n continuous, m integer, k parameters."""

    n: int
    m: int
    k: int
    c: np.ndarray
    d: np.ndarray
    g: list[SmoothFn] = field(default_factory=list)
    h: list[SmoothFn] = field(default_factory=list)
    A: np.ndarray | None = None
    B: np.ndarray | None = None
    b: np.ndarray | None = None
    lb: np.ndarray = None
    ub: np.ndarray = None
    param_lb: np.ndarray = None
    param_ub: np.ndarray = None
    name: str = "instance"
    # Builder conveniences (not part of the mathematical data).
    default_param: np.ndarray | None = None
    default_y_init: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        if self.c.shape != (self.n,) or self.d.shape != (self.m,):
            raise DimensionMismatchError(
                f"{self.name}: objective dims {self.c.shape}/{self.d.shape} "
                f"do not match n={self.n}, m={self.m}"
            )
        nz = self.n + self.m
        if self.A is None:
            self.A = np.zeros((0, self.n))
            self.B = np.zeros((0, self.m))
            self.b = np.zeros(0)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        self.b = np.atleast_1d(np.asarray(self.b, dtype=float))
        r = self.b.shape[0]
        if self.A.shape != (r, self.n) or self.B.shape != (r, self.m):
            raise DimensionMismatchError(
                f"{self.name}: linear block {self.A.shape}/{self.B.shape}/"
                f"{self.b.shape} inconsistent with n={self.n}, m={self.m}"
            )
        self.lb = np.asarray(self.lb, dtype=float)
        self.ub = np.asarray(self.ub, dtype=float)
        if self.lb.shape != (nz,) or self.ub.shape != (nz,):
            raise DimensionMismatchError(
                f"{self.name}: bound arrays must have length n+m={nz}"
            )
        if not (np.all(np.isfinite(self.lb)) and np.all(np.isfinite(self.ub))):
            raise ModelError(f"{self.name}: all variable bounds must be finite")
        if np.any(self.lb > self.ub):
            raise ModelError(f"{self.name}: lb > ub on some variable")
        ylb, yub = self.lb[self.n:], self.ub[self.n:]
        if np.any(np.abs(ylb - np.round(ylb)) > 1e-9) or np.any(
            np.abs(yub - np.round(yub)) > 1e-9
        ):
            raise ModelError(f"{self.name}: integer variable bounds must be integral")
        if self.param_lb is None:
            self.param_lb = np.zeros(self.k)
            self.param_ub = np.zeros(self.k)
        self.param_lb = np.atleast_1d(np.asarray(self.param_lb, dtype=float))
        self.param_ub = np.atleast_1d(np.asarray(self.param_ub, dtype=float))
        if self.param_lb.shape != (self.k,) or self.param_ub.shape != (self.k,):
            raise DimensionMismatchError(f"{self.name}: parameter box must be in R^k")
        for fn in list(self.g) + list(self.h):
            if fn.b_row is not None and fn.b_row.shape != (self.k,):
                raise DimensionMismatchError(
                    f"{self.name}: row {fn.name} has b_row of wrong length"
                )

    # -- dimension helpers -------------------------------------------------
    @property
    def nz(self) -> int:
        return self.n + self.m

    @property
    def num_static_rows(self) -> int:
        return self.b.shape[0]

    def split(self, z: np.ndarray) -> Point:
        return Point(z[: self.n], z[self.n:])

    def objective(self, pt: Point) -> float:
        return float(self.c @ pt.x + self.d @ pt.y)

    def box_center(self) -> np.ndarray:
        return 0.5 * (self.lb + self.ub)

    def param_in_box(self, lam: np.ndarray, tol: float = 1e-9) -> bool:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        if lam.shape != (self.k,):
            return False
        return bool(
            np.all(lam >= self.param_lb - tol) and np.all(lam <= self.param_ub + tol)
        )


def as_param(inst: ProblemInstance, lam) -> np.ndarray:
    """Coerce lam to an ndarray of length k, validating its shape."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (inst.k,):
        raise DimensionMismatchError(
            f"{inst.name}: parameter has shape {lam.shape}, expected ({inst.k},)"
        )
    return lam


def eval_constraints(inst: ProblemInstance, pt: Point, lam) -> dict:
    """Residuals of every constraint block at pt (positive = violated)."""
    lam = as_param(inst, lam)
    z = pt.z
    if z.shape != (inst.nz,):
        raise DimensionMismatchError(
            f"{inst.name}: point has {z.shape[0]} entries, expected {inst.nz}"
        )
    gv = np.array([fn.value(z, lam) for fn in inst.g])
    hv = np.array([fn.value(z, lam) for fn in inst.h])
    lv = inst.A @ pt.x + inst.B @ pt.y - inst.b
    return {"g": gv, "h": hv, "linear": lv}


def max_violation(inst: ProblemInstance, pt: Point, lam) -> float:
    res = eval_constraints(inst, pt, lam)
    parts = [res["g"], res["h"], res["linear"],
             inst.lb - pt.z, pt.z - inst.ub]
    vals = np.concatenate([np.atleast_1d(p) for p in parts])
    if vals.size == 0:
        return 0.0
    return float(np.max(np.append(vals, 0.0)))


def is_feasible(inst: ProblemInstance, pt: Point, lam, tol: float = 1e-8) -> bool:
    """True iff all residuals <= tol, bounds hold within tol, y integral within tol."""
    if max_violation(inst, pt, lam) > tol:
        return False
    return bool(np.all(np.abs(pt.y - np.round(pt.y)) <= tol))


# -- sanity-check helpers (used by the test-suite and --oracle-check) ------

def gradient_check(
    fn: SmoothFn,
    z: np.ndarray,
    lam: np.ndarray,
    rel_tol: float = 1e-5,
    step: float = 1e-6,
) -> float:
    """Compare grad_fn against central differences; returns the relative error.

    Raises ModelError when the relative error exceeds rel_tol.
    """
    z = np.asarray(z, dtype=float)
    g = fn.grad(z, lam)
    num = np.zeros_like(g)
    for i in range(z.size):
        zp, zm = z.copy(), z.copy()
        zp[i] += step
        zm[i] -= step
        num[i] = (fn.value(zp, lam) - fn.value(zm, lam)) / (2 * step)
    scale = max(1.0, float(np.max(np.abs(g))))
    err = float(np.max(np.abs(g - num))) / scale
    if err > rel_tol:
        raise ModelError(f"gradient check failed for {fn.name}: rel err {err:.3e}")
    return err


def convexity_sample(
    inst: ProblemInstance,
    lam,
    rng: np.random.Generator,
    pairs: int = 32,
    tol: float = 1e-9,
) -> None:
    """Midpoint convexity spot-check over random point pairs in the box.

    For each sampled pair (z1, z2) and each constraint row, verifies
    f((z1+z2)/2) <= (f(z1)+f(z2))/2 + tol. Raises ModelError on failure.
    """
    lam = as_param(inst, lam)
    for _ in range(pairs):
        z1 = rng.uniform(inst.lb, inst.ub)
        z2 = rng.uniform(inst.lb, inst.ub)
        zm = 0.5 * (z1 + z2)
        for fn in list(inst.g) + list(inst.h):
            mid = fn.value(zm, lam)
            avg = 0.5 * (fn.value(z1, lam) + fn.value(z2, lam))
            if mid > avg + tol:
                raise ModelError(
                    f"{inst.name}: row {fn.name} failed midpoint convexity "
                    f"({mid:.6e} > {avg:.6e})"
                )
