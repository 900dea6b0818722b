"""LP backends for RLT relaxations.

Two backends share one interface: ``highs`` (scipy's HiGHS bindings, the
default) and ``simplex``, a dense bounded-variable revised simplex kept
as a dependency-free reference.  ``POLYRLT_LP_BACKEND`` picks the default.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .algebra import Multiset
from .exceptions import InvalidConfig, NumericalFailure
from .problem import GE

OPTIMAL = "Optimal"
INFEASIBLE = "Infeasible"
UNBOUNDED = "Unbounded"
ITER_LIMIT = "IterLimit"

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
ENV_VAR = "POLYRLT_LP_BACKEND"


@dataclass
class LPSolution:
    status: str
    objective: float
    x: np.ndarray
    iterations: int
    columns: list = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL

    @property
    def values(self) -> dict[Multiset, float]:
        return {col: float(v) for col, v in zip(self.columns, self.x)}


@dataclass
class LPData:
    """``min c.y + c0`` s.t. ``A y (>=|=) b``, ``lower <= y <= upper``."""

    c: np.ndarray
    c0: float
    A: sparse.csr_matrix
    senses: list[str]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    @classmethod
    def from_relaxation(cls, rel) -> "LPData":
        return cls(
            rel.cost(),
            rel.objective_constant,
            rel.matrix(),
            list(rel.senses),
            np.asarray(rel.rhs, dtype=float),
            np.asarray(rel.lower, dtype=float),
            np.asarray(rel.upper, dtype=float),
        )


# --------------------------------------------------------------------------
# HiGHS


def _solve_highs(lp: LPData, feas_tol: float, opt_tol: float, max_iter: int) -> tuple[str, np.ndarray, int]:
    ge = np.array([s == GE for s in lp.senses], dtype=bool)
    eq = ~ge
    A = lp.A.tocsr()
    kwargs = {}
    if ge.any():
        kwargs.update(A_ub=-A[ge], b_ub=-lp.b[ge])
    if eq.any():
        kwargs.update(A_eq=A[eq], b_eq=lp.b[eq])
    res = linprog(
        lp.c,
        bounds=np.column_stack([lp.lower, lp.upper]),
        method="highs",
        options={
            "primal_feasibility_tolerance": feas_tol,
            "dual_feasibility_tolerance": opt_tol,
            "maxiter": max_iter,
            "presolve": True,
        },
        **kwargs,
    )
    status = {0: OPTIMAL, 1: ITER_LIMIT, 2: INFEASIBLE, 3: UNBOUNDED}.get(res.status)
    if status is None:
        raise NumericalFailure(f"HiGHS failed: {res.message}")
    x = np.asarray(res.x) if res.x is not None else np.full(len(lp.c), np.nan)
    return status, x, int(getattr(res, "nit", 0) or 0)


# --------------------------------------------------------------------------
# bundled bounded-variable revised simplex


class _Simplex:
    """Two-phase bounded-variable revised simplex on dense arrays.

    Rows become equalities ``A y - s = b`` (surplus ``s >= 0`` for ``>=``
    rows); phase one starts from surplus and artificial columns.  The basis
    inverse is updated in product form and refactored periodically.
    Pricing is Dantzig's rule, switching to Bland's rule after a run of
    degenerate iterations.
    """

    REFACTOR = 50
    STALL = 30
    PIVOT_TOL = 1e-9

    def __init__(self, lp: LPData, feas_tol: float, opt_tol: float, max_iter: int):
        m, n = lp.A.shape
        ge = [i for i, s in enumerate(lp.senses) if s == GE]
        S = np.zeros((m, len(ge)))
        for k, i in enumerate(ge):
            S[i, k] = -1.0
        A = np.hstack([lp.A.toarray(), S])
        lo = np.concatenate([lp.lower, np.zeros(len(ge))])
        hi = np.concatenate([lp.upper, np.full(len(ge), np.inf)])
        # nonbasic structurals start at their lower bound
        x = lo.copy()
        r = lp.b - A @ x
        # rows already satisfied start with their surplus basic; the rest
        # get an artificial
        basis = [-1] * m
        for k, i in enumerate(ge):
            if r[i] <= 0:
                basis[i] = n + k
                x[n + k] = -r[i]
        need = [i for i in range(m) if basis[i] < 0]
        art = np.zeros((m, len(need)))
        n_real = A.shape[1]
        for k, i in enumerate(need):
            art[i, k] = 1.0 if r[i] >= 0 else -1.0
            basis[i] = n_real + k
        self.A = np.hstack([A, art])
        self.n_real = n_real
        self.art = np.arange(n_real, n_real + len(need))
        self.lo = np.concatenate([lo, np.zeros(len(need))])
        self.hi = np.concatenate([hi, np.full(len(need), np.inf)])
        self.x = np.concatenate([x, np.abs(r[need])])
        self.b = lp.b
        self.m = m
        self.n_struct = n
        self.c_real = np.concatenate([lp.c, np.zeros(len(ge) + len(need))])
        self.basis = basis
        self.is_basic = np.zeros(self.A.shape[1], dtype=bool)
        self.is_basic[self.basis] = True
        # the starting basis is diagonal with entries +-1, its own inverse
        self.Binv = np.diag(self.A[np.arange(m), basis]) if m else np.zeros((0, 0))
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.max_iter = max_iter
        self.iterations = 0
        self._since_refactor = 0

    def _refactor(self):
        B = self.A[:, self.basis]
        try:
            self.Binv = np.linalg.inv(B)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("singular basis") from exc
        if not np.all(np.isfinite(self.Binv)):
            raise NumericalFailure("singular basis")
        nb = ~self.is_basic
        rhs = self.b - self.A[:, nb] @ self.x[nb]
        self.x[self.basis] = self.Binv @ rhs
        self._since_refactor = 0

    def _run(self, c: np.ndarray) -> str:
        bland = False
        stall = 0
        best = math.inf
        while True:
            if self.iterations >= self.max_iter:
                return ITER_LIMIT
            cb = c[self.basis]
            y = cb @ self.Binv
            d = c - y @ self.A
            at_lo = self.x <= self.lo + self.feas_tol
            at_hi = self.x >= self.hi - self.feas_tol
            fixed = self.hi - self.lo <= self.feas_tol
            elig = ~self.is_basic & ~fixed & ((at_lo & (d < -self.opt_tol)) | (at_hi & (d > self.opt_tol)))
            # a nonbasic strictly between bounds can only arise from a
            # bound flip rounding; it may move either way
            mid = ~self.is_basic & ~at_lo & ~at_hi & (np.abs(d) > self.opt_tol)
            elig |= mid
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return OPTIMAL
            q = int(cand[0]) if bland else int(cand[np.argmax(np.abs(d[cand]))])
            direction = 1.0 if d[q] < 0 else -1.0
            alpha = self.Binv @ self.A[:, q]
            step, leave, leave_to_hi = self._ratio(alpha, direction, q, bland)
            if step is None:
                return UNBOUNDED
            self.iterations += 1
            xb = np.array(self.basis)
            self.x[xb] -= direction * step * alpha
            self.x[q] += direction * step
            if leave is not None:
                out = self.basis[leave]
                self.x[out] = self.hi[out] if leave_to_hi else self.lo[out]
                self._pivot(leave, q, alpha)
            obj = float(c @ self.x)
            if obj < best - 1e-12 * max(1.0, abs(best)):
                best = obj
                stall = 0
                bland = False
            else:
                stall += 1
                if stall >= self.STALL:
                    bland = True

    def _ratio(self, alpha, direction, q, bland):
        """Harris two-pass ratio test; returns (step, leaving row, to upper)."""
        flip = self.hi[q] - self.lo[q]
        xb = np.array(self.basis)
        da = direction * alpha
        tol = self.PIVOT_TOL * max(1.0, float(np.abs(alpha).max(initial=0.0)))
        dec = da > tol
        inc = (da < -tol) & np.isfinite(self.hi[xb])
        if not (dec.any() or inc.any()):
            return (flip, None, False) if math.isfinite(flip) else (None, None, False)
        room = np.full(len(xb), np.inf)
        room[dec] = (self.x[xb][dec] - self.lo[xb][dec]) / da[dec]
        room[inc] = (self.hi[xb][inc] - self.x[xb][inc]) / -da[inc]
        room = np.maximum(room, 0.0)
        slack = np.full(len(xb), np.inf)
        slack[dec] = (self.x[xb][dec] - self.lo[xb][dec] + self.feas_tol) / da[dec]
        slack[inc] = (self.hi[xb][inc] - self.x[xb][inc] + self.feas_tol) / -da[inc]
        bound = max(float(slack.min()), 0.0)
        if flip <= bound:
            return flip, None, False
        ok = np.flatnonzero(room <= bound)
        if bland:
            i = int(ok[np.argmin(xb[ok])])
        else:
            i = int(ok[np.argmax(np.abs(alpha[ok]))])
        return float(room[i]), i, bool(inc[i])

    def _pivot(self, r, q, alpha):
        piv = alpha[r]
        row = self.Binv[r] / piv
        self.Binv -= np.outer(alpha, row)
        self.Binv[r] = row
        self.is_basic[self.basis[r]] = False
        self.basis[r] = q
        self.is_basic[q] = True
        self._since_refactor += 1
        if self._since_refactor >= self.REFACTOR:
            self._refactor()

    def solve(self) -> tuple[str, np.ndarray, int]:
        art = self.art
        if art.size:
            c1 = np.zeros(self.A.shape[1])
            c1[art] = 1.0
            status = self._run(c1)
            if status == ITER_LIMIT:
                return status, self.x[: self.n_struct].copy(), self.iterations
            self._refactor()
            infeas = float(self.x[art].sum())
            if infeas > self.feas_tol * max(1.0, float(np.abs(self.b).max(initial=0.0))) * 10:
                return INFEASIBLE, self.x[: self.n_struct].copy(), self.iterations
            self.hi[art] = 0.0
            self.x[art] = np.clip(self.x[art], 0.0, 0.0)
            self._refactor()
        status = self._run(self.c_real)
        if status == OPTIMAL:
            self._refactor()
        return status, self.x[: self.n_struct].copy(), self.iterations


def _solve_simplex(lp: LPData, feas_tol: float, opt_tol: float, max_iter: int):
    return _Simplex(lp, feas_tol, opt_tol, max_iter).solve()


BACKENDS: dict[str, Callable] = {"highs": _solve_highs, "simplex": _solve_simplex}


def default_backend() -> str:
    return os.environ.get(ENV_VAR, "highs").strip().lower() or "highs"


def solve_lp(
    rel,
    overrides: tuple[Sequence[float], Sequence[float]] | None = None,
    backend: str | None = None,
    feas_tol: float = FEAS_TOL,
    opt_tol: float = OPT_TOL,
    max_iter: int = 100_000,
) -> LPSolution:
    """Solve a :class:`~polyrlt.rlt.LinearRelaxation`.

    ``overrides`` is a ``(lower, upper)`` box for the original variables;
    the relaxation is rebuilt for it because bound-factor rows and the
    bounds of auxiliary and RLT columns depend on the box.
    """
    if overrides is not None:
        rel = rel.rebuild(*overrides)
    name = backend or default_backend()
    try:
        fn = BACKENDS[name]
    except KeyError:
        raise InvalidConfig(f"unknown LP backend {name!r}; choose from {sorted(BACKENDS)}") from None
    lp = LPData.from_relaxation(rel)
    status, x, iters = fn(lp, feas_tol, opt_tol, max_iter)
    obj = float(lp.c @ x + lp.c0) if status == OPTIMAL else math.nan
    return LPSolution(status, obj, x, iters, list(rel.columns))


def check_solution(rel, sol: LPSolution, tol: float = 1e-6) -> float:
    """Largest row or bound violation of ``sol`` in ``rel``."""
    lp = LPData.from_relaxation(rel)
    ax = lp.A @ sol.x
    worst = 0.0
    for i, s in enumerate(lp.senses):
        r = ax[i] - lp.b[i]
        worst = max(worst, -r if s == GE else abs(r))
    worst = max(worst, float(np.max(lp.lower - sol.x, initial=0.0)), float(np.max(sol.x - lp.upper, initial=0.0)))
    return worst
