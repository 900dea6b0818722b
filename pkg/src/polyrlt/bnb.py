"""RLT branch-and-bound with best-bound node selection."""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import asdict, dataclass
from typing import Sequence

import logging

import numpy as np

from .algebra import ATOM, Multiset
from .exceptions import NoIncumbent, NoViolation, NumericalFailure
from .lp import INFEASIBLE, OPTIMAL, LPSolution, solve_lp
from .problem import PolynomialProgram
from .reduction import DEFAULT_CAP, reduce_program
from .rlt import LinearRelaxation, build_relaxation

GAP_FLOOR = 1e-6
VIOLATION_TOL = 1e-9
MIN_DIAMETER = 1e-7
FEASIBILITY_TOL = 1e-6

log = logging.getLogger(__name__)


@dataclass
class SolveOptions:
    scheme: str = "quadrlt"
    degree: int = 2
    time_limit: float = 3600.0
    rel_gap: float = 1e-3
    node_limit: int | None = None
    cap: int = DEFAULT_CAP
    backend: str | None = None
    threads: int = 1
    gap_floor: float = GAP_FLOOR
    branch_fraction: float = 0.1


@dataclass
class BnBNode:
    lower: list[float]
    upper: list[float]
    lower_bound: float
    depth: int = 0

    @property
    def diameter(self) -> float:
        return max((u - l for l, u in zip(self.lower, self.upper)), default=0.0)


@dataclass
class SolveReport:
    scheme: str
    degree: int
    status: str
    incumbent: list[float] | None
    upper_bound: float | None
    lower_bound: float
    gap: float | None
    nodes: int
    wall_time: float
    root_nvars: int | None
    root_ncons: int | None
    root_value: float | None
    build_time: float
    gap_floor: float = GAP_FLOOR
    lp_failures: int = 0

    def to_dict(self) -> dict:
        out = asdict(self)
        for k in ("upper_bound", "lower_bound", "gap", "root_value"):
            v = out[k]
            if v is not None and not math.isfinite(v):
                out[k] = None
        return out

    @property
    def solved(self) -> bool:
        return self.status == "optimal"


def compute_gap(ub: float | None, lb: float, floor: float = GAP_FLOOR) -> float:
    """Relative gap ``(ub - lb) / |ub|`` with the denominator floored."""
    if ub is None or (isinstance(ub, float) and math.isnan(ub)):
        raise NoIncumbent("no incumbent: gap is NA")
    if not math.isfinite(ub):
        raise NoIncumbent("no incumbent: gap is NA")
    if ub < lb - 1e-9 * max(1.0, abs(ub)):
        raise NumericalFailure(f"upper bound {ub} below lower bound {lb}")
    return max(ub - lb, 0.0) / max(abs(ub), floor)


def _theta(sol: LPSolution, rel: LinearRelaxation, aux_defs: Sequence[Multiset]) -> np.ndarray:
    """Per original variable, summed violation of the RLT identities it takes part in."""
    n = rel.n_original
    x = sol.x
    theta = np.zeros(n)
    for idx, col in enumerate(rel.columns):
        if col.size < 2:
            continue
        prod = 1.0
        atoms: set[int] = set()
        for k, m in col.entries:
            prod *= x[rel.index[Multiset._from_sorted(((k, 1),))]] ** m
            if k.kind == ATOM:
                atoms.add(k.id)
            else:
                atoms.update(a.id for a in aux_defs[k.id].keys())
        viol = abs(x[idx] - prod)
        for j in atoms:
            theta[j] += viol
    return theta


def select_branching_variable(
    sol: LPSolution,
    rel: LinearRelaxation,
    aux_defs: Sequence[Multiset] = (),
    eps: float = VIOLATION_TOL,
    fraction: float = 0.1,
) -> tuple[int, float]:
    """Variable with the largest identity violation and its branch point.

    The point is the LP value clamped to the inner ``1 - 2 * fraction`` of
    the variable's range.  Ties go to the smallest index.
    """
    if sol.status != OPTIMAL:
        raise ValueError("branching needs an optimal LP solution")
    theta = _theta(sol, rel, aux_defs)
    if theta.size == 0 or theta.max() <= eps:
        raise NoViolation("LP point satisfies every RLT identity")
    j = int(np.argmax(theta))
    lo, hi = rel.lower[j], rel.upper[j]
    w = hi - lo
    v = float(sol.x[j])
    p = min(max(v, lo + fraction * w), hi - fraction * w)
    return j, p


def solve(p: PolynomialProgram, opts: SolveOptions | None = None) -> SolveReport:
    """Globally minimize ``p`` to relative gap ``opts.rel_gap``.

    The scheme is applied once; each node rebuilds the relaxation for its
    box.  Termination reasons: ``optimal``, ``infeasible``, ``time_limit``,
    ``node_limit`` and ``lp_failure``.  A node whose LP fails numerically
    keeps its parent's bound and is not branched further; if that leaves
    the gap open (or no incumbent) the status is ``lp_failure``.
    """
    opts = opts or SolveOptions()
    t0 = time.perf_counter()
    reduced = reduce_program(p, opts.scheme, opts.degree, opts.cap)
    aux_defs = reduced.aux_defs
    root_rel = build_relaxation(reduced)
    build_time = time.perf_counter() - t0

    best_x: list[float] | None = None
    best_ub = math.inf
    counter = itertools.count()
    heap: list = []
    nodes = 0
    root_value = None
    status = None
    lp_failures = 0

    def consider(x):
        nonlocal best_x, best_ub
        x = [min(max(float(v), lo), hi) for v, lo, hi in zip(x, p.lower, p.upper)]
        if p.is_feasible(x, FEASIBILITY_TOL):
            val = p.objective_value(x)
            if val < best_ub:
                best_ub, best_x = val, x

    def fathomed(lb: float) -> bool:
        return math.isfinite(best_ub) and lb >= best_ub - opts.rel_gap * abs(best_ub)

    def evaluate_node(node: BnBNode, rel: LinearRelaxation | None = None):
        rel = rel or build_relaxation(reduced, box=(node.lower, node.upper))
        try:
            sol = solve_lp(rel, backend=opts.backend)
        except NumericalFailure as exc:
            log.warning("LP failed at depth %d: %s", node.depth, exc)
            sol = None
        return rel, sol

    root = BnBNode(list(p.lower), list(p.upper), -math.inf, 0)
    heapq.heappush(heap, (-math.inf, next(counter), root, root_rel))
    leaf_lb = math.inf  # smallest bound among discarded nodes
    while heap:
        if time.perf_counter() - t0 > opts.time_limit:
            status = "time_limit"
            break
        if opts.node_limit is not None and nodes >= opts.node_limit:
            status = "node_limit"
            break
        parent_lb, _, node, rel = heapq.heappop(heap)
        if fathomed(parent_lb):
            leaf_lb = min(leaf_lb, parent_lb)
            continue
        rel, sol = evaluate_node(node, rel)
        nodes += 1
        if sol is None:
            lp_failures += 1
            leaf_lb = min(leaf_lb, parent_lb)
            continue
        if nodes == 1:
            root_value = sol.objective if sol.status == OPTIMAL else (math.inf if sol.status == INFEASIBLE else None)
        if sol.status == INFEASIBLE:
            continue
        if sol.status != OPTIMAL:
            leaf_lb = min(leaf_lb, parent_lb)
            continue
        lb = max(sol.objective, parent_lb)
        consider(sol.x[: p.n])
        if fathomed(lb) or node.diameter < MIN_DIAMETER:
            leaf_lb = min(leaf_lb, lb)
            continue
        try:
            j, point = select_branching_variable(sol, rel, aux_defs, fraction=opts.branch_fraction)
        except NoViolation:
            # the LP point is exact, so its x part was just offered as incumbent
            leaf_lb = min(leaf_lb, lb)
            continue
        left_u = list(node.upper)
        left_u[j] = point
        right_l = list(node.lower)
        right_l[j] = point
        for lo, hi in ((node.lower, left_u), (right_l, node.upper)):
            heapq.heappush(heap, (lb, next(counter), BnBNode(list(lo), list(hi), lb, node.depth + 1), None))

    global_lb = min([leaf_lb] + [item[0] for item in heap])
    if math.isfinite(best_ub):
        global_lb = min(global_lb, best_ub)
        gap = compute_gap(best_ub, global_lb, opts.gap_floor)
        if status is None:
            status = "lp_failure" if lp_failures and gap > opts.rel_gap else "optimal"
    else:
        gap = None
        if status is None:
            status = "lp_failure" if lp_failures else "infeasible"
    return SolveReport(
        scheme=opts.scheme,
        degree=opts.degree,
        status=status,
        incumbent=best_x,
        upper_bound=best_ub if math.isfinite(best_ub) else None,
        lower_bound=global_lb,
        gap=gap,
        nodes=nodes,
        wall_time=time.perf_counter() - t0,
        root_nvars=root_rel.n_vars,
        root_ncons=root_rel.n_cons,
        root_value=root_value,
        build_time=build_time,
        gap_floor=opts.gap_floor,
        lp_failures=lp_failures,
    )
