"""RLT relaxations: J-sets, bound-factor constraints and linearization.

A relaxation column is identified by a :class:`Multiset` over variable
keys.  Size-one multisets are the program's own variables (original or
auxiliary); larger ones are RLT variables standing for the product of
their keys.  Row counts exclude variable bounds.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy import sparse

from .algebra import (
    ATOM,
    COEF_TOL,
    Multiset,
    Polynomial,
    VarKey,
    atom,
    is_submultiset,
)
from .exceptions import NegativeLowerBound, UnboundedKey
from .problem import EQ, GE, PolynomialProgram

BoundsFn = Callable[[VarKey], "tuple[float, float]"]


def compute_jsets(monomials: Iterable[Multiset]) -> list[Multiset]:
    """Maximal monomials under multiset inclusion (an antichain)."""
    kept: list[Multiset] = []
    # maximal monomials found so far, indexed by each key they contain
    by_key: dict[VarKey, list[Multiset]] = {}
    for ms in sorted(set(monomials), key=lambda m: (-m.size, m.flat())):
        lists = [by_key.get(k, ()) for k in ms.keys()]
        shortest = min(lists, key=len) if lists else ()
        if not any(big.size > ms.size and is_submultiset(ms, big) for big in shortest):
            kept.append(ms)
            for k in ms.keys():
                by_key.setdefault(k, []).append(ms)
    return sorted(kept)


def aux_bounds(J: Multiset, bounds) -> tuple[float, float]:
    """Interval of the product over ``J`` given nonnegative key bounds.

    ``bounds`` is a sequence of ``(lo, hi)`` per original variable or a
    callable mapping a :class:`VarKey` to its interval.
    """
    lo, hi = 1.0, 1.0
    for k, m in J.entries:
        if callable(bounds):
            l, u = bounds(k)
        else:
            if k.kind != ATOM:
                raise UnboundedKey(f"no bounds for auxiliary key {k!r}")
            l, u = bounds[k.id]
        if l < 0:
            raise NegativeLowerBound(f"key {k!r} has lower bound {l} < 0")
        lo *= l**m
        hi *= u**m
    return lo, hi


@functools.lru_cache(maxsize=4096)
def _factor_matrix(l: float, u: float, m: int) -> np.ndarray:
    """Row a holds the coefficients (powers 0..m) of (t-l)^a (u-t)^(m-a)."""
    out = np.zeros((m + 1, m + 1))
    for a in range(m + 1):
        c = npoly.polymul(npoly.polypow([-l, 1.0], a), npoly.polypow([u, -1.0], m - a))
        out[a, : len(c)] = c
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class BoundFactor:
    """Provenance of a bound-factor row: ``lower[k]`` factors (x_k - l_k)."""

    jset: Multiset
    lower: tuple[int, ...]


@dataclass(frozen=True)
class Linearized:
    index: int


@dataclass(frozen=True)
class Defining:
    aux_id: int


@dataclass
class LinearConstraint:
    coeffs: dict
    sense: str
    rhs: float
    tag: object = None


def _block_arrays(J: Multiset, bounds: BoundsFn):
    """Kronecker-structured bound-factor block for ``J``.

    Returns (matrix, power_combos): matrix[r, c] is the coefficient of
    the monomial with exponents ``power_combos[c]`` in row ``r``; rows
    are ordered like ``power_combos`` read as lower-factor counts.
    """
    mats, radices = [], []
    for k, m in J.entries:
        l, u = bounds(k)
        if not (math.isfinite(l) and math.isfinite(u)):
            raise UnboundedKey(f"key {k!r} has infinite bounds")
        if l < 0:
            raise NegativeLowerBound(f"key {k!r} has lower bound {l} < 0")
        mats.append(_factor_matrix(float(l), float(u), m))
        radices.append(m + 1)
    mat = mats[0].copy()
    for other in mats[1:]:
        mat = np.kron(mat, other)
    combos = np.array(np.unravel_index(np.arange(mat.shape[1]), radices)).T
    return mat, combos


def bound_factor_block(J: Multiset, bounds) -> list[LinearConstraint]:
    """Linearized bound-factor constraints ``[F(J1, J2)]_L >= 0`` for ``J``.

    One row per way of splitting ``J`` into lower factors (x - l) and
    upper factors (u - x); with repeated keys identical splits collapse,
    so a key of multiplicity m contributes m + 1 choices.
    """
    if J.size < 2:
        raise ValueError("bound factors need |J| >= 2")
    fn = bounds if callable(bounds) else (lambda k: bounds[k.id])
    mat, combos = _block_arrays(J, fn)
    keys = J.keys()
    monos = [Multiset._from_sorted(tuple((keys[i], int(p)) for i, p in enumerate(row) if p)) for row in combos]
    rows = []
    choices = np.array(np.unravel_index(np.arange(mat.shape[0]), [m + 1 for _, m in J.entries])).T
    for r in range(mat.shape[0]):
        coeffs, const = {}, 0.0
        for c, v in enumerate(mat[r]):
            if abs(v) < COEF_TOL:
                continue
            if monos[c].size == 0:
                const += v
            else:
                coeffs[monos[c]] = coeffs.get(monos[c], 0.0) + v
        if not coeffs and abs(const) < COEF_TOL:
            continue
        rows.append(LinearConstraint(coeffs, GE, -const, BoundFactor(J, tuple(int(a) for a in choices[r]))))
    return rows


def linearize(poly: Polynomial, registry: dict | None = None):
    """Replace every monomial by its column; returns ``(coeffs, constant)``.

    ``registry`` (Multiset -> column index) is extended in place with any
    new columns when given.
    """
    coeffs: dict[Multiset, float] = {}
    const = 0.0
    for ms, c in poly.terms.items():
        if ms.size == 0:
            const += c
            continue
        coeffs[ms] = coeffs.get(ms, 0.0) + c
        if registry is not None and ms not in registry:
            registry[ms] = len(registry)
    return coeffs, const


def column_name(col: Multiset) -> str:
    def key(k: VarKey) -> str:
        return str(k.id + 1) if k.kind == ATOM else f"q{k.id + 1}"

    if col.size == 1:
        k = col.flat()[0]
        return f"x{k.id + 1}" if k.kind == ATOM else f"XQ{k.id + 1}"
    return "X_" + "_".join(key(k) for k in col.flat())


class LinearRelaxation:
    """An LP ``min c.y + c0`` over relaxation columns.

    Rows are kept as sparse triplets; :attr:`constraints` materializes
    :class:`LinearConstraint` objects on demand.
    """

    def __init__(self, n_original: int):
        self.columns: list[Multiset] = []
        self.index: dict[Multiset, int] = {}
        self.objective: dict[int, float] = {}
        self.objective_constant = 0.0
        self._chunks: list[tuple[np.ndarray, np.ndarray, np.ndarray]] = []
        self.senses: list[str] = []
        self.rhs: list[float] = []
        self.tags: list[object] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.n_original = n_original
        self.source = None
        self.box = None

    # -- construction -----------------------------------------------------

    def column(self, col: Multiset, bounds_fn: BoundsFn) -> int:
        idx = self.index.get(col)
        if idx is None:
            idx = len(self.columns)
            self.columns.append(col)
            self.index[col] = idx
            lo, hi = aux_bounds(col, bounds_fn)
            self.lower.append(lo)
            self.upper.append(hi)
        return idx

    def add_row(self, coeffs: Mapping[Multiset, float], sense: str, rhs: float, tag, bounds_fn: BoundsFn):
        r = len(self.senses)
        kept = [(self.column(col, bounds_fn), v) for col, v in coeffs.items() if abs(v) >= COEF_TOL]
        if kept:
            cols, vals = zip(*kept)
            self._chunks.append((np.full(len(cols), r), np.array(cols), np.array(vals, dtype=float)))
        self.senses.append(sense)
        self.rhs.append(float(rhs))
        self.tags.append(tag)

    def add_bound_factors(self, J: Multiset, bounds_fn: BoundsFn):
        """Vectorized equivalent of adding every row of ``bound_factor_block``."""
        mat, combos = _block_arrays(J, bounds_fn)
        keys = J.keys()
        sizes = combos.sum(axis=1)
        const_col = int(np.flatnonzero(sizes == 0)[0])
        consts = mat[:, const_col].copy()
        var_cols = np.flatnonzero(sizes > 0)
        idx = np.array(
            [
                self.column(Multiset._from_sorted(tuple((keys[i], int(q)) for i, q in enumerate(combos[c]) if q)), bounds_fn)
                for c in var_cols
            ]
        )
        sub = mat[:, var_cols]
        sub[np.abs(sub) < COEF_TOL] = 0.0
        consts[np.abs(consts) < COEF_TOL] = 0.0
        keep = np.flatnonzero((sub != 0).any(axis=1) | (consts != 0))
        choices = np.array(np.unravel_index(keep, [m + 1 for _, m in J.entries])).T
        base = len(self.senses)
        rr, cc = np.nonzero(sub[keep])
        self._chunks.append((base + rr, idx[cc], sub[keep][rr, cc]))
        for pos, r in enumerate(keep):
            self.senses.append(GE)
            self.rhs.append(float(-consts[r]))
            self.tags.append(BoundFactor(J, tuple(int(a) for a in choices[pos])))

    # -- views ------------------------------------------------------------

    @property
    def n_vars(self) -> int:
        return len(self.columns)

    @property
    def n_cons(self) -> int:
        return len(self.senses)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if not self._chunks:
            return np.zeros(0, dtype=int), np.zeros(0, dtype=int), np.zeros(0)
        rows, cols, vals = zip(*self._chunks)
        return np.concatenate(rows).astype(int), np.concatenate(cols).astype(int), np.concatenate(vals)

    def matrix(self) -> sparse.csr_matrix:
        rows, cols, vals = self.triplets()
        return sparse.csr_matrix((vals, (rows, cols)), shape=(self.n_cons, self.n_vars))

    def cost(self) -> np.ndarray:
        c = np.zeros(self.n_vars)
        for i, v in self.objective.items():
            c[i] += v
        return c

    def row(self, r: int) -> LinearConstraint:
        return self.constraints[r]

    @property
    def constraints(self) -> list[LinearConstraint]:
        rows = [dict() for _ in range(self.n_cons)]
        for r, c, v in zip(*self.triplets()):
            col = self.columns[c]
            rows[r][col] = rows[r].get(col, 0.0) + v
        return [LinearConstraint(rows[i], self.senses[i], self.rhs[i], self.tags[i]) for i in range(self.n_cons)]

    def var_bounds(self) -> dict[Multiset, tuple[float, float]]:
        return {col: (self.lower[i], self.upper[i]) for i, col in enumerate(self.columns)}

    def count_tags(self, kind: type) -> int:
        return sum(1 for t in self.tags if isinstance(t, kind))

    def objective_value(self, y) -> float:
        return math.fsum([self.objective_constant] + [v * y[i] for i, v in self.objective.items()])

    def rebuild(self, lower: Sequence[float], upper: Sequence[float]) -> "LinearRelaxation":
        """Same relaxation over a new box of the original variables.

        Bound-factor coefficients and auxiliary/RLT bounds depend on the
        box, so everything is regenerated from the source program.
        """
        if self.source is None:
            raise ValueError("relaxation has no source program to rebuild from")
        return build_relaxation(self.source, box=(list(lower), list(upper)))

    def __repr__(self) -> str:
        return f"LinearRelaxation(n_vars={self.n_vars}, n_cons={self.n_cons})"


def key_bounds_fn(lower: Sequence[float], upper: Sequence[float], aux_defs: Sequence[Multiset] = ()) -> BoundsFn:
    """Interval of each key: box bounds for atoms, product bounds for auxes."""
    cache: dict[VarKey, tuple[float, float]] = {}

    def fn(k: VarKey) -> tuple[float, float]:
        if k.kind == ATOM:
            return lower[k.id], upper[k.id]
        hit = cache.get(k)
        if hit is None:
            hit = cache[k] = aux_bounds(aux_defs[k.id], fn)
        return hit

    return fn


def build_relaxation(p, box=None) -> LinearRelaxation:
    """RLT relaxation with J-set bound factors of a program.

    ``p`` is a :class:`PolynomialProgram` or a reduced program (anything
    with ``program``, ``aux_defs`` and ``defining`` attributes).  ``box``
    optionally overrides the original variables' ``(lower, upper)``.
    """
    if isinstance(p, PolynomialProgram):
        program, aux_defs, n_defining, defining_ids = p, (), 0, []
    else:
        program, aux_defs = p.program, p.aux_defs
        defining_ids = [aid for aid, _ in p.defining]
        n_defining = len(defining_ids)
    lower, upper = (program.lower, program.upper) if box is None else box
    for lo in lower:
        if lo < 0:
            raise NegativeLowerBound("lower bounds must be nonnegative")
    bounds_fn = key_bounds_fn(lower, upper, aux_defs)

    rel = LinearRelaxation(program.n)
    rel.source = p
    rel.box = (list(lower), list(upper))
    for j in range(program.n):
        rel.column(Multiset._from_sorted(((atom(j), 1),)), bounds_fn)

    coeffs, const = linearize(program.objective)
    for col, v in sorted(coeffs.items()):
        i = rel.column(col, bounds_fn)
        rel.objective[i] = rel.objective.get(i, 0.0) + v
    rel.objective_constant = const

    first_defining = len(program.constraints) - n_defining
    for r, con in enumerate(program.constraints):
        coeffs, const = linearize(con.poly)
        rhs = con.rhs - const
        if not coeffs and abs(rhs) < COEF_TOL:
            continue
        tag = Defining(defining_ids[r - first_defining]) if r >= first_defining else Linearized(r)
        rel.add_row(dict(sorted(coeffs.items())), con.sense, rhs, tag, bounds_fn)

    for J in compute_jsets(program.monomials(2)):
        rel.add_bound_factors(J, bounds_fn)
    return rel


# --------------------------------------------------------------------------
# MPS


def write_mps(rel: LinearRelaxation, name: str = "POLYRLT") -> str:
    """Fixed-layout MPS text of ``rel`` (names may exceed 8 characters)."""
    A = rel.matrix().tocsc()
    cost = rel.cost()
    names = [column_name(c) for c in rel.columns]
    lines = [f"NAME          {name}", "ROWS", " N  OBJ"]
    for r, s in enumerate(rel.senses):
        lines.append(f" {'E' if s == EQ else 'G'}  R{r + 1}")
    lines.append("COLUMNS")
    for j in range(rel.n_vars):
        entries = []
        if cost[j] != 0:
            entries.append(("OBJ", cost[j]))
        for p in range(A.indptr[j], A.indptr[j + 1]):
            entries.append((f"R{A.indices[p] + 1}", A.data[p]))
        for row, v in entries:
            lines.append(f"    {names[j]:<8}  {row:<8}  {v:.17g}")
    lines.append("RHS")
    if rel.objective_constant:
        lines.append(f"    RHS       OBJ       {-rel.objective_constant:.17g}")
    for r, b in enumerate(rel.rhs):
        if b:
            lines.append(f"    RHS       {'R' + str(r + 1):<8}  {b:.17g}")
    lines.append("BOUNDS")
    for j in range(rel.n_vars):
        lo, hi = rel.lower[j], rel.upper[j]
        if lo == hi:
            lines.append(f" FX BND       {names[j]:<8}  {lo:.17g}")
            continue
        if lo != 0:
            lines.append(f" LO BND       {names[j]:<8}  {lo:.17g}")
        lines.append(f" UP BND       {names[j]:<8}  {hi:.17g}")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


@dataclass
class MPSModel:
    """Arrays read back from an MPS file: ``min c.x + c0`` s.t. rows."""

    columns: list[str]
    c: np.ndarray
    c0: float
    A: np.ndarray
    senses: list[str]
    b: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def read_mps(text: str) -> MPSModel:
    """Minimal reader for the subset of MPS produced by :func:`write_mps`."""
    section = None
    row_sense: dict[str, str] = {}
    row_order: list[str] = []
    obj_row = None
    cols: dict[str, int] = {}
    entries: list[tuple[str, str, float]] = []
    rhs: dict[str, float] = {}
    bounds: list[tuple[str, str, float]] = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("*"):
            continue
        if not line[0].isspace():
            section = line.split()[0]
            continue
        parts = line.split()
        if section == "ROWS":
            kind, rname = parts
            if kind == "N":
                obj_row = rname
            else:
                row_sense[rname] = {"G": GE, "E": EQ, "L": "<="}[kind]
                row_order.append(rname)
        elif section == "COLUMNS":
            cname = parts[0]
            cols.setdefault(cname, len(cols))
            for i in range(1, len(parts), 2):
                entries.append((cname, parts[i], float(parts[i + 1])))
        elif section == "RHS":
            for i in range(1, len(parts), 2):
                rhs[parts[i]] = float(parts[i + 1])
        elif section == "BOUNDS":
            kind, _, cname = parts[:3]
            bounds.append((kind, cname, float(parts[3]) if len(parts) > 3 else 0.0))
    ridx = {r: i for i, r in enumerate(row_order)}
    A = np.zeros((len(row_order), len(cols)))
    c = np.zeros(len(cols))
    for cname, rname, v in entries:
        if rname == obj_row:
            c[cols[cname]] += v
        else:
            A[ridx[rname], cols[cname]] += v
    lower = np.zeros(len(cols))
    upper = np.full(len(cols), np.inf)
    for kind, cname, v in bounds:
        j = cols[cname]
        if kind == "LO":
            lower[j] = v
        elif kind == "UP":
            upper[j] = v
        elif kind == "FX":
            lower[j] = upper[j] = v
    b = np.array([rhs.get(r, 0.0) for r in row_order])
    return MPSModel(
        list(cols), c, -rhs.get(obj_row, 0.0), A, [row_sense[r] for r in row_order], b, lower, upper
    )
