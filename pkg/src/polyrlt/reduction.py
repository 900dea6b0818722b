"""Degree reduction of polynomial programs (quadrification when d = 2).

Every scheme replaces each monomial of degree greater than ``d`` by an
auxiliary variable and adds equality rows ``XQ_J = product`` whose right
hand sides have degree at most ``d``.  The schemes differ only in which
defining rows they add:

``s1``
    one chain per monomial, peeling ``d - 1`` trailing variables at a time.
``s2``
    every sub-multiset of every J-set, with every decomposition into
    ``2..d`` parts.
``s3``
    like ``s2`` but over every multiset of degree ``2..delta`` in the
    problem's variables.
``quadrlt``
    like ``s1``, but each chain starts from the largest monomial of the
    problem already contained in the one being reduced.

Auxiliary variables are keyed by the multiset of original variables they
stand for, so chains that meet reuse each other's definitions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from sympy.utilities.iterables import multiset_partitions

from .algebra import (
    ATOM,
    Multiset,
    Polynomial,
    VarKey,
    all_multisets,
    atom,
    aux,
    canonicalize,
    complement,
    count_multisets,
    evaluate,
    is_submultiset,
    submultisets,
)
from .exceptions import InvalidConfig, ResourceLimit
from .problem import EQ, Constraint, PolynomialProgram, _fmt, _key_token, _read, _term_tokens
from .rlt import compute_jsets

SCHEMES = ("baseline", "s1", "s2", "s3", "quadrlt")
DEFAULT_CAP = 200_000


@dataclass
class ReducedProgram:
    """A program of degree <= ``d`` equivalent to ``source``.

    ``aux_defs[i]`` is the multiset of original variables auxiliary ``i``
    stands for; ``defining`` lists ``(aux id, factors)`` rows meaning
    ``XQ_i = prod(factors)``.  The defining rows are also the trailing
    equality constraints of ``program``.
    """

    program: PolynomialProgram
    aux_defs: list[Multiset]
    defining: list[tuple[int, Multiset]]
    scheme: str
    d: int
    source: PolynomialProgram | None = None

    @property
    def n_aux(self) -> int:
        return len(self.aux_defs)

    def lift(self, x) -> dict[VarKey, float]:
        """Key values with every auxiliary set to its defining product."""
        values = {atom(j): float(v) for j, v in enumerate(x)}
        for i, ms in enumerate(self.aux_defs):
            values[aux(i)] = evaluate(Polynomial({ms: 1.0}), values)
        return values

    def expanded(self, poly: Polynomial) -> Polynomial:
        """``poly`` with auxiliaries replaced by their original products."""
        return poly.substitute({aux(i): ms for i, ms in enumerate(self.aux_defs)})

    def defining_signatures(self) -> set[tuple[Multiset, Multiset]]:
        """Rows as (target atoms, factor atom-multisets) for scheme comparison."""
        out = set()
        for aid, factors in self.defining:
            parts = []
            for k in factors.flat():
                parts.append(Multiset.of(k) if k.kind == ATOM else self.aux_defs[k.id])
            out.add((self.aux_defs[aid], tuple(sorted(parts))))
        return out

    def source_constraints(self) -> list[Constraint]:
        return self.program.constraints[: len(self.program.constraints) - len(self.defining)]


class _Builder:
    def __init__(self, d: int, cap: int):
        self.d = d
        self.cap = cap
        self.aux_id: dict[Multiset, int] = {}
        self.aux_defs: list[Multiset] = []
        self.defined: set[Multiset] = set()
        self.rows: list[tuple[int, Multiset]] = []
        self._row_set: set[tuple[int, Multiset]] = set()
        self._products: set[Multiset] = set()

    def key(self, ms: Multiset) -> VarKey:
        """Atom for a single variable, auxiliary key otherwise."""
        if ms.size == 1:
            return ms.flat()[0]
        i = self.aux_id.get(ms)
        if i is None:
            i = self.aux_id[ms] = len(self.aux_defs)
            self.aux_defs.append(ms)
            self._check()
        return aux(i)

    def _check(self):
        if len(self.aux_defs) + len(self._products) > self.cap:
            raise ResourceLimit(f"more than {self.cap} generated variables")

    def define(self, target: Multiset, parts: Iterable[Multiset]):
        factors = canonicalize(self.key(p) for p in parts)
        row = (self.key(target).id, factors)
        if row not in self._row_set:
            self._row_set.add(row)
            self.rows.append(row)
            if factors.size > 1:
                self._products.add(factors)
                self._check()
        self.defined.add(target)

    def chain(self, J: Multiset):
        """Scheme-1 chain: peel ``d - 1`` trailing variables until |J| <= d."""
        d = self.d
        cur = J
        while cur not in self.defined:
            flat = cur.flat()
            if cur.size > d:
                cut = cur.size - d + 1
                prefix = canonicalize(flat[:cut])
                self.define(cur, [prefix] + [Multiset.of(k) for k in flat[cut:]])
                cur = prefix
            else:
                self.define(cur, [Multiset.of(k) for k in flat])
                break

    def seeded_chain(self, J: Multiset, seed: Multiset):
        """QUAD-RLT chain for ``J`` built on top of the monomial ``seed``."""
        d = self.d
        if seed.size <= d and seed not in self.defined:
            self.define(seed, [Multiset.of(k) for k in seed.flat()])
        rest = list(complement(J, seed).flat())
        while True:
            cur = seed | canonicalize(rest)
            if cur in self.defined:
                break
            if len(rest) >= d:
                cut = len(rest) - (d - 1)
                head = seed | canonicalize(rest[:cut])
                self.define(cur, [head] + [Multiset.of(k) for k in rest[cut:]])
                rest = rest[:cut]
            else:
                self.define(cur, [seed] + [Multiset.of(k) for k in rest])
                break

    def all_decompositions(self, Jp: Multiset):
        """Rows XQ_J' = product of 2..d parts, for every decomposition."""
        flat = [k.id for k in Jp.flat()]
        for parts in range(2, min(self.d, len(flat)) + 1):
            for blocks in multiset_partitions(flat, parts):
                self.define(Jp, [Multiset.of(*b) for b in blocks])

    def reduce_poly(self, poly: Polynomial) -> Polynomial:
        terms = []
        for ms, c in poly.terms.items():
            if ms.size > self.d:
                terms.append((Multiset.of(self.key(ms)), c))
            else:
                terms.append((ms, c))
        return Polynomial(terms)


def _check_args(p: PolynomialProgram, d: int):
    if d < 2:
        raise InvalidConfig("target degree d must be at least 2")
    for poly in p.polynomials():
        for ms in poly.terms:
            if not ms.is_atomic():
                raise InvalidConfig("source program must be over original variables only")


def _finish(p: PolynomialProgram, b: _Builder, scheme: str, d: int) -> ReducedProgram:
    undefined = [ms for ms in b.aux_defs if ms not in b.defined]
    if undefined:  # pragma: no cover - guarded by construction
        raise RuntimeError(f"auxiliaries without definition: {undefined}")
    # every factor is a strict sub-multiset of its target, so sorting by
    # target size lists each row after the rows its factors depend on
    rows = sorted(b.rows, key=lambda r: b.aux_defs[r[0]].size)
    objective = b.reduce_poly(p.objective)
    constraints = [Constraint(b.reduce_poly(c.poly), c.sense, c.rhs) for c in p.constraints]
    for aid, factors in rows:
        row = Polynomial({Multiset.of(aux(aid)): 1.0, factors: -1.0})
        constraints.append(Constraint(row, EQ, 0.0))
    program = PolynomialProgram(p.names, p.lower, p.upper, objective, constraints)
    return ReducedProgram(program, list(b.aux_defs), rows, scheme, d, p)


def _high(p: PolynomialProgram, d: int) -> list[Multiset]:
    return [J for J in p.monomials(2) if J.size > d]


def identity(p: PolynomialProgram, d: int = 2, scheme: str = "baseline") -> ReducedProgram:
    return ReducedProgram(p, [], [], scheme, d, p)


def apply_scheme1(p: PolynomialProgram, d: int = 2, cap: int = DEFAULT_CAP) -> ReducedProgram:
    _check_args(p, d)
    high = _high(p, d)
    if not high:
        return identity(p, d, "s1")
    b = _Builder(d, cap)
    for J in high:
        b.chain(J)
    return _finish(p, b, "s1", d)


def apply_scheme2(p: PolynomialProgram, d: int = 2, cap: int = DEFAULT_CAP) -> ReducedProgram:
    _check_args(p, d)
    if not _high(p, d):
        return identity(p, d, "s2")
    b = _Builder(d, cap)
    for J in compute_jsets(p.monomials(2)):
        if J.size <= d:
            continue
        for Jp in submultisets(J, min_size=2):
            b.all_decompositions(Jp)
    return _finish(p, b, "s2", d)


def apply_scheme3(p: PolynomialProgram, d: int = 2, cap: int = DEFAULT_CAP) -> ReducedProgram:
    _check_args(p, d)
    if not _high(p, d):
        return identity(p, d, "s3")
    delta = p.degree
    total = sum(count_multisets(p.n, s) for s in range(2, delta + 1))
    if total > cap:
        raise ResourceLimit(f"scheme 3 needs {total} auxiliary variables (cap {cap})")
    b = _Builder(d, cap)
    for s in range(2, delta + 1):
        for Jp in all_multisets(p.n, s):
            b.all_decompositions(Jp)
    return _finish(p, b, "s3", d)


def apply_quadrlt(p: PolynomialProgram, d: int = 2, cap: int = DEFAULT_CAP) -> ReducedProgram:
    _check_args(p, d)
    high = sorted(_high(p, d), key=lambda m: (-m.size, m.flat()))
    if not high:
        return identity(p, d, "quadrlt")
    low = [J for J in p.monomials(2) if J.size <= d]
    pool = high + low
    b = _Builder(d, cap)
    for J in high:
        if J in b.defined:
            continue
        cands = [Jp for Jp in pool if Jp.size < J.size and is_submultiset(Jp, J)]
        if cands:
            seed = min(cands, key=lambda m: (-m.size, m.flat()))
            b.seeded_chain(J, seed)
        else:
            b.chain(J)
    # seeds of degree > d are monomials of the problem, reduced in their own turn
    return _finish(p, b, "quadrlt", d)


_APPLY = {
    "s1": apply_scheme1,
    "s2": apply_scheme2,
    "s3": apply_scheme3,
    "quadrlt": apply_quadrlt,
}


def reduce_program(p: PolynomialProgram, scheme: str = "quadrlt", d: int = 2, cap: int = DEFAULT_CAP) -> ReducedProgram:
    """Apply ``scheme`` (one of :data:`SCHEMES`) with target degree ``d``."""
    if scheme == "baseline":
        _check_args(p, max(d, 2))
        return identity(p, d)
    try:
        fn = _APPLY[scheme]
    except KeyError:
        raise InvalidConfig(f"unknown scheme {scheme!r}; expected one of {SCHEMES}") from None
    return fn(p, d, cap)


# --------------------------------------------------------------------------
# text format for reduced programs


def serialize_reduced(r: ReducedProgram) -> str:
    p = r.program
    out = ["vars"]
    for name, lo, hi in zip(p.names, p.lower, p.upper):
        out.append(f"{name} {_fmt(lo)} {_fmt(hi)}")
    if r.aux_defs:
        out.append("aux")
        for i, ms in enumerate(r.aux_defs):
            out.append(" ".join([f"q{i + 1}"] + [_key_token(k) for k in ms.flat()]))
    out.append("objective")
    out.extend(_term_tokens(ms, c) for ms, c in p.objective.items())
    cons = r.source_constraints()
    if cons:
        out.append("constraints")
        for con in cons:
            terms = " ; ".join(_term_tokens(ms, c) for ms, c in con.poly.items())
            out.append(f"{con.sense} {_fmt(con.rhs)} {terms}".rstrip())
    if r.defining:
        out.append("defining")
        for aid, factors in r.defining:
            out.append(" ".join([f"q{aid + 1}", "="] + [_key_token(k) for k in factors.flat()]))
    out.append(f"# scheme {r.scheme} degree {r.d}")
    return "\n".join(out) + "\n"


def parse_reduced(text: str | bytes, scheme: str = "unknown", d: int | None = None) -> ReducedProgram:
    names, lower, upper, objective, constraints, aux_defs, defining = _read(text, allow_aux=True)
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    for line in text.splitlines():
        parts = line.split()
        if len(parts) == 5 and parts[:2] == ["#", "scheme"] and parts[3] == "degree":
            scheme, d = parts[2], int(parts[4])
    for aid, factors in defining:
        constraints.append(Constraint(Polynomial({Multiset.of(aux(aid)): 1.0, factors: -1.0}), EQ, 0.0))
    program = PolynomialProgram(names, lower, upper, objective, constraints)
    if d is None:
        d = program.degree
    return ReducedProgram(program, aux_defs, defining, scheme, d, None)
