"""Multisets of variable keys and sparse polynomials over them.

A monomial is identified by the multiset of variable keys it multiplies,
so ``x1**2 * x3`` is the multiset ``{x1, x1, x3}``.  Keys are either
original variables (atoms) or auxiliary variables introduced by a
degree-reduction scheme; atoms sort before auxiliaries.
"""

from __future__ import annotations

import math
from collections import Counter
from typing import Iterable, Iterator, Mapping, NamedTuple, Sequence

from .exceptions import DimensionMismatch, NotSubmultiset

ATOM = 0
AUX = 1

#: coefficients below this magnitude are dropped during normalization
COEF_TOL = 1e-12


class VarKey(NamedTuple):
    kind: int
    id: int

    def is_atom(self) -> bool:
        return self.kind == ATOM

    def __repr__(self) -> str:
        return f"x{self.id + 1}" if self.kind == ATOM else f"q{self.id + 1}"


def atom(j: int) -> VarKey:
    return VarKey(ATOM, j)


def aux(i: int) -> VarKey:
    return VarKey(AUX, i)


def _as_key(k) -> VarKey:
    if isinstance(k, VarKey):
        return k
    if isinstance(k, tuple):
        return VarKey(*k)
    return atom(int(k))


class Multiset:
    """Canonical, immutable bag of variable keys.

    Stored run-length as ``((key, multiplicity), ...)`` with strictly
    increasing keys.  Hashable and totally ordered (by size, then by the
    flat sorted key sequence) so it can index dictionaries and be used
    for deterministic tie-breaking.
    """

    __slots__ = ("entries", "_flat", "_hash", "_size")

    def __init__(self, entries: Iterable[tuple[VarKey, int]] = ()):
        merged: dict[VarKey, int] = {}
        for key, mult in entries:
            if mult < 0:
                raise ValueError("multiplicity must be nonnegative")
            if mult:
                key = _as_key(key)
                merged[key] = merged.get(key, 0) + mult
        self.entries = tuple(sorted(merged.items()))
        self._flat = None
        self._hash = hash(self.entries)
        self._size = sum(merged.values())

    @classmethod
    def of(cls, *keys) -> "Multiset":
        """``Multiset.of(0, 0, 2)`` is ``{x1, x1, x3}``; ints denote atoms."""
        return canonicalize([_as_key(k) for k in keys])

    @classmethod
    def _from_sorted(cls, entries: tuple) -> "Multiset":
        ms = cls.__new__(cls)
        ms.entries = entries
        ms._flat = None
        ms._hash = hash(entries)
        ms._size = sum(m for _, m in entries)
        return ms

    @property
    def size(self) -> int:
        return self._size

    def __len__(self) -> int:
        return self.size

    def __bool__(self) -> bool:
        return bool(self.entries)

    def flat(self) -> tuple[VarKey, ...]:
        """Keys repeated by multiplicity, in canonical order."""
        if self._flat is None:
            self._flat = tuple(k for k, m in self.entries for _ in range(m))
        return self._flat

    def keys(self) -> tuple[VarKey, ...]:
        return tuple(k for k, _ in self.entries)

    def multiplicity(self, key) -> int:
        key = _as_key(key)
        for k, m in self.entries:
            if k == key:
                return m
        return 0

    def as_counter(self) -> Counter:
        return Counter(dict(self.entries))

    def is_atomic(self) -> bool:
        return all(k.kind == ATOM for k, _ in self.entries)

    def has_repeats(self) -> bool:
        return any(m > 1 for _, m in self.entries)

    def __iter__(self) -> Iterator[VarKey]:
        return iter(self.flat())

    def __hash__(self) -> int:
        return self._hash

    def __eq__(self, other) -> bool:
        return isinstance(other, Multiset) and self.entries == other.entries

    def _order(self):
        return (self.size, self.flat())

    def __lt__(self, other: "Multiset") -> bool:
        return self._order() < other._order()

    def __le__(self, other: "Multiset") -> bool:
        return self._order() <= other._order()

    def __gt__(self, other: "Multiset") -> bool:
        return self._order() > other._order()

    def __ge__(self, other: "Multiset") -> bool:
        return self._order() >= other._order()

    def __repr__(self) -> str:
        return "{" + ",".join(repr(k) for k in self.flat()) + "}"

    def __or__(self, other: "Multiset") -> "Multiset":
        return union(self, other)

    def __sub__(self, other: "Multiset") -> "Multiset":
        return complement(self, other)


EMPTY = Multiset()


def canonicalize(keys: Iterable) -> Multiset:
    counts = Counter(_as_key(k) for k in keys)
    return Multiset._from_sorted(tuple(sorted(counts.items())))


def union(j1: Multiset, j2: Multiset) -> Multiset:
    """Multiset sum: multiplicities add."""
    if not j1.entries:
        return j2
    if not j2.entries:
        return j1
    merged = dict(j1.entries)
    for k, m in j2.entries:
        merged[k] = merged.get(k, 0) + m
    return Multiset._from_sorted(tuple(sorted(merged.items())))


def is_submultiset(sub: Multiset, sup: Multiset) -> bool:
    if sub.size > sup.size:
        return False
    big = dict(sup.entries)
    return all(big.get(k, 0) >= m for k, m in sub.entries)


def complement(j: Multiset, sub: Multiset) -> Multiset:
    """Elements of ``j`` left after removing those of ``sub``."""
    big = dict(j.entries)
    for k, m in sub.entries:
        have = big.get(k, 0)
        if have < m:
            raise NotSubmultiset(f"{sub!r} is not contained in {j!r}")
        big[k] = have - m
    return Multiset._from_sorted(tuple((k, m) for k, m in sorted(big.items()) if m))


def submultisets(j: Multiset, min_size: int = 0, max_size: int | None = None) -> Iterator[Multiset]:
    """Every sub-multiset of ``j`` (each once), filtered by size."""
    if max_size is None:
        max_size = j.size
    entries = j.entries

    def rec(i: int, acc: list, size: int):
        if i == len(entries):
            if min_size <= size <= max_size:
                yield Multiset._from_sorted(tuple(acc))
            return
        key, mult = entries[i]
        for take in range(mult + 1):
            if size + take > max_size:
                break
            if take:
                acc.append((key, take))
            yield from rec(i + 1, acc, size + take)
            if take:
                acc.pop()

    yield from rec(0, [], 0)


def all_multisets(n: int, size: int) -> Iterator[Multiset]:
    """All multisets of ``size`` atoms drawn from ``n`` variables."""
    from itertools import combinations_with_replacement

    for combo in combinations_with_replacement(range(n), size):
        yield canonicalize(atom(j) for j in combo)


def count_multisets(n: int, size: int) -> int:
    return math.comb(n + size - 1, size)


class Polynomial:
    """Sparse polynomial: mapping from monomial multiset to coefficient.

    Terms with ``|coef| < COEF_TOL`` are dropped on construction.
    """

    __slots__ = ("terms",)

    def __init__(self, terms: Mapping[Multiset, float] | Iterable[tuple[Multiset, float]] = ()):
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Multiset, float] = {}
        for ms, coef in items:
            acc[ms] = acc.get(ms, 0.0) + float(coef)
        self.terms = {ms: c for ms, c in acc.items() if abs(c) >= COEF_TOL}

    @classmethod
    def constant(cls, value: float) -> "Polynomial":
        return cls({EMPTY: value})

    @classmethod
    def variable(cls, key, coef: float = 1.0) -> "Polynomial":
        return cls({canonicalize([key]): coef})

    @classmethod
    def monomial(cls, keys: Iterable, coef: float = 1.0) -> "Polynomial":
        return cls({canonicalize(keys): coef})

    @property
    def degree(self) -> int:
        return max((ms.size for ms in self.terms), default=0)

    def monomials(self) -> list[Multiset]:
        return sorted(self.terms)

    def items(self):
        """Terms in canonical monomial order."""
        return [(ms, self.terms[ms]) for ms in sorted(self.terms)]

    def constant_term(self) -> float:
        return self.terms.get(EMPTY, 0.0)

    def is_zero(self) -> bool:
        return not self.terms

    def keys(self) -> set[VarKey]:
        return {k for ms in self.terms for k in ms.keys()}

    def __eq__(self, other) -> bool:
        return isinstance(other, Polynomial) and self.terms == other.terms

    def __hash__(self):  # pragma: no cover - polynomials are not used as keys
        return hash(frozenset(self.terms.items()))

    def __add__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        acc = dict(self.terms)
        for ms, c in other.terms.items():
            acc[ms] = acc.get(ms, 0.0) + c
        return Polynomial(acc)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial({ms: -c for ms, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            other = Polynomial.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            return Polynomial({ms: c * other for ms, c in self.terms.items()})
        acc: dict[Multiset, float] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                ms = union(m1, m2)
                acc[ms] = acc.get(ms, 0.0) + c1 * c2
        return Polynomial(acc)

    __rmul__ = __mul__

    def substitute(self, mapping: Mapping[VarKey, Multiset]) -> "Polynomial":
        """Replace keys by monomials (e.g. an auxiliary by its product)."""
        acc: dict[Multiset, float] = {}
        for ms, c in self.terms.items():
            out = EMPTY
            for k, m in ms.entries:
                rep = mapping.get(k)
                if rep is None:
                    out = union(out, Multiset._from_sorted(((k, m),)))
                else:
                    for _ in range(m):
                        out = union(out, rep)
            acc[out] = acc.get(out, 0.0) + c
        return Polynomial(acc)

    def __repr__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for ms, c in self.items():
            body = "*".join(repr(k) for k in ms.flat())
            parts.append(f"{c:+g}" + (f"*{body}" if body else ""))
        return " ".join(parts)


def expand_product(factors: Sequence[Polynomial]) -> Polynomial:
    """Fully distributed product of ``factors``."""
    if not factors:
        return Polynomial.constant(1.0)
    out = factors[0]
    for f in factors[1:]:
        out = out * f
    return out


def monomial_value(ms: Multiset, values) -> float:
    """Product of key values; ``values`` maps VarKey (or atom index) to a float."""
    v = 1.0
    for k, m in ms.entries:
        if isinstance(values, Mapping):
            x = values[k]
        else:
            if k.kind != ATOM:
                raise KeyError(k)
            x = values[k.id]
        v *= x**m
    return v


def evaluate(poly: Polynomial, point, n: int | None = None) -> float:
    """Evaluate ``poly`` at ``point``.

    ``point`` is either a sequence indexed by atom id (length checked
    against ``n`` when given) or a mapping from :class:`VarKey` to value.
    """
    if not isinstance(point, Mapping):
        if n is not None and len(point) != n:
            raise DimensionMismatch(f"expected {n} values, got {len(point)}")
        top = max((k.id for ms in poly.terms for k in ms.keys() if k.kind == ATOM), default=-1)
        if top >= len(point):
            raise DimensionMismatch(f"point has {len(point)} values, polynomial uses x{top + 1}")
    return math.fsum(c * monomial_value(ms, point) for ms, c in poly.terms.items())
