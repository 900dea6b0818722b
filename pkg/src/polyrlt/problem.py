"""Polynomial programs: data model, text/JSON format, evaluation, generators."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .algebra import (
    ATOM,
    AUX,
    Multiset,
    Polynomial,
    VarKey,
    atom,
    aux,
    canonicalize,
    evaluate,
)
from .exceptions import (
    DimensionMismatch,
    EmptyObjective,
    InvalidConfig,
    NegativeLowerBound,
    ProblemSyntaxError,
    UnknownVariable,
)

GE = ">="
EQ = "="
LE = "<="
SENSES = (GE, EQ, LE)


@dataclass(frozen=True)
class Constraint:
    poly: Polynomial
    sense: str
    rhs: float

    def residual(self, values) -> float:
        """Signed violation-free measure: >= 0 means satisfied for GE."""
        return evaluate(self.poly, values) - self.rhs


class PolynomialProgram:
    """minimize objective(x) s.t. constraints, l <= x <= u with l >= 0.

    Constraints are stored in normalized form: ``<=`` rows are negated
    into ``>=`` rows and all inequalities precede the equalities.
    Polynomials may mention auxiliary keys when the program is the output
    of a reduction scheme; bounds are only stored for the original
    variables.
    """

    def __init__(
        self,
        names: Sequence[str] | None,
        lower: Sequence[float],
        upper: Sequence[float],
        objective: Polynomial,
        constraints: Iterable[Constraint] = (),
    ):
        lower = [float(v) for v in lower]
        upper = [float(v) for v in upper]
        if len(lower) != len(upper):
            raise DimensionMismatch("lower and upper bounds differ in length")
        if names is None:
            names = [f"x{j + 1}" for j in range(len(lower))]
        if len(names) != len(lower):
            raise DimensionMismatch("names and bounds differ in length")
        for j, (lo, hi) in enumerate(zip(lower, upper)):
            if lo < 0:
                raise NegativeLowerBound(f"variable {names[j]} has lower bound {lo} < 0")
            if not (math.isfinite(hi) and lo <= hi):
                raise ValueError(f"variable {names[j]} needs finite bounds with l <= u, got [{lo}, {hi}]")
        self.names = list(names)
        self.lower = lower
        self.upper = upper
        self.objective = objective
        normalized = []
        for con in constraints:
            if con.sense == LE:
                con = Constraint(-con.poly, GE, -con.rhs)
            elif con.sense not in (GE, EQ):
                raise ValueError(f"unknown constraint sense {con.sense!r}")
            normalized.append(con)
        self.constraints = [c for c in normalized if c.sense == GE] + [c for c in normalized if c.sense == EQ]

    @property
    def n(self) -> int:
        return len(self.lower)

    @property
    def n_inequalities(self) -> int:
        return sum(1 for c in self.constraints if c.sense == GE)

    @property
    def degree(self) -> int:
        return max([self.objective.degree] + [c.poly.degree for c in self.constraints])

    def polynomials(self) -> list[Polynomial]:
        return [self.objective] + [c.poly for c in self.constraints]

    def monomials(self, min_size: int = 2) -> list[Multiset]:
        """Distinct monomials of size >= ``min_size``, in canonical order."""
        seen = set()
        for poly in self.polynomials():
            seen.update(ms for ms in poly.terms if ms.size >= min_size)
        return sorted(seen)

    def bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.lower, self.upper))

    def with_bounds(self, lower, upper) -> "PolynomialProgram":
        return PolynomialProgram(self.names, lower, upper, self.objective, self.constraints)

    def with_objective(self, objective: Polynomial) -> "PolynomialProgram":
        return PolynomialProgram(self.names, self.lower, self.upper, objective, self.constraints)

    def objective_value(self, x) -> float:
        return evaluate(self.objective, x, self.n)

    def max_violation(self, x) -> float:
        """Largest constraint or box violation at the point ``x``."""
        if len(x) != self.n:
            raise DimensionMismatch(f"expected {self.n} values, got {len(x)}")
        worst = 0.0
        for j in range(self.n):
            worst = max(worst, self.lower[j] - x[j], x[j] - self.upper[j])
        for con in self.constraints:
            r = con.residual(x)
            worst = max(worst, -r if con.sense == GE else abs(r))
        return worst

    def is_feasible(self, x, tol: float = 1e-6) -> bool:
        return self.max_violation(x) <= tol

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PolynomialProgram)
            and self.names == other.names
            and self.lower == other.lower
            and self.upper == other.upper
            and self.objective == other.objective
            and self.constraints == other.constraints
        )

    def __repr__(self) -> str:
        return f"PolynomialProgram(n={self.n}, degree={self.degree}, constraints={len(self.constraints)})"


# --------------------------------------------------------------------------
# text format

_SECTIONS = ("vars", "objective", "constraints", "aux", "defining")


def _fmt(v: float) -> str:
    v = float(v)
    if v == 0:
        v = 0.0  # no negative zero in output
    return format(v, ".17g")


def _key_token(k: VarKey) -> str:
    return str(k.id + 1) if k.kind == ATOM else f"q{k.id + 1}"


def _term_tokens(ms: Multiset, coef: float) -> str:
    return " ".join([_fmt(coef)] + [_key_token(k) for k in ms.flat()])


def _poly_lines(poly: Polynomial) -> list[str]:
    return [_term_tokens(ms, c) for ms, c in poly.items()]


def serialize_problem(p: PolynomialProgram) -> str:
    """Deterministic text form; ``parse_problem`` inverts it exactly."""
    out = ["vars"]
    for name, lo, hi in zip(p.names, p.lower, p.upper):
        out.append(f"{name} {_fmt(lo)} {_fmt(hi)}")
    out.append("objective")
    out.extend(_poly_lines(p.objective))
    if p.constraints:
        out.append("constraints")
        for con in p.constraints:
            terms = " ; ".join(_term_tokens(ms, c) for ms, c in con.poly.items())
            out.append(f"{con.sense} {_fmt(con.rhs)} {terms}".rstrip())
    return "\n".join(out) + "\n"


class _Tokens:
    def __init__(self, line: str, lineno: int):
        self.lineno = lineno
        self.items = []
        col = 0
        for raw in line.split(" "):
            if raw:
                self.items.append((raw, col + 1))
            col += len(raw) + 1

    def error(self, message: str, idx: int | None = None) -> ProblemSyntaxError:
        col = self.items[idx][1] if idx is not None and idx < len(self.items) else 1
        return ProblemSyntaxError(message, self.lineno, col)

    def number(self, idx: int) -> float:
        tok = self.items[idx][0]
        try:
            return float(tok)
        except ValueError:
            raise self.error(f"expected a number, got {tok!r}", idx) from None


def _parse_key(tok: str, n: int, n_aux: int, toks: _Tokens, idx: int, allow_aux: bool) -> VarKey:
    if tok[:1] in ("q", "Q"):
        if not allow_aux:
            raise UnknownVariable(f"line {toks.lineno}: auxiliary variable {tok!r} in a plain problem")
        try:
            i = int(tok[1:])
        except ValueError:
            raise toks.error(f"bad auxiliary token {tok!r}", idx) from None
        if not 1 <= i <= n_aux:
            raise UnknownVariable(f"line {toks.lineno}: unknown auxiliary variable {tok!r}")
        return aux(i - 1)
    try:
        j = int(tok)
    except ValueError:
        raise toks.error(f"expected a variable index, got {tok!r}", idx) from None
    if not 1 <= j <= n:
        raise UnknownVariable(f"line {toks.lineno}: variable index {j} outside 1..{n}")
    return atom(j - 1)


def _parse_term(toks: _Tokens, start: int, stop: int, n: int, n_aux: int, allow_aux: bool):
    if start >= stop:
        raise toks.error("empty term", start)
    coef = toks.number(start)
    keys = [_parse_key(toks.items[i][0], n, n_aux, toks, i, allow_aux) for i in range(start + 1, stop)]
    return canonicalize(keys), coef


def _parse_text(text: str, allow_aux: bool):
    sections: dict[str, list[_Tokens]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].replace("\t", " ").replace(";", " ; ").rstrip()
        if not line.strip():
            continue
        head = line.strip().lower()
        if head in _SECTIONS:
            if head in sections:
                raise ProblemSyntaxError(f"duplicate section {head!r}", lineno, 1)
            current = head
            sections[current] = []
            continue
        if current is None:
            raise ProblemSyntaxError("content before the first section header", lineno, 1)
        sections[current].append(_Tokens(line, lineno))

    if "vars" not in sections or not sections["vars"]:
        raise ProblemSyntaxError("missing 'vars' section")
    names, lower, upper = [], [], []
    for toks in sections["vars"]:
        if len(toks.items) != 3:
            raise toks.error("expected 'name lb ub'", 0)
        names.append(toks.items[0][0])
        lower.append(toks.number(1))
        upper.append(toks.number(2))
    n = len(names)
    for j, lo in enumerate(lower):
        if lo < 0:
            raise NegativeLowerBound(f"variable {names[j]} has lower bound {lo} < 0")

    aux_defs: list[Multiset] = []
    for toks in sections.get("aux", []):
        if not allow_aux:
            raise toks.error("'aux' section only allowed in reduced programs", 0)
        tag = toks.items[0][0]
        if tag.lower() != f"q{len(aux_defs) + 1}":
            raise toks.error(f"expected q{len(aux_defs) + 1}, got {tag!r}", 0)
        keys = [_parse_key(toks.items[i][0], n, 0, toks, i, False) for i in range(1, len(toks.items))]
        aux_defs.append(canonicalize(keys))
    n_aux = len(aux_defs)

    obj_terms = [_parse_term(t, 0, len(t.items), n, n_aux, allow_aux) for t in sections.get("objective", [])]
    if not obj_terms:
        raise EmptyObjective("objective section is missing or empty")
    objective = Polynomial(obj_terms)

    constraints = []
    for toks in sections.get("constraints", []):
        if len(toks.items) < 2:
            raise toks.error("expected 'sense rhs terms...'", 0)
        sense = toks.items[0][0]
        if sense not in SENSES:
            raise toks.error(f"unknown sense {sense!r}", 0)
        rhs = toks.number(1)
        terms, start = [], 2
        bounds = [i for i, (tok, _) in enumerate(toks.items) if tok == ";"]
        for stop in bounds + [len(toks.items)]:
            if stop > start or stop != len(toks.items):
                terms.append(_parse_term(toks, start, stop, n, n_aux, allow_aux))
            start = stop + 1
        constraints.append(Constraint(Polynomial(terms), sense, rhs))

    defining = []
    for toks in sections.get("defining", []):
        if not allow_aux:
            raise toks.error("'defining' section only allowed in reduced programs", 0)
        if len(toks.items) < 3 or toks.items[1][0] != "=":
            raise toks.error("expected 'q<k> = factor factor ...'", 0)
        head = _parse_key(toks.items[0][0], n, n_aux, toks, 0, True)
        if head.kind != AUX:
            raise toks.error("defining rows must start with an auxiliary variable", 0)
        factors = [_parse_key(toks.items[i][0], n, n_aux, toks, i, True) for i in range(2, len(toks.items))]
        defining.append((head.id, canonicalize(factors)))

    return names, lower, upper, objective, constraints, aux_defs, defining


def _parse_json(text: str, allow_aux: bool):
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    lines = ["vars"]
    for v in data.get("vars", []):
        lines.append(f"{v['name']} {_fmt(v['lb'])} {_fmt(v['ub'])}")
    if allow_aux and data.get("aux"):
        lines.append("aux")
        for i, idxs in enumerate(data["aux"]):
            lines.append(" ".join([f"q{i + 1}"] + [str(t) for t in idxs]))
    lines.append("objective")
    for term in data.get("objective", []):
        lines.append(" ".join(str(t) for t in term))
    if data.get("constraints"):
        lines.append("constraints")
        for con in data["constraints"]:
            terms = " ; ".join(" ".join(str(t) for t in term) for term in con["terms"])
            lines.append(f"{con['sense']} {con['rhs']} {terms}")
    if allow_aux and data.get("defining"):
        lines.append("defining")
        for row in data["defining"]:
            lines.append(" ".join(str(t) for t in [row[0], "="] + list(row[1:])))
    return _parse_text("\n".join(lines), allow_aux)


def _read(text, allow_aux: bool):
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    if text.lstrip().startswith("{"):
        return _parse_json(text, allow_aux)
    return _parse_text(text, allow_aux)


def parse_problem(text: str | bytes) -> PolynomialProgram:
    """Parse the text (or JSON) problem format into a validated program."""
    names, lower, upper, objective, constraints, _, _ = _read(text, allow_aux=False)
    return PolynomialProgram(names, lower, upper, objective, constraints)


def problem_to_json(p: PolynomialProgram) -> str:
    def terms(poly):
        return [[c] + [k.id + 1 for k in ms.flat()] for ms, c in poly.items()]

    data = {
        "vars": [{"name": nm, "lb": lo, "ub": hi} for nm, lo, hi in zip(p.names, p.lower, p.upper)],
        "objective": terms(p.objective),
        "constraints": [{"sense": c.sense, "rhs": c.rhs, "terms": terms(c.poly)} for c in p.constraints],
    }
    return json.dumps(data, indent=1)


def load_problem(path) -> PolynomialProgram:
    with open(path, "rb") as fh:
        return parse_problem(fh.read())


# --------------------------------------------------------------------------
# generators


@dataclass
class GeneratorConfig:
    """Raise a degree-2 base program to degree ``delta``.

    ``multilinear`` draws the variables of each new monomial without
    replacement (no powers), which keeps the optimum at a box vertex.
    """

    base: PolynomialProgram
    delta: int
    k: int = 1
    seed: int = 0
    coef_range: tuple[float, float] = (-10.0, 10.0)
    multilinear: bool = False


def generate_instance(cfg: GeneratorConfig) -> PolynomialProgram:
    base = cfg.base
    if base.degree != 2:
        raise InvalidConfig(f"base program must have degree 2, has {base.degree}")
    if cfg.delta < 3:
        raise InvalidConfig("delta must be at least 3")
    if cfg.k < 1:
        raise InvalidConfig("k must be at least 1")
    lo, hi = cfg.coef_range
    if not lo <= hi:
        raise InvalidConfig("coef_range must be (low, high) with low <= high")
    if cfg.multilinear and cfg.delta > base.n:
        raise InvalidConfig("multilinear monomials of degree delta need delta <= n")
    rng = np.random.default_rng(cfg.seed)
    added = []
    for _ in range(cfg.k):
        for size in range(2, cfg.delta + 1):
            idx = rng.choice(base.n, size=size, replace=not cfg.multilinear)
            coef = rng.uniform(lo, hi)
            added.append((canonicalize(atom(int(j)) for j in idx), coef))
    objective = base.objective + Polynomial(added)
    return base.with_objective(objective)


def random_base(
    n: int,
    density: float = 0.5,
    seed: int = 0,
    n_constraints: int = 0,
    multilinear: bool = False,
    coef_range: tuple[float, float] = (-10.0, 10.0),
) -> PolynomialProgram:
    """Random degree-2 program over ``[0, 1]^n``.

    Each linear term is present; each bilinear (and, unless
    ``multilinear``, square) term is present with probability
    ``density``.  Inequality constraints, if requested, are built to hold
    at a random interior point.
    """
    if n < 1 or not 0 < density <= 1:
        raise InvalidConfig("need n >= 1 and 0 < density <= 1")
    if multilinear and n < 2:
        raise InvalidConfig("a multilinear degree-2 base needs n >= 2")
    rng = np.random.default_rng(seed)
    lo, hi = coef_range

    def quadratic_poly():
        terms = [(Multiset.of(j), rng.uniform(lo, hi)) for j in range(n)]
        pairs = [(a, b) for a in range(n) for b in range(a if not multilinear else a + 1, n)]
        chosen = [pr for pr in pairs if rng.random() < density]
        if not chosen:
            chosen = [pairs[int(rng.integers(len(pairs)))]]
        terms += [(Multiset.of(a, b), rng.uniform(lo, hi)) for a, b in chosen]
        return Polynomial(terms)

    objective = quadratic_poly()
    constraints = []
    x0 = rng.uniform(0.0, 1.0, size=n)
    for _ in range(n_constraints):
        poly = quadratic_poly()
        rhs = evaluate(poly, x0) - rng.uniform(0.0, 1.0)
        constraints.append(Constraint(poly, GE, rhs))
    return PolynomialProgram(None, [0.0] * n, [1.0] * n, objective, constraints)
