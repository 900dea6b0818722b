"""Acceptance criteria 1-12, one verdict line each.

Criteria that the implementation does not meet are marked strict xfail:
they print FAIL and show up as expected failures, never as passes.
"""

import itertools
import time

import numpy as np
import pytest

from polyrlt import GeneratorConfig, SolveOptions, build_relaxation, generate_instance, random_base, reduce_program, solve, solve_lp
from polyrlt.algebra import evaluate
from polyrlt.bench import compare, ordering_violations, root_stats_or_na
from polyrlt.problem import EQ
from polyrlt.reduction import SCHEMES
from polyrlt.rlt import BoundFactor

from conftest import ex1, ex2, ex3, ex4, ex5, multilinear_instances, program, suite_instances, vertex_oracle
from helpers import column_values, row_residuals

ROOT_TOL = 0.01
EXACT_ROOT_TOL = 1e-6
ORDER_TOL = 1e-6
ORACLE_REL = 1e-3
SEMANTIC_REL = 1e-9
SUITE_CAP = 20_000


def sizes(p, scheme, d=2):
    rel = build_relaxation(reduce_program(p, scheme, d))
    return rel.n_cons, rel.n_vars


def root(p, scheme, d=2):
    return solve_lp(build_relaxation(reduce_program(p, scheme, d))).objective


@pytest.mark.xfail(strict=True, reason="Scheme 1 keeps its auxiliary separate from the RLT column: 7 variables, not 6")
def test_criterion_01_example1_sizes(record):
    t0 = time.perf_counter()
    base = sizes(ex1(), "baseline")
    s1 = sizes(ex1(), "s1")
    elapsed = time.perf_counter() - t0
    ok = base == (8, 7) and s1 == (10, 6) and elapsed < 1.0
    record(1, ok, f"baseline (Ncons, Nvars)={base} want (8, 7); s1={s1} want (10, 6); {elapsed:.3f}s")
    assert ok


def test_criterion_02_constraint_flip(record):
    b, s = sizes(ex2(), "baseline")[0], sizes(ex2(), "s1")[0]
    ok = (b, s) == (16, 15)
    record(2, ok, f"Ncons baseline={b} s1={s} want 16 vs 15")
    assert ok


def test_criterion_03_variable_flip(record):
    b, s = sizes(ex3(), "baseline")[1], sizes(ex3(), "s1")[1]
    ok = (b, s) == (7, 9)
    record(3, ok, f"Nvars baseline={b} s1={s} want 7 vs 9")
    assert ok


def test_criterion_04_quadrlt_deltas(record):
    qc, qv = sizes(ex4(), "quadrlt")
    sc, sv = sizes(ex4(), "s1")
    ok = (sc - qc, sv - qv) == (4, 1)
    record(4, ok, f"s1 - quadrlt: {sc - qc} constraints, {sv - qv} variables want 4, 1")
    assert ok


def test_criterion_05_example5_roots(record):
    s1, qr = root(ex5(), "s1"), root(ex5(), "quadrlt")
    ok = abs(s1 + 38) <= ROOT_TOL and abs(qr + 43.81) <= ROOT_TOL
    record(5, ok, f"s1={s1:.6f} want -38; quadrlt={qr:.6f} want -43.81 (tol {ROOT_TOL})")
    assert ok


def test_criterion_06_example4_roots(record):
    s1, qr = root(ex4(), "s1"), root(ex4(), "quadrlt")
    ok = abs(qr) <= EXACT_ROOT_TOL and abs(s1 + 0.5) <= EXACT_ROOT_TOL
    record(6, ok, f"quadrlt={qr:.3g} want 0; s1={s1:.9g} want -0.5 (tol {EXACT_ROOT_TOL})")
    assert ok


def ordering_suite():
    """64 instances: n, delta in 3..6, k in {1, 3}, two seeds each."""
    out = []
    for seed in range(2):
        for i, (n, delta, k) in enumerate(itertools.product([3, 4, 5, 6], [3, 4, 5, 6], [1, 3])):
            s = seed * 100 + i
            p = generate_instance(GeneratorConfig(random_base(n, 0.5, seed=s), delta, k, seed=s))
            out.append((f"n{n}-delta{delta}-k{k}-s{s}", p))
    return out


@pytest.fixture(scope="module")
def suite_stats():
    stats, build = {}, 0.0
    for name, p in ordering_suite():
        for d in (2, 3, 4):
            entry = {("baseline", 0): root_stats_or_na(p, "baseline", d, SUITE_CAP)}
            for s in ("s1", "s2", "s3", "quadrlt"):
                entry[(s, d)] = root_stats_or_na(p, s, d, SUITE_CAP)
            build += sum(st.build_time for st in entry.values())
            stats[(name, d)] = entry
    return stats, build


def split(violations):
    size = [v for v in violations if " root: " not in v]
    bound = [v for v in violations if " root: " in v]
    return size, bound


@pytest.mark.xfail(strict=True, reason="QUAD-RLT exceeds Scheme 1 on some degree 3 and 4 reductions with repeated variables")
def test_criterion_07_size_orderings(record, suite_stats):
    stats, build = suite_stats
    violations = []
    for (name, _), entry in stats.items():
        violations += split(ordering_violations(entry, name))[0]
    skipped = sum(1 for e in stats.values() for st in e.values() if not st.available)
    instances = len({name for name, _ in stats})
    ok = not violations and instances >= 50 and build < 300
    record(7, ok, f"{instances} instances, {len(violations)} size violations, {skipped} builds over cap, build time {build:.0f}s", violations)
    assert ok


def test_criterion_08_bound_orderings(record, suite_stats):
    stats, _ = suite_stats
    violations = []
    for (name, _), entry in stats.items():
        violations += split(ordering_violations(entry, name))[1]
    ok = not violations
    record(8, ok, f"{len({n for n, _ in stats})} instances, {len(violations)} root-bound violations (tol {ORDER_TOL})", violations)
    assert ok


def test_criterion_09_single_monomial(record):
    details, ok = [], True
    for size in (4, 5, 6):
        for n in (size, size + 1):
            p = program([(1, list(range(1, size + 1)))], n)
            s1c, s1v = sizes(p, "s1")
            bc, bv = sizes(p, "baseline")
            good = s1v == n + 2 * (size - 1) and s1c == 0 + 5 * (size - 1) and s1v <= bv and s1c <= bc
            ok &= good
            details.append(f"|J|={size} n={n}: s1 ({s1c},{s1v}) base ({bc},{bv})")
    record(9, ok, "; ".join(details))
    assert ok


def test_criterion_10_global_oracle(record):
    t0 = time.perf_counter()
    cases = [("ex5", ex5())] + [(f"m{i}", p) for i, p in enumerate(multilinear_instances(20, seed=0))]
    misses = []
    for name, p in cases:
        assert p.n <= 5 and p.degree <= 4 and not p.constraints
        best, _ = vertex_oracle(p)
        for scheme in SCHEMES:
            rep = solve(p, SolveOptions(scheme=scheme, degree=2))
            if rep.upper_bound is None or abs(rep.upper_bound - best) > ORACLE_REL * max(abs(best), 1e-9) + 1e-9:
                misses.append(f"{name}/{scheme}: {rep.upper_bound} vs {best}")
    elapsed = time.perf_counter() - t0
    ex5_best = vertex_oracle(ex5())[0]
    ok = not misses and elapsed < 600 and abs(ex5_best + 38) < 1e-9
    record(10, ok, f"{len(cases)} instances x {len(SCHEMES)} schemes, {len(misses)} mismatches, {elapsed:.0f}s")
    assert ok, misses


def test_criterion_11_semantics(record):
    rng = np.random.default_rng(11)
    cases = [ex1(), ex2(), ex3(), ex4(), ex5()] + [p for _, p in suite_instances(10, seed=11)]
    value_err = row_err = 0.0
    checked = 0
    for p in cases:
        for scheme in SCHEMES:
            for d in (2, 3):
                red = reduce_program(p, scheme, d, cap=SUITE_CAP)
                rel = build_relaxation(red)
                bf = np.array([isinstance(t, BoundFactor) for t in rel.tags])
                eq = np.array([s == EQ for s in rel.senses])
                for _ in range(100):
                    x = [rng.uniform(l, u) for l, u in zip(p.lower, p.upper)]
                    keys = red.lift(x)
                    want = p.objective_value(x)
                    got = evaluate(red.program.objective, keys)
                    value_err = max(value_err, abs(got - want) / max(1.0, abs(want)))
                    for c_red, c_src in zip(red.source_constraints(), p.constraints):
                        a, b = evaluate(c_red.poly, keys), evaluate(c_src.poly, x)
                        value_err = max(value_err, abs(a - b) / max(1.0, abs(b)))
                    y = column_values(rel, keys)
                    res = row_residuals(rel, y)
                    scale = np.maximum(1.0, np.abs(rel.rhs))
                    if bf.any():
                        row_err = max(row_err, float(np.max(-res[bf] / scale[bf])))
                    if eq.any():
                        row_err = max(row_err, float(np.max(np.abs(res[eq]) / scale[eq])))
                    checked += 1
    ok = value_err <= SEMANTIC_REL and row_err <= SEMANTIC_REL
    record(11, ok, f"{checked} lifted points, max relative value error {value_err:.1e}, worst bound-factor/defining row {row_err:.1e}")
    assert ok


def test_criterion_12_compare_pipeline(record):
    instances = []
    for i in range(5):
        seed = 1200 + i
        base = random_base(8, 0.5, seed=seed)
        instances.append((f"g{seed}", generate_instance(GeneratorConfig(base, 10, 1, seed=seed))))
    configs = [("baseline", 0), ("s1", 2), ("s2", 2), ("s3", 2), ("quadrlt", 2)]
    res = compare(instances, configs, budget=60.0)
    text = res.to_text()
    print(text)
    freq = res.frequencies
    ok = len(res.rows) == len(configs) and not res.ordering_violations and all(v is not None for v in freq.values())
    shown = ", ".join(f"{k} {v:.0%}" for k, v in freq.items())
    record(12, ok, f"table built for {len(instances)} instances; {len(res.ordering_violations)} ordering violations; {shown}")
    assert ok
