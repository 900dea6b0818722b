import itertools

import numpy as np
import pytest

from polyrlt import GeneratorConfig, Multiset, Polynomial, PolynomialProgram, generate_instance, random_base


def program(terms, n, lower=None, upper=None, constraints=()):
    """Build a program from ``(coef, [1-based indices])`` terms."""
    obj = Polynomial([(Multiset.of(*[i - 1 for i in idx]), c) for c, idx in terms])
    return PolynomialProgram(None, lower or [0.0] * n, upper or [1.0] * n, obj, constraints)


def ex1():
    return program([(1, [1, 2, 3])], 3)


def ex2():
    return program([(1, [1, 2, 3]), (1, [1, 2, 4])], 4)


def ex3():
    return program([(1, [1, 2, 3]), (1, [1, 2]), (1, [1, 3]), (1, [2, 3])], 3)


def ex4():
    return program([(1, [1, 3]), (-1, [1, 2, 3])], 3)


def ex5():
    return program([(1, [1, 2, 3, 4]), (-10, [1, 2]), (-1, [1, 3, 4])], 4, [1, 9, 1, 9], [2, 10, 2, 10])


def vertex_oracle(p: PolynomialProgram):
    """Minimum of a box-only multilinear program over the box vertices."""
    best, arg = np.inf, None
    for corner in itertools.product(*zip(p.lower, p.upper)):
        v = p.objective_value(list(corner))
        if v < best:
            best, arg = v, list(corner)
    return best, arg


def suite_instances(count=50, seed=0):
    """Generated instances with n <= 6, delta <= 6, k in {1, 3}."""
    out = []
    rng = np.random.default_rng(seed)
    for i in range(count):
        n = int(rng.integers(2, 7))
        delta = int(rng.integers(3, 7))
        k = (1, 3)[i % 2]
        base = random_base(n, 0.5, seed=seed * 1000 + i)
        out.append((f"n{n}-delta{delta}-k{k}-s{i}", generate_instance(GeneratorConfig(base, delta, k, seed=seed * 1000 + i))))
    return out


def multilinear_instances(count=20, seed=0):
    out = []
    rng = np.random.default_rng(seed + 77)
    for i in range(count):
        n = int(rng.integers(3, 6))
        delta = int(rng.integers(3, min(4, n) + 1))
        base = random_base(n, 0.5, seed=seed * 1000 + i, multilinear=True)
        out.append(generate_instance(GeneratorConfig(base, delta, 1 + i % 2, seed=seed * 1000 + i, multilinear=True)))
    return out


@pytest.fixture
def examples():
    return {"ex1": ex1(), "ex2": ex2(), "ex3": ex3(), "ex4": ex4(), "ex5": ex5()}


ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    """Store and print the one-line verdict for an acceptance criterion."""

    def _record(number: int, ok: bool, detail: str, extra=()):
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        line = "\n".join([line] + [f"    {e}" for e in extra])
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
