import numpy as np
import pytest

from polyrlt import build_relaxation, reduce_program, solve_lp
from polyrlt.exceptions import InvalidConfig
from polyrlt.lp import INFEASIBLE, OPTIMAL, LPData, check_solution
from polyrlt.rlt import LinearRelaxation

from conftest import ex1, ex2, ex3, ex4, ex5, suite_instances


def root(p, scheme, backend=None, d=2):
    return solve_lp(build_relaxation(reduce_program(p, scheme, d)), backend=backend)


class TestExampleValues:
    def test_ex5_quadrlt(self):
        assert root(ex5(), "quadrlt").objective == pytest.approx(-43.81, abs=0.01)

    def test_ex5_scheme1(self):
        assert root(ex5(), "s1").objective == pytest.approx(-38, abs=0.01)

    def test_ex4(self):
        assert root(ex4(), "quadrlt").objective == pytest.approx(0, abs=1e-6)
        assert root(ex4(), "s1").objective == pytest.approx(-0.5, abs=1e-6)

    def test_ex1(self):
        assert root(ex1(), "baseline").objective == pytest.approx(0, abs=1e-9)


@pytest.mark.parametrize("scheme", ["baseline", "s1", "s2", "quadrlt"])
@pytest.mark.parametrize("make", [ex1, ex2, ex3, ex4, ex5])
def test_backends_agree(scheme, make):
    rel = build_relaxation(reduce_program(make(), scheme))
    a = solve_lp(rel, backend="highs")
    b = solve_lp(rel, backend="simplex")
    assert a.status == b.status == OPTIMAL
    assert a.objective == pytest.approx(b.objective, abs=1e-6)
    assert check_solution(rel, b) <= 1e-6


def test_backends_agree_on_generated():
    for _, p in suite_instances(6, seed=9):
        rel = build_relaxation(reduce_program(p, "quadrlt"))
        a, b = solve_lp(rel, backend="highs"), solve_lp(rel, backend="simplex")
        assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-6)


def test_env_backend(monkeypatch):
    monkeypatch.setenv("POLYRLT_LP_BACKEND", "simplex")
    sol = root(ex5(), "s1")
    assert sol.objective == pytest.approx(-38, abs=1e-6)


def test_unknown_backend():
    with pytest.raises(InvalidConfig):
        root(ex1(), "s1", backend="cplex")


def test_bound_grows_when_box_shrinks():
    rel = build_relaxation(reduce_program(ex5(), "quadrlt"))
    full = solve_lp(rel).objective
    lo, hi = [1, 9, 1, 9], [2, 10, 2, 10]
    rng = np.random.default_rng(2)
    for _ in range(10):
        j = int(rng.integers(4))
        cut = rng.uniform(lo[j], hi[j])
        for box in ((lo, hi[:j] + [cut] + hi[j + 1 :]), (lo[:j] + [cut] + lo[j + 1 :], hi)):
            assert solve_lp(rel, overrides=box).objective >= full - 1e-7


def test_solution_values_and_duality():
    from scipy.optimize import linprog

    rel = build_relaxation(reduce_program(ex5(), "s1"))
    sol = solve_lp(rel)
    assert set(sol.values) == set(rel.columns)
    # the dual of a feasible LP bounds the primal from below
    lp = LPData.from_relaxation(rel)
    A = lp.A.toarray()
    eq = np.array([s == "=" for s in lp.senses])
    res = linprog(
        lp.c, A_ub=-A[~eq], b_ub=-lp.b[~eq], A_eq=A[eq], b_eq=lp.b[eq], bounds=list(zip(lp.lower, lp.upper)), method="highs"
    )
    duals = np.concatenate([-res.ineqlin.marginals, res.eqlin.marginals])
    assert (duals[: (~eq).sum()] >= -1e-9).all()
    assert sol.objective == pytest.approx(res.fun + lp.c0, abs=1e-7)


def _tiny(lower, upper, rows, senses, rhs, cost):
    from polyrlt import Multiset

    rel = LinearRelaxation(len(lower))
    cols = [Multiset.of(j) for j in range(len(lower))]
    bounds = lambda k: (lower[k.id], upper[k.id])
    for c in cols:
        rel.column(c, bounds)
    for coeffs, s, b in zip(rows, senses, rhs):
        rel.add_row({cols[j]: v for j, v in coeffs.items()}, s, b, None, bounds)
    rel.objective = dict(enumerate(cost))
    return rel


@pytest.mark.parametrize("backend", ["highs", "simplex"])
def test_infeasible(backend):
    rel = _tiny([0, 0], [1, 1], [{0: 1, 1: 1}], [">="], [3.0], [1, 1])
    assert solve_lp(rel, backend=backend).status == INFEASIBLE


@pytest.mark.parametrize("backend", ["highs", "simplex"])
def test_small_lp(backend):
    # min -x - y s.t. x + 2y = 2 on [0,1]^2 -> x=1, y=0.5
    rel = _tiny([0, 0], [1, 1], [{0: 1, 1: 2}], ["="], [2.0], [-1, -1])
    sol = solve_lp(rel, backend=backend)
    assert sol.status == OPTIMAL
    assert sol.objective == pytest.approx(-1.5)
    assert sol.x == pytest.approx([1.0, 0.5])
