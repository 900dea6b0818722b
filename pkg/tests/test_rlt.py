import numpy as np
import pytest

from polyrlt import Multiset, Polynomial, aux_bounds, bound_factor_block, build_relaxation, compute_jsets, linearize, write_mps
from polyrlt.algebra import atom, aux, evaluate
from polyrlt.exceptions import NegativeLowerBound, UnboundedKey
from polyrlt.lp import solve_lp
from polyrlt.rlt import BoundFactor, Linearized, read_mps

from conftest import ex1, ex2, ex3, ex5, program
from helpers import atom_values, column_values, row_residuals

M = Multiset.of


class TestJsets:
    def test_maximal_only(self):
        got = compute_jsets([M(0, 1, 2), M(0, 1), M(0, 2), M(1, 2)])
        assert got == [M(0, 1, 2)]

    def test_antichain(self):
        got = compute_jsets([M(0, 1, 2), M(0, 1, 3), M(0, 1), M(2, 3)])
        assert set(got) == {M(0, 1, 2), M(0, 1, 3), M(2, 3)}

    def test_multiplicity_matters(self):
        got = compute_jsets([M(0, 0, 1), M(0, 1, 1), M(0, 1)])
        assert set(got) == {M(0, 0, 1), M(0, 1, 1)}

    def test_duplicates_collapse(self):
        assert compute_jsets([M(0, 1), M(1, 0)]) == [M(0, 1)]


class TestBoundFactorBlock:
    def test_three_distinct_gives_eight_rows(self):
        rows = bound_factor_block(M(0, 1, 2), [(0, 1)] * 3)
        assert len(rows) == 8
        # lower bounds are 0, so the all-lower row is x1x2x3 >= 0
        row = next(r for r in rows if r.tag.lower == (1, 1, 1))
        assert row.coeffs == {M(0, 1, 2): 1.0} and row.rhs == 0.0

    def test_mccormick(self):
        rows = bound_factor_block(M(0, 1), [(0, 1), (0, 1)])
        assert len(rows) == 4
        both_upper = next(r for r in rows if r.tag.lower == (0, 0))
        # (1-x1)(1-x2) = 1 - x1 - x2 + x12 >= 0
        assert both_upper.coeffs == {M(0): -1.0, M(1): -1.0, M(0, 1): 1.0}
        assert both_upper.rhs == -1.0

    def test_repeated_key_has_m_plus_one_rows(self):
        assert len(bound_factor_block(M(0, 0), [(0, 2)])) == 3

    def test_square_of_interval(self):
        rows = bound_factor_block(M(0, 0), [(1, 3)])
        mid = next(r for r in rows if r.tag.lower == (1,))
        # (x-1)(3-x) = -x^2 + 4x - 3 >= 0
        assert mid.coeffs == pytest.approx({M(0, 0): -1.0, M(0): 4.0})
        assert mid.rhs == pytest.approx(3.0)

    def test_nonnegative_at_lifted_points(self):
        rng = np.random.default_rng(0)
        J = M(0, 0, 1, 2)
        box = [(0.5, 2.0), (1.0, 3.0), (0.0, 1.0)]
        rows = bound_factor_block(J, box)
        for _ in range(50):
            x = [rng.uniform(l, u) for l, u in box]
            for r in rows:
                val = sum(c * evaluate(Polynomial({ms: 1.0}), x) for ms, c in r.coeffs.items())
                assert val - r.rhs >= -1e-9

    def test_negative_lower_bound(self):
        with pytest.raises(NegativeLowerBound):
            bound_factor_block(M(0, 1), [(-1, 1), (0, 1)])

    def test_aux_without_bounds(self):
        with pytest.raises(UnboundedKey):
            bound_factor_block(Multiset.of(aux(0), atom(1)), lambda k: (0.0, float("inf")))


class TestAuxBounds:
    def test_unit_cube(self):
        assert aux_bounds(M(0, 1), [(0, 1), (0, 1)]) == (0, 1)

    def test_scaled(self):
        assert aux_bounds(M(0, 1, 2), [(1, 2), (9, 10), (1, 2)]) == (9, 40)

    def test_power(self):
        assert aux_bounds(M(0, 0), [(2, 3)]) == (4, 9)

    def test_aux_key_needs_callable(self):
        with pytest.raises(UnboundedKey):
            aux_bounds(Multiset.of(aux(0)), [(0, 1)])


def test_linearize_oracle():
    poly = Polynomial({M(0, 1): 2.0, M(0): -1.0, Multiset.of(): 5.0})
    coeffs, const = linearize(poly)
    assert coeffs == {M(0, 1): 2.0, M(0): -1.0} and const == 5.0


def test_linearize_registry():
    reg = {}
    linearize(Polynomial({M(0, 1): 1.0, M(2): 1.0}), reg)
    assert set(reg) == {M(0, 1), M(2)} and sorted(reg.values()) == [0, 1]


class TestRelaxation:
    def test_ex1_baseline_counts(self):
        rel = build_relaxation(ex1())
        assert (rel.n_cons, rel.n_vars) == (8, 7)
        assert rel.count_tags(BoundFactor) == 8

    def test_ex2_baseline_constraints(self):
        assert build_relaxation(ex2()).n_cons == 16

    def test_ex3_baseline_vars(self):
        assert build_relaxation(ex3()).n_vars == 7

    def test_linearized_constraints_are_rows(self):
        from polyrlt.problem import Constraint, GE

        p = program([(1, [1, 2])], 2, constraints=[Constraint(Polynomial({M(0, 1): 1.0}), GE, 0.25)])
        rel = build_relaxation(p)
        assert rel.count_tags(Linearized) == 1 and rel.n_cons == 5

    def test_bounds_of_columns(self):
        rel = build_relaxation(ex5())
        b = rel.var_bounds()
        assert b[M(0, 1, 2, 3)] == (81, 400)

    def test_box_override(self):
        rel = build_relaxation(ex1(), box=([0.5] * 3, [1.0] * 3))
        assert rel.var_bounds()[M(0, 1, 2)] == (0.125, 1.0)

    def test_lifted_points_satisfy_rows(self):
        rng = np.random.default_rng(5)
        p = ex5()
        rel = build_relaxation(p)
        for _ in range(50):
            x = [rng.uniform(l, u) for l, u in zip(p.lower, p.upper)]
            y = column_values(rel, atom_values(x))
            assert row_residuals(rel, y).min() >= -1e-9
            assert rel.objective_value(y) == pytest.approx(p.objective_value(x))

    def test_rebuild(self):
        rel = build_relaxation(ex1())
        small = rel.rebuild([0.5] * 3, [1] * 3)
        assert small.n_cons == rel.n_cons and small.box[0] == [0.5] * 3

    def test_negative_box(self):
        with pytest.raises(NegativeLowerBound):
            build_relaxation(ex1(), box=([-1, 0, 0], [1, 1, 1]))


def test_mps_roundtrip():
    from polyrlt import reduce_program

    rel = build_relaxation(reduce_program(ex5(), "quadrlt"))
    model = read_mps(write_mps(rel))
    assert model.A.shape == (rel.n_cons, rel.n_vars)
    assert np.allclose(model.A, rel.matrix().toarray())
    assert np.allclose(model.b, rel.rhs) and np.allclose(model.c, rel.cost())
    assert np.allclose(model.lower, rel.lower) and np.allclose(model.upper, rel.upper)
    assert model.senses == rel.senses
    # the LP read back has the same optimum
    from scipy.optimize import linprog

    eq = np.array([s == "=" for s in model.senses])
    res = linprog(
        model.c,
        A_ub=-model.A[~eq],
        b_ub=-model.b[~eq],
        A_eq=model.A[eq],
        b_eq=model.b[eq],
        bounds=list(zip(model.lower, model.upper)),
        method="highs",
    )
    assert res.fun + model.c0 == pytest.approx(solve_lp(rel).objective, abs=1e-6)
