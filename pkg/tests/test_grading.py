from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilsubst.grading import (GradingProblem, Inequality, fourier_motzkin, grading_kernel, solve_grading,
                              verify_grading)
from nilsubst.group import LieAlgebra, algebra_257g, gmu_algebra, heisenberg_algebra
from nilsubst.linalg import in_span
from nilsubst.specio import load_bundled


def test_257g_constraints_and_kernel():
    alg = algebra_257g()
    assert sorted(alg.relations()) == [(0, 1, 2), (0, 2, 5), (0, 4, 6), (1, 3, 6), (3, 4, 5)]
    assert verify_grading(alg, (2, 1, 3, 3, 2, 5, 4))
    kernel = grading_kernel(alg)
    assert len(kernel) == 2
    assert in_span([2, -3, -1, 3, -2, 1, 0], kernel)
    assert in_span([-2, 4, 2, -3, 3, 0, 1], kernel)


def test_heisenberg_and_gmu_gradings():
    assert verify_grading(heisenberg_algebra(), (1, 1, 2))
    assert not verify_grading(heisenberg_algebra(), (1, 1, 3))
    assert len(grading_kernel(heisenberg_algebra())) == 2
    g = gmu_algebra(Fraction(1, 2))
    assert verify_grading(g, (1, 1, 1, 2, 2, 2, 3))
    assert in_span([1, 1, 1, 2, 2, 2, 3], grading_kernel(g))


def test_canonical_solutions():
    assert solve_grading(heisenberg_algebra()).degrees == (1, 1, 2)
    assert solve_grading(gmu_algebra(1)).degrees == (1, 1, 1, 2, 2, 2, 3)
    assert solve_grading(load_bundled("lie-147e").algebra()).degrees == (1, 1, 1, 2, 2, 2, 3)
    sol = solve_grading(algebra_257g())
    assert sol.feasible and verify_grading(algebra_257g(), sol.degrees)


def test_abelian_is_all_ones():
    assert solve_grading(LieAlgebra(4, {})).degrees == (1, 1, 1, 1)


def test_forced_zero_degree_is_infeasible():
    sol = solve_grading(GradingProblem(2, ((0, 1, 0),)))
    assert sol.kind == "infeasible" and sol.degrees is None


def test_verify_grading_rejects_wrong_length_and_nonpositive():
    with pytest.raises(ValueError):
        verify_grading(heisenberg_algebra(), (1, 1))
    assert not verify_grading(LieAlgebra(2, {}), (0, 1))


def test_fourier_motzkin_sample_point_satisfies_system():
    system = [Inequality((Fraction(1), Fraction(-1))), Inequality((Fraction(0), Fraction(1))),
              Inequality((Fraction(-1), Fraction(0)), Fraction(3))]
    fm = fourier_motzkin(system, 2)
    assert fm.feasible
    assert fm.contains(fm.sample_point())
    empty = fourier_motzkin([Inequality((Fraction(1),)), Inequality((Fraction(-1),))], 1)
    assert not empty.feasible and empty.sample_point() is None


def _brute_force(problem: GradingProblem, upper: int):
    return [a for a in product(range(1, upper + 1), repeat=problem.dim)
            if all(a[i] + a[j] == a[k] for i, j, k in problem.equations)]


@st.composite
def problems(draw):
    d = draw(st.integers(2, 5))
    triples = st.tuples(st.integers(0, d - 1), st.integers(0, d - 1), st.integers(0, d - 1))
    eqs = draw(st.lists(triples.filter(lambda t: t[0] < t[1]), max_size=3, unique=True))
    return GradingProblem(d, tuple(eqs))


@settings(max_examples=60, deadline=None)
@given(problems())
def test_solver_agrees_with_grid_search(problem):
    found = _brute_force(problem, 10)
    sol = solve_grading(problem)
    if sol.feasible:
        assert all(a > 0 for a in sol.degrees)
        assert all(sol.degrees[i] + sol.degrees[j] == sol.degrees[k] for i, j, k in problem.equations)
        if found:
            best = min(found, key=lambda a: (max(a), a))
            assert sol.degrees == best
    else:
        assert found == []
