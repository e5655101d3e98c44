from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilsubst.group import (GradedGroup, LieAlgebra, NotNilpotentError, abelian_group, algebra_257g, bch,
                            bch_group, dynkin_words, gmu_algebra, gmu_bch_group, gmu_group,
                            heisenberg_algebra, heisenberg_group, validate_group)
from nilsubst.poly import Poly

rationals = st.fractions(min_value=-20, max_value=20, max_denominator=12)


def elements(d):
    return st.tuples(*[rationals] * d)


# matrix oracle: strictly upper triangular n x n matrices -------------------------------------

def _mat_mul(a, b):
    n = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(n)) for j in range(n)] for i in range(n)]


def _mat_add(a, b, c=1):
    return [[x + c * y for x, y in zip(ra, rb)] for ra, rb in zip(a, b)]


def _mat_exp(a):
    n = len(a)
    out = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    term = out
    for k in range(1, n):
        term = [[x / k for x in row] for row in _mat_mul(term, a)]
        out = _mat_add(out, term)
    return out


def _mat_log(a):
    n = len(a)
    eye = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    x = _mat_add(a, eye, -1)
    out = [[Fraction(0)] * n for _ in range(n)]
    power = eye
    for k in range(1, n):
        power = _mat_mul(power, x)
        out = _mat_add(out, power, Fraction((-1) ** (k + 1), k))
    return out


def _upper_pairs(n):
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def _upper_algebra(n):
    pairs = _upper_pairs(n)
    index = {p: k for k, p in enumerate(pairs)}
    brackets = {}
    for a, (i, j) in enumerate(pairs):
        for b, (k, l) in enumerate(pairs):
            if a < b:
                row = {}
                if j == k:
                    row[index[(i, l)]] = row.get(index[(i, l)], 0) + 1
                if l == i:
                    row[index[(k, j)]] = row.get(index[(k, j)], 0) - 1
                if row:
                    brackets[(a, b)] = row
    return LieAlgebra(len(pairs), brackets, name=f"n{n}"), pairs


def _to_matrix(v, pairs, n):
    m = [[Fraction(0)] * n for _ in range(n)]
    for c, (i, j) in zip(v, pairs):
        m[i][j] = Fraction(c)
    return m


def test_dynkin_low_order_coefficients():
    coef = {w: c for c, w in dynkin_words(3)}
    assert coef["X"] == 1 and coef["Y"] == 1
    # [Y,X] = -[X,Y] and [X,[Y,X]] = -[X,[X,Y]], so collect onto one word per bracket
    assert coef["XY"] - coef["YX"] == Fraction(1, 2)
    assert coef["XXY"] - coef["XYX"] == Fraction(1, 12)
    assert coef["YXY"] - coef["YYX"] == Fraction(-1, 12)


@settings(max_examples=15, deadline=None)
@given(st.data())
def test_bch_matches_matrix_exponentials(data):
    algebra, pairs = _upper_algebra(5)
    assert algebra.step() == 4
    u = data.draw(elements(algebra.dim))
    v = data.draw(elements(algebra.dim))
    z = bch(u, v, algebra)
    expected = _mat_log(_mat_mul(_mat_exp(_to_matrix(u, pairs, 5)), _mat_exp(_to_matrix(v, pairs, 5))))
    assert _to_matrix(z, pairs, 5) == expected


@settings(max_examples=30, deadline=None)
@given(elements(7), elements(7))
def test_bch_closed_form_through_degree_three(u, v):
    alg = algebra_257g()
    assert alg.step() == 3
    br = alg.bracket
    xy = br(u, v)
    half, twelfth = Fraction(1, 2), Fraction(1, 12)
    expected = [a + b + half * c + twelfth * (d - e)
                for a, b, c, d, e in zip(u, v, xy, br(u, xy), br(v, xy))]
    assert bch(u, v, alg) == expected


def test_heisenberg_bch_law_equals_explicit_law():
    assert bch_group(heisenberg_algebra(), (1, 1, 2)).corrections == heisenberg_group().corrections


def test_lower_central_series_and_step():
    assert heisenberg_algebra().lower_central_series() == [3, 1]
    assert gmu_algebra(Fraction(1, 2)).step() == 3
    assert algebra_257g().step() == 3


def test_non_nilpotent_algebra_is_rejected():
    alg = LieAlgebra(2, {(0, 1): {0: 1}})
    with pytest.raises(NotNilpotentError):
        alg.step()


def test_jacobi_holds_for_bundled_algebras():
    for alg in (heisenberg_algebra(), gmu_algebra(Fraction(1, 3)), algebra_257g()):
        assert alg.jacobi_violations() == []
    bad = LieAlgebra(3, {(0, 1): {2: 1}, (1, 2): {0: 1}, (0, 2): {0: 1}})
    assert bad.jacobi_violations()


@pytest.mark.parametrize("make", [heisenberg_group, lambda: gmu_group(Fraction(1, 2)),
                                  lambda: gmu_group(Fraction(-3, 7)), lambda: gmu_bch_group(Fraction(2, 5)),
                                  lambda: bch_group(algebra_257g(), (2, 1, 3, 3, 2, 5, 4)),
                                  lambda: abelian_group(3, (1, 1, 2))])
def test_validate_group_accepts_valid_laws(make):
    report = validate_group(make(), samples=25, seed=3)
    assert report.ok, report.failures


@settings(max_examples=40, deadline=None)
@given(elements(7), elements(7), elements(7), rationals.filter(lambda x: x > 0))
def test_completed_gmu_law_properties(g, h, k, lam):
    G = gmu_group(Fraction(1, 3))
    assert G.multiply(G.multiply(g, h), k) == G.multiply(g, G.multiply(h, k))
    assert G.multiply(g, G.inverse(g)) == G.identity
    assert G.dilate(G.multiply(g, h), lam) == G.multiply(G.dilate(g, lam), G.dilate(h, lam))


def test_quadratic_gmu_law_is_not_associative():
    mu = Fraction(1, 2)
    G = gmu_group(mu, completed=False)
    x1, x2, x3 = (tuple(1 if i == j else 0 for i in range(7)) for j in range(3))
    left = G.multiply(G.multiply(x1, x3), x2)
    right = G.multiply(x1, G.multiply(x3, x2))
    assert left[6] - right[6] == mu / 4
    assert left[:6] == right[:6]
    report = validate_group(G, samples=10)
    assert not report.ok
    assert any(check == "associativity" for check, _ in report.failures)


def test_broken_law_reports_associativity_witness():
    x1, x2, x3, y1, y2, y3 = (Poly.var(s) for s in ("x1", "x2", "x3", "y1", "y2", "y3"))
    half = Fraction(1, 2)
    G = GradedGroup((1, 1, 2, 3), [Poly(), Poly(), half * (x1 * y2 - x2 * y1), x1 * y3])
    report = validate_group(G, samples=20, seed=1)
    assert not report.ok
    check, (g, h, k) = next(f for f in report.failures if f[0] == "associativity")
    assert G.multiply(G.multiply(g, h), k) != G.multiply(g, G.multiply(h, k))


def test_triangularity_violation_is_reported():
    x3, y1 = Poly.var("x3"), Poly.var("y1")
    G = GradedGroup((1, 1, 2), [Poly(), x3 * y1, Poly()])
    report = validate_group(G, samples=2)
    assert ("triangularity", (2, "x3")) in report.failures


def test_dilate_rejects_nonpositive():
    with pytest.raises(ValueError):
        heisenberg_group().dilate((1, 1, 1), 0)


def test_heisenberg_inverse_and_power():
    G = heisenberg_group()
    g = (1, 2, Fraction(1, 3))
    assert G.inverse(g) == (-1, -2, Fraction(-1, 3))
    assert G.power(g, 3) == (3, 6, 1)
    assert G.power(g, -2) == G.inverse(G.power(g, 2))


@settings(max_examples=50, deadline=None)
@given(elements(3), elements(3))
def test_heisenberg_commutator_is_central(g, h):
    G = heisenberg_group()
    comm = G.multiply(G.multiply(g, h), G.inverse(G.multiply(h, g)))
    assert comm[:2] == (0, 0)
    assert comm[2] == g[0] * h[1] - g[1] * h[0]


def test_homogeneous_dimension():
    assert heisenberg_group().homogeneous_dimension == 4
    assert gmu_group(1).homogeneous_dimension == 12


def test_random_validation_is_seeded():
    G = gmu_group(Fraction(1, 2), completed=False)
    assert validate_group(G, samples=5, seed=9).failures == validate_group(G, samples=5, seed=9).failures
