import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilsubst.fast import evaluate_points, substitute_fast, support_vn_array
from nilsubst.lattice import ball_lattice_points, enumerate_dilated_box
from nilsubst.substitution import (BudgetError, Patch, SubstitutionDatum, SubstitutionError, build_good,
                                   fixpoint, fixpoint_eval, incidence_matrix, is_legal, is_nonperiodic,
                                   is_primitive, iterate, single, substitute, substitute_pointwise, support_vn)

def rule_from_rows(datum, rows):
    base = enumerate_dilated_box(datum, 1)
    return SubstitutionDatum(datum, sorted(rows), {a: dict(zip(base, f(base))) for a, f in rows.items()})


def random_patch(datum, alphabet, rng, size=3, spread=4):
    pts = sorted(ball_lattice_points(datum.identity, spread, datum))
    return Patch({p: rng.choice(alphabet) for p in rng.sample(pts, size)})


# axioms ----------------------------------------------------------------------------------

def test_single_letter_image_is_the_rule(heis_subst):
    for a in heis_subst.alphabet:
        image = substitute(single(a, heis_subst.datum), heis_subst)
        assert image == heis_subst.rule(a)
        assert len(image) == 81
        assert substitute_pointwise(single(a, heis_subst.datum), heis_subst) == image


def test_equivariance_example(heis_subst):
    datum = heis_subst.datum
    gamma = (2, 0, 0)
    for a in heis_subst.alphabet:
        P = single(a, datum)
        left = substitute(P.translate(gamma, datum), heis_subst)
        right = substitute(P, heis_subst).translate(datum.dilate(gamma), datum)
        assert left == right


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_axioms_and_route_agreement(heis_subst, eucl_subst, seed):
    rng = random.Random(seed)
    for S in (heis_subst, eucl_subst):
        datum = S.datum
        P = random_patch(datum, S.alphabet, rng, size=rng.randint(1, 4))
        image = substitute(P, S)
        assert substitute_pointwise(P, S) == image
        gamma = tuple(rng.randint(-5, 5) * s for s in datum.scales)
        assert substitute(P.translate(gamma, datum), S) == image.translate(datum.dilate(gamma), datum)
        support = P.support()
        cut = rng.randint(1, len(support))
        for part in (support[:cut], support[cut:]):
            if part:
                sub = substitute(P.restrict(part), S)
                assert image.restrict(sub.support()) == sub


def test_support_scaling(heis_subst):
    for n, size in [(0, 1), (1, 81), (2, 6561)]:
        assert len(iterate("a", n, heis_subst)) == size


def test_euclidean_support_is_a_cube(eucl_subst):
    for n in (1, 2):
        low, top = [x for x in range(-3 ** n, 3 ** n) if x % 2 == 0], [z for z in range(-9 ** n, 9 ** n) if z % 2 == 0]
        cube = {(x, y, z) for x in low for y in low for z in top}
        assert set(iterate("a", n, eucl_subst).support()) == cube


def test_budget_is_enforced(heis_subst):
    with pytest.raises(BudgetError):
        iterate("a", 3, heis_subst, budget=10000)
    with pytest.raises(ValueError):
        iterate("a", -1, heis_subst)


def test_support_formula_matches_iteration(heis_subst):
    datum = heis_subst.datum
    rng = random.Random(4)
    pts = sorted(ball_lattice_points(datum.identity, 5, datum))
    assert support_vn([datum.identity], 1, datum) == set(enumerate_dilated_box(datum, 1))
    for _ in range(12):
        M = rng.sample(pts, rng.randint(1, 3))
        P = Patch({m: "a" for m in M})
        for n in (1, 2):
            assert support_vn(M, n, datum) == set(iterate("a", n, heis_subst, start=P).support())


def test_support_formula_array_route(heis_datum):
    M = [(0, 0, 0), (2, -2, 4)]
    for n in (1, 2):
        arr = support_vn_array(M, n, heis_datum)
        assert {tuple(int(x) for x in row) for row in arr} == support_vn(M, n, heis_datum)


def test_fast_stamping_matches(heis_subst):
    P = random_patch(heis_subst.datum, heis_subst.alphabet, random.Random(2), size=5)
    pts, vals = substitute_fast(P, heis_subst)
    slow = substitute(P, heis_subst)
    assert [tuple(int(x) for x in p) for p in pts] == slow.support()
    assert [heis_subst.alphabet[v] for v in vals] == [slow[x] for x in slow.support()]


def test_parallel_substitution_matches_serial(heis_subst):
    P = iterate("a", 1, heis_subst)
    assert substitute(P, heis_subst, jobs=2) == substitute(P, heis_subst)


# checkers ----------------------------------------------------------------------------------

def test_bundled_rule_checks(heis_subst):
    assert is_primitive(heis_subst) == 1
    report = is_nonperiodic(heis_subst)
    assert report.ok and report.failures == [] and report.injective


def test_constant_rule_is_neither(heis_datum):
    S = rule_from_rows(heis_datum, {"a": lambda b: ["a"] * len(b), "b": lambda b: ["a"] * len(b)})
    assert is_primitive(S) is None
    report = is_nonperiodic(S)
    assert not report.injective and not report.ok


def test_swap_style_rule_needs_two_steps(heis_datum):
    # a -> all b; b -> b everywhere except a at the identity
    S = rule_from_rows(heis_datum, {"a": lambda b: ["b"] * len(b),
                                    "b": lambda b: ["a" if not any(p) else "b" for p in b]})
    assert incidence_matrix(S) == [[0, 1], [81, 80]]
    assert is_primitive(S) == 2
    # brute force: a is missing from S(P_a) but every letter occurs in S^2(P_c)
    assert set(iterate("a", 1, S).counts()) == {"b"}
    for c in "ab":
        assert set(iterate(c, 2, S).counts()) == {"a", "b"}


def test_pure_swap_rule_is_not_primitive(heis_datum):
    S = rule_from_rows(heis_datum, {"a": lambda b: ["b"] * len(b), "b": lambda b: ["a"] * len(b)})
    assert incidence_matrix(S) == [[0, 81], [81, 0]]
    assert is_primitive(S) is None
    assert set(iterate("a", 2, S).counts()) == {"a"}
    assert not is_nonperiodic(S).ok


def test_legality(heis_subst):
    datum = heis_subst.datum
    assert is_legal(single("b", datum), heis_subst, 1)[0] == 1
    big = iterate("a", 2, heis_subst)
    part = big.restrict(big.support()[100:104])
    cert = is_legal(part, heis_subst, 2)
    assert cert is not None
    n, a, gamma = cert
    witness = iterate(a, n, heis_subst)
    assert set(part.translate(gamma, datum).items()) <= set(witness.items())
    all_b = Patch({p: "b" for p in heis_subst.base})
    assert is_legal(all_b, heis_subst, 3) is None


# good substitutions ----------------------------------------------------------------------

def test_bundled_rule_follows_the_construction(heis_subst):
    rule_a, rule_b = heis_subst.rule("a"), heis_subst.rule("b")
    for rule in (rule_a, rule_b):
        assert all(rule[(0, 0, z)] == "a" for z in range(-8, 9, 2))
        assert all(rule[(0, 2, z)] == "a" for z in range(-8, 9, 2) if z != 0)
        assert all(rule[(x, y, 0)] == "b" for x in (-2, 0, 2) for y in (-2, 0, 2) if (x, y) != (0, 0))
        assert rule[(0, -2, 8)] == "b"
    assert rule_a[(0, -2, 4)] == "a" and rule_b[(0, -2, 4)] == "b"


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("fill", ["constant", "random"])
def test_build_good_outputs_pass_both_checkers(heis_datum, seed, fill):
    S = build_good(heis_datum, "abc", fill=fill, seed=seed)
    assert is_primitive(S) is not None
    assert is_nonperiodic(S).ok


def test_two_letter_rule_forces_b_on_the_off_cells(heis_datum):
    S = build_good(heis_datum, "ab", fill="random", seed=7)
    for c in "ab":
        assert all(S.letter_at(c, p) == "b" for p in S.construction["xi_o"])


def test_build_good_is_seeded(heis_datum):
    assert build_good(heis_datum, "ab", fill="random", seed=3) == build_good(heis_datum, "ab", fill="random", seed=3)


def test_build_good_errors(heis_datum):
    with pytest.raises(SubstitutionError, match="at least 2"):
        build_good(heis_datum, "a")
    with pytest.raises(SubstitutionError, match=r"\|F_V\| = 9"):
        build_good(heis_datum, "abcdefghi")
    bad = {"gamma1": (0, 2), "gamma2": (0, -2), "x1": (2,), "x2": (4,), "x_c": {"b": (8,)}}
    with pytest.raises(SubstitutionError, match="x1"):
        build_good(heis_datum, "ab", choices=bad)
    with pytest.raises(SubstitutionError, match="fill"):
        build_good(heis_datum, "ab", fill="sometimes")


def test_table_validation(heis_datum):
    base = enumerate_dilated_box(heis_datum, 1)
    with pytest.raises(SubstitutionError):
        SubstitutionDatum(heis_datum, "ab", {"a": {p: "a" for p in base}})
    with pytest.raises(SubstitutionError):
        SubstitutionDatum(heis_datum, "a", {"a": {p: "a" for p in base[:-1]}})
    with pytest.raises(SubstitutionError):
        SubstitutionDatum(heis_datum, "a", {"a": {p: "z" for p in base}})


def test_injectivity_propagates(heis_subst):
    datum = heis_subst.datum
    rng = random.Random(11)
    for _ in range(10):
        P = random_patch(datum, "ab", rng, size=3)
        eta = rng.choice(P.support())
        Q = Patch({x: (("b" if c == "a" else "a") if x == eta else c) for x, c in P.items()})
        n = rng.randint(1, 2)
        region = support_vn([eta], n, datum)
        left = iterate("a", n, heis_subst, start=P).restrict(region)
        right = iterate("a", n, heis_subst, start=Q).restrict(region)
        assert left != right
    for n in (1, 2, 3):
        assert iterate("a", n, heis_subst) != iterate("b", n, heis_subst)


# fixpoints ---------------------------------------------------------------------------------

def test_fixpoint_cycle_and_identity(heis_fixpoint, heis_subst):
    assert heis_fixpoint.cycle == ("a",) and heis_fixpoint.period == 1
    assert fixpoint_eval(heis_fixpoint, (0, 0, 0)) == heis_subst.letter_at("a", (0, 0, 0))


def test_fixpoint_window_identity(heis_fixpoint, heis_subst):
    assert heis_fixpoint.window(1) == iterate("a", 1, heis_subst)
    assert heis_fixpoint.window(2) == iterate("a", 2, heis_subst)
    assert substitute(heis_fixpoint.window(1), heis_subst) == heis_fixpoint.window(2)


def test_fixpoint_of_a_two_cycle(heis_datum):
    base = enumerate_dilated_box(heis_datum, 1)
    rows = {"a": lambda b: ["b" if not any(p) else ("a" if p[2] else "b") for p in b],
            "b": lambda b: ["a" if not any(p) else ("a" if p[0] else "b") for p in b]}
    S = rule_from_rows(heis_datum, rows)
    fp = fixpoint(S, "a")
    assert fp.period == 2 and fp.cycle == ("a", "b")
    assert fp.window(1) == iterate("a", 2, S)
    pts = support_vn([heis_datum.identity], 2, heis_datum, base)
    assert {g: fp(g) for g in pts} == iterate("a", 2, S).as_dict()


def test_fixpoint_sub_patches_are_legal(heis_fixpoint, heis_subst):
    window = heis_fixpoint.window(2)
    rng = random.Random(5)
    pts = window.support()
    for _ in range(5):
        centre = rng.choice(pts)
        region = [heis_subst.datum.group.multiply(centre, g)
                  for g in ball_lattice_points((0, 0, 0), 3, heis_subst.datum)]
        sub = Patch({g: heis_fixpoint(g) for g in region})
        assert is_legal(sub, heis_subst, 3) is not None


def test_fast_evaluation_matches_recursion(heis_fixpoint):
    rng = random.Random(1)
    pts = [tuple(2 * rng.randint(-60, 60) for _ in range(2)) + (2 * rng.randint(-3000, 3000),) for _ in range(300)]
    fast = evaluate_points(heis_fixpoint, np.array(pts))
    assert [heis_fixpoint.S.alphabet[i] for i in fast] == [heis_fixpoint(p) for p in pts]
