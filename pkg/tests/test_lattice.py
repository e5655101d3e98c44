from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nilsubst.group import abelian_group, heisenberg_group
from nilsubst.lattice import (DatumError, DilationDatum, ball_lattice_points, count_ball_points,
                              count_dilated_box, enumerate_dilated_box, intersection_property, locate,
                              qnorm_lt, radii_of_box, splitting)
from nilsubst.specio import bundled_names, load_bundled


def heis(**kw):
    args = dict(scales=(2, 2, 2), box=[(-1, 1)] * 3, stretch=3, norm="koranyi")
    args.update(kw)
    return DilationDatum(heisenberg_group(), **args)


def test_heisenberg_dilated_box_is_the_81_point_set(heis_datum):
    expected = set(product((-2, 0, 2), (-2, 0, 2), range(-8, 9, 2)))
    pts = enumerate_dilated_box(heis_datum, 1)
    assert set(pts) == expected and len(pts) == 81
    assert pts == sorted(pts)
    assert enumerate_dilated_box(heis_datum, 0) == [(0, 0, 0)]


def test_locate_examples(heis_datum):
    assert locate((3, 1, 2), heis_datum) == ((4, 2, 4), (-1, -1, -1))
    v = (Fraction(1, 2), -1, Fraction(-1, 3))
    assert locate(v, heis_datum) == ((0, 0, 0), v)
    assert locate((4, -2, 6), heis_datum) == ((4, -2, 6), (0, 0, 0))


box_coord = st.fractions(min_value=-1, max_value=1, max_denominator=16).filter(lambda x: x < 1)
lattice_coord = st.integers(-20, 20).map(lambda k: 2 * k)


@settings(max_examples=100, deadline=None)
@given(st.tuples(lattice_coord, lattice_coord, lattice_coord), st.tuples(box_coord, box_coord, box_coord))
def test_locate_round_trip(gamma, v):
    datum = load_bundled("heisenberg").datum()
    G = datum.group
    g = G.multiply(gamma, v)
    found = locate(g, datum)
    assert found == (gamma, v)
    assert G.multiply(*found) == g


@pytest.mark.parametrize("name", ["heisenberg", "euclidean-z3", "gmu"])
def test_index_identity(name):
    datum = load_bundled(name).datum()
    kappa = sum(datum.group.degrees)
    for n in range(4):
        assert count_dilated_box(datum, n) == Fraction(datum.stretch) ** (n * kappa)


def test_enumeration_matches_brute_force_filter(heis_datum):
    for n in (1, 2):
        grid = product(*[range(-lp ** n - 1, lp ** n + 2) for lp in heis_datum.lam_pow])
        brute = {g for g in grid if heis_datum.in_lattice(g) and heis_datum.in_box(g, n)}
        assert set(enumerate_dilated_box(heis_datum, n)) == brute


def test_qnorm_examples(heis_datum):
    assert qnorm_lt((1, 1, 0), 2, heis_datum)
    assert qnorm_lt((0, 0, 0), Fraction(1, 100), heis_datum)
    sup = load_bundled("euclidean-z3").datum()
    assert not qnorm_lt((0, 0, 4), 2, sup)
    with pytest.raises(ValueError):
        qnorm_lt((0, 0, 0), 0, heis_datum)


def test_ball_membership_and_gap(heis_datum):
    ball = ball_lattice_points((0, 0, 0), Fraction(5, 2), heis_datum)
    assert {(2, 0, 0), (0, 2, 0), (0, 0, 2)} <= ball
    assert (2, 2, 0) not in ball
    assert ball_lattice_points((2, 0, 4), 1, heis_datum) == {(2, 0, 4)}


def test_ball_left_invariance_and_monotonicity(heis_datum):
    base = ball_lattice_points((0, 0, 0), 5, heis_datum)
    for c in [(2, 0, 0), (4, -6, 10), (-2, 2, 2)]:
        shifted = ball_lattice_points(c, 5, heis_datum)
        assert len(shifted) == len(base)
        G = heis_datum.group
        assert {G.multiply(G.inverse(c), g) for g in shifted} == base
    assert ball_lattice_points((0, 0, 0), 4, heis_datum) <= base


@pytest.mark.parametrize("r", [1, Fraction(5, 2), 5, 7, Fraction(31, 3)])
def test_fiber_count_matches_enumeration(heis_datum, r):
    assert count_ball_points(r, heis_datum) == len(ball_lattice_points((0, 0, 0), r, heis_datum))


def test_radii():
    sup = DilationDatum(heisenberg_group(), (2, 2, 2), [(-1, 1)] * 3, 3, norm="sup")
    rad = radii_of_box(sup)
    assert rad.inner_at_least(1) and rad.outer_at_most(1)
    assert rad.sufficient(3) and not rad.sufficient(2)
    kor = radii_of_box(heis())
    assert kor.inner_at_least(1) and not kor.inner_at_least(Fraction(101, 100))
    assert kor.outer_at_most(Fraction(3, 2))
    cube = DilationDatum(abelian_group(2), (1, 1), [(Fraction(-1, 2), Fraction(1, 2))] * 2, 3)
    r = radii_of_box(cube)
    assert r.inner_power == r.outer_power == Fraction(1, 2)


def test_datum_rejections():
    with pytest.raises(DatumError) as err:
        heis(stretch=2)
    assert err.value.failures[0][0] == "stretch not sufficiently large"
    with pytest.raises(DatumError):
        heis(box=[(0, 2), (-1, 1), (-1, 1)])
    with pytest.raises(DatumError):
        heis(scales=(2, 2, 4))
    with pytest.raises(DatumError):
        heis(stretch=Fraction(7, 2))
    with pytest.raises(DatumError):
        heis(scales=(1, 1, 1), box=[(Fraction(-1, 2), Fraction(1, 2))] * 3, norm="sup")


def test_intersection_property(heis_datum):
    split = splitting(heis_datum)
    assert split.vertical == (2,)
    assert split.f_v == tuple((z,) for z in range(-8, 9, 2))
    assert intersection_property(split) == (True, (0,))
    assert len(split.f_h) == 9


def test_splitting_is_a_product(heis_datum):
    split = splitting(heis_datum)
    joined = {split.join(h, v) for h in split.f_h for v in split.f_v}
    assert joined == set(enumerate_dilated_box(heis_datum, 1))


def test_all_bundled_data_validate():
    for name in bundled_names():
        spec = load_bundled(name)
        if spec.scales:
            assert spec.datum().dim == spec.group().dim
