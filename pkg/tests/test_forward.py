import random
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from oracles import FAMILY_T, FAMILY_TRUTH, f_brute, pairing_table, project_dict, sqrt_bisect, x_norm_sq_closed_form
from weakbw.dsl import decide_A, parse_predicate, UncertifiedSpec
from weakbw.exact import FinVec, embed, l2_inner, pow2
from weakbw.families import FAMILY_NAMES, family
from weakbw.forward import (
    build_sequence,
    coefficient,
    comprehension_stage,
    extract_g,
    f_fn,
    in_block,
    intended_cluster,
    pair,
    project_Mn,
    projection_norm_sq,
    stable_stage,
    unpair,
)


def test_pairing_matches_diagonal_walk():
    table = pairing_table(2000)
    for (n, k), code in table.items():
        assert pair(n, k) == code
        assert unpair(code) == (n, k)


# [DERIVED] by f_brute on the hand-written parity matrix, n = 0..3, i = 0..6
PARITY_F = {
    0: [0, 1, 2, 3, 4, 5, 6],
    1: [0, 0, 0, 0, 0, 0, 0],
    2: [0, 0, 2, 3, 4, 5, 6],
    3: [0, 0, 0, 0, 0, 0, 0],
}
# [DERIVED] by f_brute on the square matrix: x needs a witness x*x < i
SQUARE_F = [0, 1, 2, 2, 2, 3, 3]


def test_f_frozen_values():
    parity, square = family("parity"), family("square")
    assert {n: [f_fn(parity, n, i) for i in range(7)] for n in range(4)} == PARITY_F
    assert [f_fn(square, 0, i) for i in range(7)] == SQUARE_F


@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_f_matches_brute_force(name):
    spec, t = family(name), FAMILY_T[name]
    for n in range(6):
        for i in range(14):
            assert f_fn(spec, n, i) == f_brute(t, n, i)


def test_coefficients_against_bisection():
    for n in range(10):
        for k in (0, 4, 12, 30):
            c = coefficient(n, k)
            ref = sqrt_bisect(pow2(-(n + 1)), k + n + 4)
            assert c <= ref + pow2(-(k + n + 4))
            assert abs(c - ref) <= pow2(-(k + n + 2)) + pow2(-(k + n + 4))


def test_x_i_shape():
    spec = family("parity")
    x3 = build_sequence(spec).x(3)
    v = x3.stage(10)
    assert v.support() == sorted(pair(n, f_fn(spec, n, 3)) for n in range(4))
    for j in range(40):
        assert x3.coord(j, 10) == v[j]


def test_projection_identity_for_late_items():
    """For i >= n, P_{M_n} x_i is the single term 2**-(n+1)/2 e_<n, f(n,i)>."""
    spec = family("threshold")
    xs = build_sequence(spec).xs
    for n in range(5):
        for i in range(n, n + 6):
            p = project_Mn(n, xs.item(i)).stage(14)
            assert p.support() == [pair(n, f_fn(spec, n, i))]
            assert p[pair(n, f_fn(spec, n, i))] == coefficient(n, 14)
            assert abs(projection_norm_sq(xs.item(i), n, 20) - pow2(-(n + 1))) <= pow2(-20)
    # n > i: the projection vanishes
    assert project_Mn(3, xs.item(1)).stage(10).support() == []


@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_pythagoras_ledger(name):
    xs = build_sequence(family(name)).xs
    for i in range(21):
        r = l2_inner(xs.item(i), xs.item(i)).approx(30)
        assert abs(r - x_norm_sq_closed_form(i)) <= pow2(-28)


@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_comprehension_stage(name):
    spec = family(name)
    for n in range(16):
        for K in range(13):
            i = comprehension_stage(spec, n, K)
            assert (f_fn(spec, n, i) > K) == FAMILY_TRUTH[name](n)
            # and it stays that way a while longer
            assert (f_fn(spec, n, i + 7) > K) == FAMILY_TRUTH[name](n)


def test_stage_needs_annotations():
    spec = parse_predicate("x -. y")
    with pytest.raises(UncertifiedSpec):
        stable_stage(spec, 0, 3)
    assert build_sequence(spec).xs.certificate is None


finvecs = st.lists(st.fractions(min_value=-4, max_value=4, max_denominator=32), max_size=30).map(FinVec)


@given(finvecs, finvecs, st.fractions(min_value=-5, max_value=5, max_denominator=16), st.integers(0, 5))
@settings(max_examples=1000, deadline=None)
def test_projection_laws(u, v, q, n):
    P = lambda w: project_Mn(n, w)
    assert P(P(u)) == P(u)
    assert P(u + v) == P(u) + P(v)
    assert P(u.scale(q)) == P(u).scale(q)
    assert (P(u) - P(v)).norm_sq() <= (u - v).norm_sq()
    ref = project_dict(dict(enumerate(u.coords)), in_block(n))
    assert P(u) == FinVec.from_dict(ref)


def test_projection_dichotomy_zero_and_one(cluster_runs):
    zero, one = cluster_runs.get("always"), cluster_runs.get("never")
    for n in range(12):
        assert projection_norm_sq(zero, n, n + 5) <= pow2(-(n + 3))
        assert abs(projection_norm_sq(one, n, n + 5) - pow2(-(n + 1))) <= pow2(-(n + 3))


def test_extract_on_intended_point():
    """The intended cluster (coefficients recovered by sqrt) reads back the truth values."""
    from weakbw.exact import CReal, L2Point

    spec = family("parity")
    sq = intended_cluster(spec, 10)

    def stage(k):
        return FinVec([CReal.from_rat(c).sqrt().approx(k + 8) for c in sq.coords])

    x = L2Point(stage, 1)
    assert [extract_g(x, n) for n in range(10)] == [0 if decide_A(spec, n) else 1 for n in range(10)]
