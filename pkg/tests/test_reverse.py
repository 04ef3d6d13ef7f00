from fractions import Fraction

import pytest

from oracles import tail_points
from weakbw.dsl import UncertifiedSpec
from weakbw.exact import FinVec, l2_inner, pow2
from weakbw.families import FAMILY_NAMES
from weakbw.oracle import Oracle, OracleBudget, OracleUnknown
from weakbw.reverse import (
    CoordStream,
    coord_entry_via_inner,
    coord_stream,
    constant_sequence,
    eventually_periodic,
    mct_solve,
    MonotoneInstance,
    product_cluster,
    rescaled,
    unit_vectors,
    verify_cluster,
    weak_cluster,
)
from weakbw.exact import BoundedSeq

CERT = Oracle("certified")


def close_to(x, v: FinVec, k: int) -> bool:
    return all(abs(x.coord(j, k + 2) - v[j]) <= pow2(-k) for j in range(len(v) + 4))


def test_unit_vectors_cluster_at_zero():
    xs = unit_vectors()
    x = weak_cluster(xs, CERT)
    assert x.certified
    assert x.stage(8).norm_sq() <= pow2(-12)
    assert verify_cluster(xs, x, 8, 1000)


def test_constant_sequence_reproduces_its_value():
    v = FinVec([Fraction(1, 2), Fraction(-1, 3), 0, Fraction(1, 5)])
    x = weak_cluster(constant_sequence(v), CERT)
    assert close_to(x, v, 12)
    assert (x.stage(10) - v).norm_sq() <= pow2(-20)


def test_alternating_sequence_picks_a_tail_point():
    pts = [FinVec([Fraction(1, 2)]), FinVec([0, Fraction(1, 2)]), FinVec([1]), FinVec([0, 1])]
    xs = eventually_periodic(pts, 2, 2)
    x = weak_cluster(xs, CERT)
    assert any(close_to(x, p, 10) for p in tail_points(pts, 2, 2))
    assert not any(close_to(x, p, 10) for p in pts[:2])


def test_rescaling_large_bounds():
    v = FinVec([0, 3])
    xs = constant_sequence(v)
    assert xs.bound == 3
    x = weak_cluster(xs, CERT)
    assert abs(x.coord(1, 10) - 3) <= pow2(-10)
    r = rescaled(xs, Fraction(1, 3))
    assert r.bound == 1 and r.item(5).stage(4) == FinVec([0, 1])


def test_coordinate_stream_matches_inner_products():
    from weakbw.families import family
    from weakbw.forward import build_sequence

    xs = build_sequence(family("parity")).xs
    cs = coord_stream(xs)
    for i in range(6):
        for j in range(12):
            a = coord_entry_via_inner(xs, j, i).approx(16)
            assert abs(cs.approx(j, i, 16) - a) <= pow2(-15)
    with pytest.raises(ValueError):
        coord_stream(constant_sequence(FinVec([2])))


def test_product_cluster_of_a_two_point_tail():
    # coordinate 0 alternates 1/4, -3/4; coordinate 1 is 1/2 always
    cs = CoordStream(
        lambda j, i, k: (Fraction(1, 4) if i % 2 == 0 else Fraction(-3, 4)) if j == 0 else Fraction(1, 2),
        certificate=None,
        dims=2,
    )
    from weakbw.oracle import Periodic, SeqCertificate

    cs.certificate = SeqCertificate(lambda K, prec=0: Periodic(0, 2), lambda r: 1)
    cert = product_cluster(cs, CERT)
    c0 = cert.c(0).approx(20)
    assert min(abs(c0 - Fraction(1, 4)), abs(c0 + Fraction(3, 4))) <= pow2(-20)
    assert abs(cert.c(1).approx(20) - Fraction(1, 2)) <= pow2(-20)
    assert cert.c(5).approx(10) == 0
    # the trace records each refinement once, at increasing scale per coordinate
    scales = {}
    for j, s, _ in cert.box_trace:
        assert s == scales.get(j, 0) + 1
        scales[j] = s


def test_weak_continuity_of_extraction():
    """Cluster points of nearby constant sequences are nearby."""
    v = FinVec([Fraction(1, 3), Fraction(1, 7)])
    w = v + FinVec([pow2(-12)])
    x, y = weak_cluster(constant_sequence(v), CERT), weak_cluster(constant_sequence(w), CERT)
    for j in range(3):
        assert abs(x.coord(j, 16) - y.coord(j, 16)) <= pow2(-12) + pow2(-15)


def test_mct_solver():
    inst = MonotoneInstance(lambda m: (lambda i: 1 - pow2(-i)), Fraction(1), settle=lambda m: m + 1)
    r = mct_solve(inst, CERT)
    assert abs(r.approx(16) - 1) <= pow2(-16)


@pytest.mark.parametrize("name", FAMILY_NAMES)
def test_norm_budget_and_monotone_prefix_norms(name, cluster_runs):
    x = cluster_runs.get(name)
    for k in range(17):
        assert x.certificate.norm_budget(k) <= 1 + pow2(-k + 2)
    x.stage(12)
    assert x.monotone_violations == []


def test_certified_mode_needs_certificates():
    xs = BoundedSeq(lambda i: unit_vectors().item(i), Fraction(1))
    with pytest.raises(UncertifiedSpec):
        weak_cluster(xs, CERT).stage(3)


def test_staged_mode():
    xs = constant_sequence(FinVec([Fraction(1, 2)]))
    x = weak_cluster(xs, Oracle("staged", OracleBudget(200)))
    assert not x.certified
    assert abs(x.coord(0, 8) - Fraction(1, 2)) <= pow2(-8)
    with pytest.raises(OracleUnknown):
        weak_cluster(xs, Oracle("staged", OracleBudget(1))).stage(4)


def test_verify_rejects_a_wrong_point():
    from weakbw.exact import embed

    xs = unit_vectors()
    assert not verify_cluster(xs, embed(FinVec([Fraction(1, 2)])), 8, 1000)
