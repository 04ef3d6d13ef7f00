from fractions import Fraction

import pytest

from weakbw.dsl import UncertifiedSpec
from weakbw.exact import CReal, pow2
from weakbw.oracle import (
    Answer,
    CertificateError,
    Certified,
    FinalHit,
    MonotonicityViolation,
    Oracle,
    OracleBudget,
    Periodic,
    Recurs,
    Staged,
    exists_oracle,
    infinitely_often,
    lim_real,
    monotone_limit,
)


def test_exists_certified_and_staged():
    assert exists_oracle(lambda k: k == 7, Certified(10)) is Answer.YES
    assert exists_oracle(lambda k: k == 70, Certified(10)) is Answer.NO
    assert exists_oracle(lambda k: k == 70, Staged(OracleBudget(100))) is Answer.YES
    assert exists_oracle(lambda k: False, Staged(OracleBudget(100))) is Answer.UNKNOWN
    with pytest.raises(UncertifiedSpec):
        exists_oracle(lambda k: True, Certified(None))


def test_infinitely_often_certificates():
    even = lambda i: i % 2 == 0
    assert infinitely_often(even, Certified(Periodic(0, 2))) is Answer.YES
    assert infinitely_often(lambda i: i < 5, Certified(Periodic(5, 1))) is Answer.NO
    assert infinitely_often(even, Certified(Recurs(lambda k: k + k % 2))) is Answer.YES
    assert infinitely_often(lambda i: i < 5, Certified(FinalHit(4))) is Answer.NO
    with pytest.raises(CertificateError):
        infinitely_often(even, Certified(Recurs(lambda k: k)))
    with pytest.raises(CertificateError):
        infinitely_often(even, Certified(FinalHit(4)))
    with pytest.raises(UncertifiedSpec):
        infinitely_often(even, Certified(None))


def test_infinitely_often_staged():
    budget = OracleBudget(400)
    assert budget.hits_needed == 20
    assert infinitely_often(lambda i: i % 3 == 0, Staged(budget)) is Answer.YES
    assert infinitely_often(lambda i: i < 10, Staged(budget)) is Answer.UNKNOWN
    assert infinitely_often(lambda i: True, Staged(OracleBudget(1))) is Answer.UNKNOWN
    assert OracleBudget(100, threshold=3).hits_needed == 3
    with pytest.raises(ValueError):
        OracleBudget(0)


def test_monotone_limit():
    q = lambda i: 1 - pow2(-i)
    lim = monotone_limit(q, 1, 10, Certified(lambda k: k))
    assert lim.certified and abs(lim.value - 1) <= pow2(-10)
    staged = monotone_limit(q, 1, 10, Staged(OracleBudget(50)))
    assert not staged.certified and abs(staged.value - 1) <= pow2(-10)
    with pytest.raises(MonotonicityViolation):
        monotone_limit(lambda i: -i, 1, 5, Certified(lambda k: 10))
    with pytest.raises(MonotonicityViolation):
        monotone_limit(lambda i: Fraction(i), 3, 5, Certified(lambda k: 10))


def test_lim_real():
    s = lambda i: CReal.from_rat(Fraction(1, 3) + pow2(-i))
    r = lim_real(s, Certified(lambda k: k))
    assert r.certified
    for k in (0, 5, 30):
        assert abs(r.approx(k) - Fraction(1, 3)) <= pow2(-k)
    assert not lim_real(s, Staged(OracleBudget(64))).certified


def test_oracle_suite_modes():
    o = Oracle("certified")
    assert o.certified and o.exists(lambda k: k == 3, 5) is Answer.YES
    s = Oracle("staged", OracleBudget(10))
    assert not s.certified
    assert s.exists(lambda k: k == 30, 100) is Answer.UNKNOWN
    with pytest.raises(ValueError):
        Oracle("psychic")
