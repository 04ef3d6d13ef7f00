"""Limit and jump oracles.

Every non-effective step (a Sigma-1 search, an infinitely-often question,
the limit of a monotone or convergent sequence) goes through one of the
functions here.  Two modes exist:

* ``Certified(cert)`` answers exactly, using a certificate supplied by the
  caller (a search bound, a tail shape, a stabilization stage, a modulus).
* ``Staged(budget)`` explores up to ``budget.horizon`` and answers
  ``UNKNOWN`` (or flags its result) when that is not conclusive.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from math import isqrt
from typing import Callable, NamedTuple, Optional, Union

from .dsl import UncertifiedSpec
from .exact import CReal

SPOT_CHECKS = 16


class Answer(enum.Enum):
    YES = "YES"
    NO = "NO"
    UNKNOWN = "UNKNOWN"


class OracleUnknown(RuntimeError):
    """A staged oracle ran out of budget; the caller must not guess."""

    def __init__(self, msg: str, trace: Optional[list] = None):
        super().__init__(msg)
        self.trace = trace or []


class CertificateError(ValueError):
    """A certificate failed its spot check."""


class MonotonicityViolation(ValueError):
    pass


@dataclass(frozen=True)
class OracleBudget:
    horizon: int = 10_000
    threshold: Optional[int] = None

    def __post_init__(self):
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def hits_needed(self) -> int:
        if self.threshold is not None:
            return self.threshold
        return max(2, isqrt(self.horizon))


@dataclass(frozen=True)
class Certified:
    cert: object = None


@dataclass(frozen=True)
class Staged:
    budget: OracleBudget = OracleBudget()


Mode = Union[Certified, Staged]


# certificates for infinitely-often questions


@dataclass(frozen=True)
class Periodic:
    """p(i) = p(i + period) for every i >= start."""

    start: int
    period: int = 1


@dataclass(frozen=True)
class Recurs:
    """next_hit(k) >= k is an index with p true."""

    next_hit: Callable[[int], int]


@dataclass(frozen=True)
class FinalHit:
    """No hit after ``last`` (None: no hit at all)."""

    last: Optional[int]


@dataclass
class SeqCertificate:
    """Tail annotations for a bounded sequence.

    ``settle(K, prec)`` gives a Periodic shape valid for every predicate that
    reads only coordinates below K at approximation precision at most prec.
    ``tail_index(r)`` is an index J with sum_{j > J} c_j**2 <= 2**-r for every
    coordinatewise cluster point c.
    """

    settle: Callable[[int, int], Periodic]
    tail_index: Callable[[int], int]


def exists_oracle(p: Callable[[int], bool], mode: Mode) -> Answer:
    if isinstance(mode, Certified):
        if mode.cert is None:
            raise UncertifiedSpec("exists query needs a search bound")
        return Answer.YES if any(p(k) for k in range(int(mode.cert) + 1)) else Answer.NO
    return Answer.YES if any(p(k) for k in range(mode.budget.horizon)) else Answer.UNKNOWN


def infinitely_often(p: Callable[[int], bool], mode: Mode) -> Answer:
    if isinstance(mode, Staged):
        hits = 0
        need = mode.budget.hits_needed
        for i in range(mode.budget.horizon):
            if p(i):
                hits += 1
                if hits >= need:
                    return Answer.YES
        return Answer.UNKNOWN
    cert = mode.cert
    if isinstance(cert, Periodic):
        return Answer.YES if any(p(i) for i in range(cert.start, cert.start + cert.period)) else Answer.NO
    if isinstance(cert, Recurs):
        for k in _spot_indices():
            i = cert.next_hit(k)
            if i < k or not p(i):
                raise CertificateError(f"recurrence certificate fails at k={k}")
        return Answer.YES
    if isinstance(cert, FinalHit):
        first = 0 if cert.last is None else cert.last + 1
        if any(p(i) for i in range(first, first + SPOT_CHECKS)):
            raise CertificateError("hit found after the certified final hit")
        return Answer.NO
    raise UncertifiedSpec("infinitely-often query needs a tail certificate")


def infinitely_often_many(p: Callable[[int], list], count: int, mode: Mode) -> list[Answer]:
    """``count`` infinitely-often questions at once; p(i) lists the truth of each at i.

    Answers agree with asking each question separately; one scan serves all.
    """
    cert = getattr(mode, "cert", None)
    if isinstance(mode, Certified) and not isinstance(cert, Periodic):
        return [infinitely_often(lambda i, m=m: p(i)[m], mode) for m in range(count)]
    if isinstance(mode, Staged):
        window, need = range(mode.budget.horizon), mode.budget.hits_needed
        miss = Answer.UNKNOWN
    else:
        window, need = range(cert.start, cert.start + cert.period), 1
        miss = Answer.NO
    hits = [0] * count
    for i in window:
        for m, ok in enumerate(p(i)):
            if ok:
                hits[m] += 1
    return [Answer.YES if h >= need else miss for h in hits]


def _spot_indices():
    return [0, 1, 2, 3, 5, 8, 13, 21, 34, 55]


class Limit(NamedTuple):
    value: Fraction
    certified: bool


def monotone_limit(q: Callable[[int], Fraction], bound, k: int, mode: Mode) -> Limit:
    """Rational within 2**-k of sup_i q(i) for nondecreasing q bounded by ``bound``.

    Certified mode takes a stabilization-stage function ``stage(k)`` with
    sup - q(stage(k)) <= 2**-k.
    """
    bound = Fraction(bound)
    if isinstance(mode, Certified):
        if mode.cert is None:
            raise UncertifiedSpec("monotone limit needs a stabilization stage")
        last = int(mode.cert(k))
    else:
        last = mode.budget.horizon
    _check_monotone(q, last, bound)
    return Limit(Fraction(q(last)), isinstance(mode, Certified))


def _check_monotone(q, last: int, bound: Fraction) -> None:
    if last <= 4 * SPOT_CHECKS:
        samples = range(last)
    else:
        step = last // SPOT_CHECKS
        samples = sorted(set(range(SPOT_CHECKS)) | set(range(0, last, step)) | {last - 1})
    for i in samples:
        if q(i) > q(i + 1):
            raise MonotonicityViolation(f"q({i}) = {q(i)} > q({i + 1}) = {q(i + 1)}")
    if q(last) > bound:
        raise MonotonicityViolation(f"q({last}) = {q(last)} exceeds the bound {bound}")


class LimitReal(CReal):
    """A CReal produced by a limit oracle; ``certified`` is False for best-effort values."""

    __slots__ = ("certified",)

    def __init__(self, fn, certified: bool, label: str = ""):
        super().__init__(fn, label)
        self.certified = certified


def lim_real(s: Callable[[int], CReal], mode: Mode) -> LimitReal:
    """Limit of a convergent sequence of reals.

    Certified mode takes a modulus k -> i0 with |s(i) - lim| <= 2**-k for i >= i0.
    """
    if isinstance(mode, Certified):
        modulus = mode.cert
        if modulus is None:
            raise UncertifiedSpec("limit needs a convergence modulus")
        return LimitReal(lambda k: s(int(modulus(k + 1))).approx(k + 1), True)
    h = mode.budget.horizon
    return LimitReal(lambda k: s(h).approx(k), False)


class Oracle:
    """Oracle suite used by the reduction pipelines.

    ``Oracle("certified")`` demands certificates with every query;
    ``Oracle("staged", OracleBudget(h))`` ignores them and explores up to h.
    """

    def __init__(self, kind: str = "certified", budget: OracleBudget = OracleBudget()):
        if kind not in ("certified", "staged"):
            raise ValueError(f"unknown oracle mode {kind!r}")
        self.kind = kind
        self.budget = budget

    @property
    def certified(self) -> bool:
        return self.kind == "certified"

    def _mode(self, cert) -> Mode:
        return Certified(cert) if self.certified else Staged(self.budget)

    def exists(self, p, bound=None) -> Answer:
        return exists_oracle(p, self._mode(bound))

    def infinitely_often(self, p, cert=None) -> Answer:
        return infinitely_often(p, self._mode(cert))

    def infinitely_often_many(self, p, count, cert=None) -> list[Answer]:
        return infinitely_often_many(p, count, self._mode(cert))

    def monotone_limit(self, q, bound, k, stage=None) -> Limit:
        return monotone_limit(q, bound, k, self._mode(stage))

    def lim_real(self, s, modulus=None) -> LimitReal:
        return lim_real(s, self._mode(modulus))

    def __repr__(self) -> str:
        return f"Oracle({self.kind!r}, horizon={self.budget.horizon})"
