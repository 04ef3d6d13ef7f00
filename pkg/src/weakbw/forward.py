"""Encoding a Pi-0-2 comprehension instance as a bounded sequence in l2.

For a predicate ``A(n) = forall x exists y t(x,y,n) = 0`` we build

    f(n, i)  = max{x <= i : every x' < x has a witness y < i}
    y_{n,i}  = e_<n, f(n,i)>
    x_i      = sum_{n <= i} 2**(-(n+1)/2) * y_{n,i}

and read the comprehension function off any weak cluster point x by the
size of its projection onto M_n = span{e_<n,k> : k}.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import isqrt
from typing import Callable, Optional, Union

from .dsl import PredicateSpec, UncertifiedSpec
from .exact import (
    BoundedSeq,
    FinVec,
    L2Point,
    basis,
    l2_inner,
    map_stages,
    pow2,
)
from .oracle import Periodic, SeqCertificate


def pair(n: int, k: int) -> int:
    """Cantor pairing <n, k>."""
    s = n + k
    return s * (s + 1) // 2 + k


def unpair(j: int) -> tuple[int, int]:
    w = (isqrt(8 * j + 1) - 1) // 2
    k = j - w * (w + 1) // 2
    return w - k, k


def f_fn(spec: PredicateSpec, n: int, i: int) -> int:
    x = 0
    while x < i and spec.has_witness(n, x, i):
        x += 1
    return x


def y_vec(spec: PredicateSpec, n: int, i: int) -> FinVec:
    return basis(pair(n, f_fn(spec, n, i)))


@lru_cache(maxsize=None)
def coefficient(n: int, k: int) -> Fraction:
    """Lower rational approximation of 2**(-(n+1)/2) with error <= 2**-(k+n+2)."""
    e = n + 1
    if e % 2 == 0:
        return pow2(-(e // 2))
    p = k + n + 2
    # sqrt(2**-e) = sqrt(2**(2p - e)) / 2**p
    return Fraction(isqrt(1 << (2 * p - e)), 1 << p)


def coefficient_sq(n: int) -> Fraction:
    return pow2(-(n + 1))


def _x_point(spec: PredicateSpec, i: int) -> L2Point:
    def stage(k: int) -> FinVec:
        return FinVec.from_dict({pair(n, f_fn(spec, n, i)): coefficient(n, k) for n in range(i + 1)})

    def coord(j: int, k: int) -> Fraction:
        n, m = unpair(j)
        if n <= i and f_fn(spec, n, i) == m:
            return coefficient(n, k)
        return Fraction(0)

    return L2Point(stage, Fraction(1), coord=coord, label=f"x_{i}")


# --------------------------------------------------------------------------
# certificates derived from the annotations


def stable_stage(spec: PredicateSpec, n: int, m: int) -> int:
    """An index from which the coordinates <n, m'> (m' <= m) of x_i no longer change.

    Past this stage either f(n, i) > m, or f(n, i) has reached its final
    value (the failure point).  Needs witness bounds and a failure point.
    """
    if spec.witness_bound is None:
        raise UncertifiedSpec(f"{spec.name or 'spec'} has no witness bound")
    fp = spec.least_failure(n)
    target = m + 1 if fp is None else min(fp, m + 1)
    i = max(target, n)
    for x in range(target):
        i = max(i, spec.witness_bound(n, x) + 1)
    return i


def forward_certificate(spec: PredicateSpec) -> SeqCertificate:
    settle_cache: dict[int, int] = {}

    def settle(K: int, prec: int = 0) -> Periodic:
        if K not in settle_cache:
            start = 0
            n = 0
            while pair(n, 0) < K:
                m_max = 0
                while pair(n, m_max + 1) < K:
                    m_max += 1
                start = max(start, stable_stage(spec, n, m_max))
                n += 1
            settle_cache[K] = start
        return Periodic(settle_cache[K], 1)

    def tail_index(r: int) -> int:
        # coordinates with n >= r carry at most sum_{n>=r} 2**-(n+1) = 2**-r
        J = 0
        for n in range(max(r, 0)):
            fp = spec.least_failure(n)
            if fp is not None:
                J = max(J, pair(n, fp))
        return J

    return SeqCertificate(settle, tail_index)


@dataclass
class ForwardInstance:
    spec: PredicateSpec
    xs: BoundedSeq

    def x(self, i: int) -> L2Point:
        return self.xs.item(i)


def build_sequence(spec: PredicateSpec) -> ForwardInstance:
    cert = None
    if spec.witness_bound is not None and (spec.failure_point is not None or spec.truth is not None):
        cert = forward_certificate(spec)
    xs = BoundedSeq(lambda i: _x_point(spec, i), Fraction(1), certificate=cert, label=spec.name)
    return ForwardInstance(spec, xs)


def intended_cluster(spec: PredicateSpec, nmax: int) -> FinVec:
    """The cluster point restricted to n < nmax, squared coefficients kept exact.

    Returns coordinates as squared values (the real coefficients are irrational).
    """
    out = {}
    for n in range(nmax):
        fp = spec.least_failure(n)
        if fp is not None:
            out[pair(n, fp)] = coefficient_sq(n)
    return FinVec.from_dict(out)


# --------------------------------------------------------------------------
# projections onto M_n and the comprehension readout


def in_block(n: int) -> Callable[[int], bool]:
    return lambda j: unpair(j)[0] == n


def project_index_set(keep: Callable[[int], bool], v: Union[FinVec, L2Point]):
    """Projection onto span{e_j : keep(j)}: zero every other coordinate."""
    if isinstance(v, FinVec):
        return FinVec(c if keep(j) else 0 for j, c in enumerate(v.coords))
    return map_stages(v, lambda u: project_index_set(keep, u), coord_filter=keep)


def project_Mn(n: int, v: Union[FinVec, L2Point]):
    return project_index_set(in_block(n), v)


def projection_norm_sq(x: L2Point, n: int, k: int) -> Fraction:
    """Rational within 2**-k of ||P_{M_n} x||**2."""
    p = project_Mn(n, x)
    return l2_inner(p, p).approx(k)


def extract_g(x: L2Point, n: int) -> int:
    """0 iff A(n), on weak cluster points of a forward-encoded sequence.

    The squared projection norm is 0 or 2**-(n+1); an approximation to
    2**-(n+3) compared against 2**-(n+2) separates the two cases.
    """
    s = projection_norm_sq(x, n, n + 3)
    return 0 if s < pow2(-(n + 2)) else 1


def comprehension_stage(spec: PredicateSpec, n: int, K: int) -> int:
    """Certified stage at which f(n, i) > K holds iff A(n)."""
    return stable_stage(spec, n, K)
