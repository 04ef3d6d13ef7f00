"""Weak cluster points of bounded l2 sequences from limit oracles.

Two phases:

1. the coordinate sequences y_i = (<e_0, x_i>, <e_1, x_i>, ...) get a
   cluster point c in [-1, 1]^N by dyadic refinement, where each refinement
   is accepted only if the oracle says infinitely many y_i fall in the
   (padded) box;
2. z_i = <c_0, ..., c_i> increases in norm, so a monotone limit fixes how
   long a prefix of c is needed for each precision.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional

from .exact import (
    BoundedSeq,
    CReal,
    FinVec,
    L2Point,
    ceil_log2,
    embed,
    basis,
    l2_inner,
    l2_scale,
    pow2,
    sqrt_ceil_bound,
)
from .oracle import (
    Answer,
    Certified,
    LimitReal,
    Oracle,
    OracleUnknown,
    Periodic,
    SeqCertificate,
    monotone_limit,
)

# candidate offsets (in units of the child grid) around the parent center
_OFFSETS = range(-3, 4)


class NoBoxFound(RuntimeError):
    """No refinement received YES: the oracle contradicted itself."""


# --------------------------------------------------------------------------
# sequences with known tails


def eventually_periodic(points: list[FinVec], start: int, period: int, label: str = "") -> BoundedSeq:
    """x_i = points[i] for i < len(points), then period-``period`` repetition from ``start``."""
    if not 0 <= start < len(points) or period < 1 or start + period > len(points):
        raise ValueError("tail window must lie inside the listed points")
    embedded = [embed(v) for v in points]

    def item(i: int) -> L2Point:
        if i >= len(points):
            i = start + (i - start) % period
        return embedded[i]

    bound = max(sqrt_ceil_bound(v.norm_sq()) for v in points)
    last = max(len(v) for v in points) - 1
    cert = SeqCertificate(lambda K, prec=0: Periodic(start, period), lambda r: last)
    return BoundedSeq(item, bound, certificate=cert, label=label)


def constant_sequence(v: FinVec) -> BoundedSeq:
    return eventually_periodic([v], 0, 1, label=f"const{v!r}")


def unit_vectors(offset: int = 0) -> BoundedSeq:
    """The weakly null sequence (e_{i+offset})_i."""
    cert = SeqCertificate(lambda K, prec=0: Periodic(K, 1), lambda r: 0)
    return BoundedSeq(lambda i: embed(basis(i + offset)), Fraction(1), certificate=cert, label="e_i")


def rescaled(xs: BoundedSeq, q: Fraction) -> BoundedSeq:
    """(q * x_i)_i, certificate carried over with the precision shift."""
    q = Fraction(q)
    s = ceil_log2(q)
    cert = None
    if xs.certificate is not None:
        c = xs.certificate
        tail_shift = ceil_log2(q * q)
        cert = SeqCertificate(
            lambda K, prec=0: c.settle(K, prec + s),
            lambda r: c.tail_index(r + tail_shift),
        )
    return BoundedSeq(lambda i: l2_scale(xs.item(i), q), xs.bound * abs(q), certificate=cert, label=xs.label)


# --------------------------------------------------------------------------
# coordinate streams


@dataclass
class CoordStream:
    """entry(j, i) = <e_j, x_i>, with approximations ``approx(j, i, k)`` to 2**-k."""

    approx_fn: Callable[[int, int, int], Fraction]
    certificate: Optional[SeqCertificate] = None
    dims: Optional[int] = None

    def approx(self, j: int, i: int, k: int) -> Fraction:
        if self.dims is not None and j >= self.dims:
            return Fraction(0)
        return self.approx_fn(j, i, k)

    def entry(self, j: int, i: int) -> CReal:
        return CReal(lambda k: self.approx(j, i, k))


def coord_stream(xs: BoundedSeq) -> CoordStream:
    """Coordinate stream of a sequence bounded by 1."""
    if xs.bound > 1:
        raise ValueError("coord_stream expects a sequence bounded by 1; rescale first")
    return CoordStream(lambda j, i, k: xs.item(i).coord(j, k), xs.certificate)


def coord_entry_via_inner(xs: BoundedSeq, j: int, i: int) -> CReal:
    """The same entry computed through the extended inner product."""
    return l2_inner(embed(basis(j)), xs.item(i))


# --------------------------------------------------------------------------
# phase 1: cluster point in the product space


class ProductCluster:
    """Lazily refined cluster point of a coordinate stream in [-1, 1]^N.

    Coordinate j carries a dyadic center on the 2**-s grid at its current
    scale s; the box for j is [center - 2**-s, center + 2**-s].  An index i
    hits the box when every approximation of entry(j, i) at precision s + 3
    lies within the box padded by 2**-(s+2).  Each refinement moves one
    coordinate to scale s + 1, trying the seven child centers around the
    parent in increasing order and keeping the first the oracle accepts.
    """

    def __init__(self, cs: CoordStream, oracle: Oracle):
        self.cs = cs
        self.oracle = oracle
        self.centers: list[Fraction] = []
        self.scales: list[int] = []
        self.trace: list[tuple[int, int, Fraction]] = []
        self._hits: dict[int, list] = {}
        self._max_prec = 3

    def _ok(self, j: int, i: int, center: Fraction, scale: int) -> bool:
        a = self.cs.approx(j, i, scale + 3)
        return abs(a - center) <= pow2(-scale) + pow2(-scale - 2)

    def _hit(self, i: int) -> bool:
        e = self._hits.get(i)
        if e is None:
            ok = all(self._ok(j, i, self.centers[j], self.scales[j]) for j in range(len(self.centers)))
            self._hits[i] = [len(self.trace), ok]
            return ok
        if e[0] < len(self.trace):
            if e[1]:
                for j, s, c in self.trace[e[0]:]:
                    if not self._ok(j, i, c, s):
                        e[1] = False
                        break
            e[0] = len(self.trace)
        return e[1]

    def _certificate(self) -> Optional[Periodic]:
        if not self.oracle.certified:
            return None
        if self.cs.certificate is None:
            from .dsl import UncertifiedSpec

            raise UncertifiedSpec("certified clustering needs a sequence certificate")
        return self.cs.certificate.settle(len(self.centers), self._max_prec)

    def _add_coordinate(self) -> None:
        # scale 0 box [-1, 1] padded: every entry of a 1-bounded sequence hits it
        self.centers.append(Fraction(0))
        self.scales.append(0)

    def _refine(self, j: int) -> None:
        s = self.scales[j]
        parent = self.centers[j]
        h = pow2(-s - 1)
        self._max_prec = max(self._max_prec, s + 4)
        cert = self._certificate()
        cands = [parent + m * h for m in _OFFSETS]
        slack = pow2(-s - 1) + pow2(-s - 3)
        none = [False] * len(cands)

        def inside(i: int) -> list[bool]:
            if not self._hit(i):
                return none
            a = self.cs.approx(j, i, s + 4)
            return [abs(a - c) <= slack for c in cands]

        answers = self.oracle.infinitely_often_many(inside, len(cands), cert)
        for cand, ans in zip(cands, answers):
            if ans is Answer.YES:
                self.centers[j] = cand
                self.scales[j] = s + 1
                self.trace.append((j, s + 1, cand))
                return
        if Answer.UNKNOWN in answers:
            raise OracleUnknown(
                f"no refinement of coordinate {j} at scale {s + 1} confirmed within the horizon",
                trace=list(self.trace[-32:]),
            )
        raise NoBoxFound(f"no candidate box for coordinate {j} at scale {s + 1}")

    def ensure(self, j: int, scale: int) -> None:
        while len(self.centers) <= j:
            self._add_coordinate()
        while self.scales[j] < scale:
            self._refine(j)

    def stage(self, k: int) -> list[tuple[Fraction, Fraction]]:
        """Box of stage k: coordinates 0..k-1 as intervals of width 2**-(k-1)."""
        for j in range(k):
            self.ensure(j, k)
        return [(self.centers[j] - pow2(-self.scales[j]), self.centers[j] + pow2(-self.scales[j])) for j in range(k)]

    def value(self, j: int, k: int) -> Fraction:
        """Rational within 2**-k of c_j (centers move by at most 3 * 2**-s after scale s)."""
        if self.cs.dims is not None and j >= self.cs.dims:
            return Fraction(0)
        self.ensure(j, k + 2)
        return self.centers[j]


@dataclass
class ClusterCertificate:
    cluster: ProductCluster
    _cache: dict = field(default_factory=dict, repr=False)

    def c(self, j: int) -> CReal:
        r = self._cache.get(j)
        if r is None:
            r = self._cache[j] = CReal(lambda k: self.cluster.value(j, k), label=f"c_{j}")
        return r

    @property
    def box_trace(self) -> list[tuple[int, int, Fraction]]:
        return self.cluster.trace

    def norm_budget(self, k: int) -> Fraction:
        """Upper estimate of sum_{j<=k} c_j**2 from approximations at precision k + 6."""
        total = Fraction(0)
        for j in range(k + 1):
            a = abs(self.c(j).approx(k + 6)) + pow2(-(k + 6))
            total += a * a
        return total


def product_cluster(cs: CoordStream, oracle: Oracle) -> ClusterCertificate:
    return ClusterCertificate(ProductCluster(cs, oracle))


# --------------------------------------------------------------------------
# phase 2: monotone norm limit


@dataclass
class MonotoneInstance:
    """A nondecreasing bounded sequence of reals, given precision-wise.

    ``q_at(m)`` is a nondecreasing rational sequence within 2**-m of the
    real sequence up to index ``settle(m)``; ``settle(m)`` (when known) is a
    stage after which the real sequence is within 2**-m of its supremum.
    """

    q_at: Callable[[int], Callable[[int], Fraction]]
    bound: Fraction
    settle: Optional[Callable[[int], int]] = None


def mct_solve(inst: MonotoneInstance, oracle: Oracle) -> LimitReal:
    def approx(k: int) -> Fraction:
        q = inst.q_at(k + 2)
        stage = None
        if oracle.certified:
            i0 = inst.settle(k + 2)
            stage = lambda _k: i0
        return oracle.monotone_limit(q, inst.bound + pow2(-k), k + 1, stage).value

    return LimitReal(approx, oracle.certified, label="sup")


class _PrefixNorms:
    """Cumulative sums of squared approximants of c_0, c_1, ... at one precision."""

    def __init__(self, cert: ClusterCertificate, upto: int, prec: int):
        self.upto = upto
        self.coords = [cert.c(j).approx(prec) for j in range(upto + 1)]
        acc = Fraction(0)
        self.cum = []
        for a in self.coords:
            acc += a * a
            self.cum.append(acc)

    def __call__(self, i: int) -> Fraction:
        return self.cum[min(i, self.upto)]

    def violations(self) -> list[int]:
        return [i for i in range(len(self.cum) - 1) if self.cum[i] > self.cum[i + 1]]


def norm_instance(cert: ClusterCertificate, tail_index: Optional[Callable[[int], int]], horizon: int) -> MonotoneInstance:
    """The sequence ||z_i||**2 of squared prefix norms of c."""
    settle = tail_index if tail_index is not None else (lambda m: horizon)
    cache: dict[int, _PrefixNorms] = {}

    def q_at(m: int) -> _PrefixNorms:
        if m not in cache:
            U = settle(m)
            # 3 (U + 1) 2**-P <= 2**-m
            cache[m] = _PrefixNorms(cert, U, m + 2 + (U + 1).bit_length())
        return cache[m]

    return MonotoneInstance(q_at, Fraction(1), tail_index)


class ClusterPoint(L2Point):
    """The weak cluster point, with the evidence that produced it."""

    def __init__(self, stage, norm_bound, certificate: ClusterCertificate, certified: bool):
        super().__init__(stage, norm_bound, label="cluster")
        self.certificate = certificate
        self.certified = certified
        self.monotone_violations: list[int] = []
        self.prefix_lengths: dict[int, int] = {}


def assemble(cert: ClusterCertificate, inst: MonotoneInstance, limit: LimitReal, bound: Fraction) -> ClusterPoint:
    """Turn c and the norm limit into an l2 point with the 2**-k stage modulus."""

    def stage(k: int) -> FinVec:
        r = 2 * k + 5
        L = limit.approx(r + 2)
        q = inst.q_at(r + 2)
        point.monotone_violations.extend(q.violations())
        threshold = L - pow2(-r)
        i = next((i for i in range(q.upto + 1) if q(i) >= threshold), q.upto)
        point.prefix_lengths[k] = i
        return FinVec(q.coords[: i + 1])

    point = ClusterPoint(stage, bound, cert, limit.certified)
    return point


def weak_cluster(xs: BoundedSeq, oracle: Oracle) -> ClusterPoint:
    """A weak cluster point of a bounded sequence."""
    B = Fraction(xs.bound)
    if B != 1:
        inner = weak_cluster(rescaled(xs, 1 / B), oracle)
        out = ClusterPoint(
            lambda k: inner.stage(k + ceil_log2(B)).scale(B), B, inner.certificate, inner.certified
        )
        out.monotone_violations = inner.monotone_violations
        return out
    cs = coord_stream(xs)
    cert = product_cluster(cs, oracle)
    tail = xs.certificate.tail_index if (oracle.certified and xs.certificate is not None) else None
    if oracle.certified and tail is None:
        from .dsl import UncertifiedSpec

        raise UncertifiedSpec("certified weak clustering needs a tail certificate")
    if tail is None:
        tail = _staged_support(xs, oracle.budget.horizon)
    inst = norm_instance(cert, tail, oracle.budget.horizon)
    if not oracle.certified:
        inst.settle = None
    limit = mct_solve(inst, oracle)
    return assemble(cert, inst, limit, Fraction(1))


def _staged_support(xs: BoundedSeq, horizon: int) -> Callable[[int], int]:
    """Staged stand-in for the tail index: the last coordinate any explored item touches."""
    cache: dict[int, int] = {}

    def last(m: int) -> int:
        if m not in cache:
            top = max(len(xs.item(i).stage(m)) for i in range(horizon)) - 1
            cache[m] = min(top, horizon)
        return cache[m]

    return last


def verify_cluster(xs: BoundedSeq, x: L2Point, k: int, horizon: int) -> bool:
    """Finite witness of the cluster property on basis tests.

    True iff for each j <= k at least k indices i <= horizon satisfy
    |<e_j, x - x_i>| <= 2**-k (checked soundly on approximations).
    """
    accept = pow2(-k) - pow2(-(k + 2))
    for j in range(k + 1):
        xj = x.coord(j, k + 3)
        count = 0
        for i in range(horizon + 1):
            if abs(xj - xs.item(i).coord(j, k + 3)) <= accept:
                count += 1
                if count >= k:
                    break
        if count < k:
            return False
    return True
