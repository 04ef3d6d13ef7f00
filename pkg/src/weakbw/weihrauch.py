"""Executable Weihrauch reductions between the problems around weak compactness.

A problem solves instances with the help of an :class:`~weakbw.oracle.Oracle`;
a reduction is a pair of maps around a (possibly composite) target problem.
Three chains are provided:

``rev-chain``      BWT_weak-l2 <= MCT * BWT_R^N
``fwd-chain``      lim^(2) <= BWT_weak-l2  (on Pi-0-2 comprehension instances)
``prod-collapse``  BWT_R^N <= BWT_R        (Cantor-set coding of the product)

Parallelization is finite width only.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, NamedTuple, Optional

from .dsl import PredicateSpec, UncertifiedSpec, decide_A
from .exact import BoundedSeq, CReal, FinVec, pow2
from .forward import build_sequence, extract_g, pair, unpair
from .oracle import Answer, LimitReal, Oracle, OracleUnknown, Periodic, SeqCertificate
from .reverse import (
    ClusterCertificate,
    CoordStream,
    MonotoneInstance,
    assemble,
    constant_sequence,
    coord_stream,
    eventually_periodic,
    mct_solve,
    norm_instance,
    product_cluster,
    rescaled,
    unit_vectors,
    verify_cluster,
)

KINDS = {"real-sequence", "real", "l2-sequence", "l2-point", "boolean-sequence", "any"}


class KindMismatch(TypeError):
    pass


@dataclass
class Problem:
    name: str
    solve: Callable[[Any, Oracle], Any]
    in_kind: str = "any"
    out_kind: str = "any"

    def __post_init__(self):
        if self.in_kind not in KINDS or self.out_kind not in KINDS:
            raise KindMismatch(f"unknown kind in {self.name}")

    def __call__(self, inst, oracle: Oracle):
        return self.solve(inst, oracle)


# --------------------------------------------------------------------------
# instances


@dataclass
class BinarySeq:
    """A 0/1 sequence; ``bound``: if a 1 occurs at all, one occurs at or below it."""

    bits: Callable[[int], int]
    bound: Optional[int] = None


@dataclass
class ConvergentSeq:
    """term(i) -> CReal with modulus k -> i0 (|term(i) - lim| <= 2**-k for i >= i0)."""

    term: Callable[[int], CReal]
    modulus: Optional[Callable[[int], int]] = None


@dataclass
class Lim2Instance:
    """The double sequence b(n, i, j) = [for all x < i exists y < j: t(x, y, n) = 0].

    lim_i lim_j b(n, i, j) = [A(n)].  The predicate's annotations supply moduli.
    """

    spec: PredicateSpec
    width: int = 16

    def b(self, n: int, i: int, j: int) -> int:
        return int(all(self.spec.has_witness(n, x, j) for x in range(i)))

    def inner_modulus(self, n: int, i: int) -> int:
        fp = self.spec.least_failure(n)
        top = i if fp is None else min(i, fp)
        return max([self.spec.witness_bound(n, x) + 1 for x in range(top)], default=0)

    def outer_modulus(self, n: int) -> int:
        fp = self.spec.least_failure(n)
        return 0 if fp is None else fp + 1


# --------------------------------------------------------------------------
# basic problems


def _lpo(inst: BinarySeq, oracle: Oracle) -> bool:
    ans = oracle.exists(lambda k: inst.bits(k) == 1, inst.bound)
    if ans is Answer.UNKNOWN:
        raise OracleUnknown("LPO: no 1 found within the horizon")
    return ans is Answer.NO


def _lim(inst: ConvergentSeq, oracle: Oracle) -> LimitReal:
    return oracle.lim_real(inst.term, inst.modulus)


def _bit_of(r: CReal) -> int:
    return 1 if r.approx(2) > Fraction(1, 2) else 0


def _lim2(inst: Lim2Instance, oracle: Oracle) -> Callable[[int], int]:
    """lim o lim, each limit taken by the oracle with moduli from the annotations."""

    def solution(n: int) -> int:
        def inner(i: int) -> CReal:
            seq = ConvergentSeq(
                lambda j: CReal.from_rat(inst.b(n, i, j)), lambda k: inst.inner_modulus(n, i)
            )
            return _lim(seq, oracle)

        outer = _lim(ConvergentSeq(inner, lambda k: inst.outer_modulus(n)), oracle)
        return _bit_of(outer)

    return solution


def _bwt_rn(cs: CoordStream, oracle: Oracle) -> ClusterCertificate:
    return product_cluster(cs, oracle)


def _bwt_r(cs: CoordStream, oracle: Oracle) -> CReal:
    if cs.dims != 1:
        raise KindMismatch("BWT_R takes a one-dimensional stream")
    return product_cluster(cs, oracle).c(0)


def _bwt_weak(xs: BoundedSeq, oracle: Oracle):
    from .reverse import weak_cluster

    return weak_cluster(xs, oracle)


IDENTITY = Problem("id", lambda inst, oracle: inst)
LPO = Problem("LPO", _lpo, "boolean-sequence", "any")
LIM = Problem("lim", _lim, "real-sequence", "real")
MCT = Problem("MCT", mct_solve, "real-sequence", "real")
LIM2 = Problem("lim^(2)", _lim2, "any", "boolean-sequence")
BWT_R = Problem("BWT_R", _bwt_r, "real-sequence", "real")
BWT_RN = Problem("BWT_R^N", _bwt_rn, "real-sequence", "real-sequence")
BWT_WEAK = Problem("BWT_weak-l2", _bwt_weak, "l2-sequence", "l2-point")


def constant_problem(value) -> Problem:
    return Problem(f"const({value!r})", lambda inst, oracle: value)


# --------------------------------------------------------------------------
# combinators


class StarResult(NamedTuple):
    inner: Any
    glued: Any
    outer: Any


def star(f: Problem, g: Problem, glue: Optional[Callable[[Any, Any], Any]] = None,
         glue_kind: Optional[tuple[str, str]] = None) -> Problem:
    """Compositional product f * g: solve g, glue its answer into an f-instance, solve f.

    ``glue_kind`` declares (g output kind, f input kind) the glue map bridges;
    without a glue map the kinds must match directly.
    """
    if glue is None:
        if f.in_kind not in ("any", g.out_kind) and g.out_kind != "any":
            raise KindMismatch(f"{f.name} cannot consume {g.name}'s {g.out_kind}")
        glue = lambda inst, sol: sol
    elif glue_kind is not None:
        if glue_kind[0] not in ("any", g.out_kind) or glue_kind[1] not in ("any", f.in_kind):
            raise KindMismatch(f"glue {glue_kind} does not fit {f.name} * {g.name}")

    def solve(inst, oracle: Oracle) -> StarResult:
        inner = g.solve(inst, oracle)
        glued = glue(inst, inner)
        return StarResult(inner, glued, f.solve(glued, oracle))

    return Problem(f"{f.name} * {g.name}", solve, g.in_kind, f.out_kind)


def parallelize(f: Problem, width: int) -> Problem:
    """Finite-width parallelization: a tuple of ``width`` instances, solved componentwise."""
    if width < 1:
        raise ValueError("width must be >= 1")

    def solve(insts, oracle: Oracle) -> tuple:
        insts = tuple(insts)
        if len(insts) != width:
            raise ValueError(f"expected {width} instances, got {len(insts)}")
        return tuple(f.solve(inst, oracle) for inst in insts)

    return Problem(f"{f.name}^{width}", solve, f.in_kind, f.out_kind)


def lpo_hat_composition(spec: PredicateSpec, width: int, oracle: Oracle) -> list[int]:
    """[A(n)] for n < width through two layers of LPO.

    Inner LPO: does x have a witness?  Outer LPO: is there an x without one?
    """

    def witness_free(n: int, x: int) -> int:
        inner = BinarySeq(lambda y: int(spec.t(x, y, n) == 0), spec.witness_bound(n, x))
        return int(_lpo(inner, oracle))

    outer_insts = []
    for n in range(width):
        fp = spec.least_failure(n)
        outer_insts.append(BinarySeq(lambda x, n=n: witness_free(n, x), 0 if fp is None else fp))
    return [int(b) for b in parallelize(LPO, width).solve(outer_insts, oracle)]


# --------------------------------------------------------------------------
# Cantor-set coding of [-1, 1]^N into [-1, 1]


def _block(b: int) -> tuple[int, int, int]:
    """Block b carries coordinate j at scale s in s + 2 bits."""
    j, s0 = unpair(b)
    s = s0 + 1
    return j, s, s + 2


class CantorCode:
    """Codes points of [-1, 1]^N as points of the middle-thirds Cantor set.

    Block (j, s) holds floor(2**s * approx(y_j, s)) + 2**s + 1 in s + 2 bits;
    blocks are laid out in pairing order, bits become ternary digits 0/2.
    Equal code prefixes force equal quantized coordinates, so a cluster
    point of the codes decodes to a cluster point in the product metric.
    """

    def __init__(self, src: CoordStream):
        self.src = src
        self._starts = [0]
        self._bits: dict[tuple[int, int], list[int]] = {}

    def _blocks_for(self, nbits: int) -> int:
        """Number of blocks needed to cover the first nbits bits."""
        while self._starts[-1] < nbits:
            _, _, w = _block(len(self._starts) - 1)
            self._starts.append(self._starts[-1] + w)
        return next(b for b, st in enumerate(self._starts) if st >= nbits)

    def block_span(self, b: int) -> tuple[int, int]:
        self._blocks_for(0)
        while len(self._starts) <= b + 1:
            _, _, w = _block(len(self._starts) - 1)
            self._starts.append(self._starts[-1] + w)
        return self._starts[b], self._starts[b + 1]

    def bits(self, i: int, nbits: int) -> list[int]:
        nb = self._blocks_for(nbits)
        have = self._bits.setdefault((i, 0), [])
        done = len(self._bits.setdefault((i, 1), []))
        for b in range(done, nb):
            j, s, w = _block(b)
            q = (self.src.approx(j, i, s) * (1 << s)).__floor__()
            off = q + (1 << s) + 1
            if not 0 <= off < (1 << w):
                raise ValueError(f"coordinate {j} of item {i} leaves [-1, 1]")
            have.extend((off >> (w - 1 - t)) & 1 for t in range(w))
            self._bits[(i, 1)].append(b)
        return have[:nbits]

    @staticmethod
    def digits_for(k: int) -> int:
        """Ternary digits M with 2 * 3**-M <= 2**-k."""
        M, p = 0, 1
        while p < (1 << (k + 1)):
            M += 1
            p *= 3
        return M

    def approx(self, i: int, k: int) -> Fraction:
        """Rational within 2**-k of the code of item i, mapped to [-1, 1] by u -> 2u - 1."""
        M = self.digits_for(k)
        acc = 0
        for d in self.bits(i, M):
            acc = acc * 3 + 2 * d
        return 2 * Fraction(acc, 3 ** M) - 1

    def stream(self) -> CoordStream:
        cert = None
        if self.src.certificate is not None:
            src_cert = self.src.certificate

            def settle(K: int, prec: int = 0) -> Periodic:
                nb = self._blocks_for(self.digits_for(prec))
                blocks = [_block(b) for b in range(nb)] or [(0, 1, 3)]
                return src_cert.settle(max(j for j, _, _ in blocks) + 1, max(s for _, s, _ in blocks))

            cert = SeqCertificate(settle, lambda r: 0)
        return CoordStream(lambda j, i, k: self.approx(i, k), cert, dims=1)

    def decode(self, u: CReal) -> "DecodedCluster":
        return DecodedCluster(self, u)


class DecodedCluster:
    """Cluster point in [-1, 1]^N read back from a cluster point of the codes."""

    def __init__(self, code: CantorCode, v: CReal):
        self.code = code
        self.v = v
        self._cache: dict[int, CReal] = {}

    def _digits(self, E: int) -> list[int]:
        # u = (v + 1) / 2 lies in the Cantor set; an error below 3**-E / 2 fixes E digits
        p = (3 ** E).bit_length() + 1
        a = (self.v.approx(p + 1) + 1) / 2
        out = []
        left = Fraction(0)
        for l in range(E):
            w = Fraction(1, 3 ** (l + 1))
            if a > left + Fraction(3, 2) * w:
                out.append(1)
                left += 2 * w
            else:
                out.append(0)
        return out

    def c(self, j: int) -> CReal:
        if j not in self._cache:

            def approx(k: int) -> Fraction:
                s = k + 1
                b = pair(j, s - 1)
                start, end = self.code.block_span(b)
                bits = self._digits(end)[start:end]
                off = 0
                for d in bits:
                    off = 2 * off + d
                return Fraction(off - (1 << s) - 1, 1 << s)

            self._cache[j] = CReal(approx, label=f"c_{j}")
        return self._cache[j]


def cluster_check(cs: CoordStream, c: Callable[[int], CReal], dims: int, k: int, oracle: Oracle) -> bool:
    """Ask the oracle whether infinitely many items lie within 2**-k of c on coordinates < dims."""
    accept = pow2(-k) - pow2(-(k + 2))
    target = [c(j).approx(k + 3) for j in range(dims)]
    p = lambda i: all(abs(cs.approx(j, i, k + 3) - target[j]) <= accept for j in range(dims))
    cert = cs.certificate.settle(dims, k + 3) if (oracle.certified and cs.certificate) else None
    return oracle.infinitely_often(p, cert) is Answer.YES


# --------------------------------------------------------------------------
# reductions


@dataclass
class Reduction:
    name: str
    source: Problem
    target: Problem
    pre: Callable[[Any], Any]
    post: Callable[[Any, Any], Any]
    check: Callable[[Any, Any, int, Oracle], bool]


@dataclass
class ReductionReport:
    chain: str
    solution: Any
    valid: bool
    details: dict = field(default_factory=dict)


def run_reduction(r: Reduction, inst, oracle: Oracle, precision: int = 8) -> ReductionReport:
    try:
        inner = r.target.solve(r.pre(inst), oracle)
        sol = r.post(inst, inner)
        valid = r.check(inst, sol, precision, oracle)
    except OracleUnknown as e:
        e.trace = [f"chain {r.name}"] + list(e.trace)
        raise
    return ReductionReport(r.name, sol, bool(valid), {"source": r.source.name, "target": r.target.name})


def _rev_target(horizon: int, certified: bool) -> Problem:
    def glue(cs: CoordStream, cert: ClusterCertificate) -> MonotoneInstance:
        tail = cs.certificate.tail_index if (certified and cs.certificate is not None) else None
        return norm_instance(cert, tail, horizon)

    return star(MCT, BWT_RN, glue, glue_kind=("real-sequence", "real-sequence"))


def _rev_pre(xs: BoundedSeq) -> CoordStream:
    return coord_stream(xs if xs.bound == 1 else rescaled(xs, 1 / Fraction(xs.bound)))


def _rev_post(xs: BoundedSeq, res: StarResult):
    point = assemble(res.inner, res.glued, res.outer, Fraction(1))
    B = Fraction(xs.bound)
    if B == 1:
        return point
    from .exact import L2Point, ceil_log2

    return L2Point(lambda k: point.stage(k + ceil_log2(B)).scale(B), B)


def _rev_check(xs: BoundedSeq, point, k: int, oracle: Oracle) -> bool:
    return verify_cluster(xs, point, k, 1000)


def rev_chain(oracle: Optional[Oracle] = None) -> Reduction:
    oracle = oracle or Oracle()
    target = _rev_target(oracle.budget.horizon, oracle.certified)
    return Reduction("rev-chain", BWT_WEAK, target, _rev_pre, _rev_post, _rev_check)


def _fwd_post(inst: Lim2Instance, point) -> Callable[[int], int]:
    return lambda n: 1 - extract_g(point, n)


def _fwd_check(inst: Lim2Instance, sol, k: int, oracle: Oracle) -> bool:
    direct = _lim2(inst, oracle)
    return all(sol(n) == direct(n) == int(decide_A(inst.spec, n)) for n in range(inst.width))


def fwd_chain(oracle: Optional[Oracle] = None) -> Reduction:
    return Reduction("fwd-chain", LIM2, BWT_WEAK, lambda inst: build_sequence(inst.spec).xs, _fwd_post, _fwd_check)


def _collapse_check(cs: CoordStream, decoded: DecodedCluster, k: int, oracle: Oracle) -> bool:
    dims = cs.dims if cs.dims is not None else 4
    return cluster_check(cs, decoded.c, min(dims, 4), k, oracle)


class _CollapsePre:
    def __call__(self, cs: CoordStream) -> CoordStream:
        self.code = CantorCode(cs)
        return self.code.stream()


def prod_collapse(oracle: Optional[Oracle] = None) -> Reduction:
    pre = _CollapsePre()
    return Reduction(
        "prod-collapse", BWT_RN, BWT_R, pre, lambda cs, u: pre.code.decode(u), _collapse_check
    )


CHAINS = {"rev-chain": rev_chain, "fwd-chain": fwd_chain, "prod-collapse": prod_collapse}


# --------------------------------------------------------------------------
# built-in instance corpus


def sequence_corpus() -> list[tuple[str, BoundedSeq]]:
    from .families import all_families

    out = [(f"forward:{s.name}", build_sequence(s).xs) for s in all_families()]
    out.append(("unit-vectors", unit_vectors()))
    out.append(("constant", constant_sequence(FinVec([Fraction(1, 2), Fraction(-1, 3), 0, Fraction(1, 5)]))))
    out.append(("alternating", eventually_periodic([FinVec([1]), FinVec([0, 1])], 0, 2, label="alt")))
    out.append(("scaled-constant", constant_sequence(FinVec([0, 2]))))
    return out


def instance_corpus(chain: str) -> list[tuple[str, Any]]:
    from .families import all_families

    if chain == "fwd-chain":
        return [(s.name, Lim2Instance(s)) for s in all_families()]
    seqs = sequence_corpus()
    if chain == "rev-chain":
        return seqs
    if chain == "prod-collapse":
        return [(name, coord_stream(xs)) for name, xs in seqs if xs.bound <= 1]
    raise KeyError(f"unknown chain {chain!r}")
