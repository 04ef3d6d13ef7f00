"""Command-line entry point: encode, cluster, extract, verify, roundtrip, reduce."""
from __future__ import annotations

import argparse
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .dsl import AnnotationError, PredicateSpec, TermSyntaxError, UncertifiedSpec, UnknownIdentifier, decide_A, load_predicate
from .exact import FinVec, PrecisionExceeded
from .families import FAMILY_NAMES, family
from .forward import build_sequence, extract_g
from .io import (
    DumpError,
    encode_records,
    header_record,
    load_point,
    load_sequence,
    point_record,
    trace_record,
    write_records,
)
from .oracle import Oracle, OracleBudget, OracleUnknown
from .reverse import coord_stream, eventually_periodic, verify_cluster, weak_cluster
from .weihrauch import CHAINS, Lim2Instance, instance_corpus, run_reduction

EXIT_OK, EXIT_MISMATCH, EXIT_UNKNOWN, EXIT_INPUT = 0, 2, 3, 4


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    precision: int
    horizon: int
    oracle: str
    seed: int
    predicate: Optional[str] = None
    family: Optional[str] = None
    input: Optional[str] = None
    point: Optional[str] = None
    output: Optional[str] = None
    imax: int = 16
    nmax: int = 16
    k: int = 8
    chain: Optional[str] = None
    instance: Optional[str] = None

    def __post_init__(self):
        if self.precision < 1:
            raise InputError("--precision must be >= 1")
        if self.horizon < 1:
            raise InputError("--horizon must be >= 1")

    def make_oracle(self) -> Oracle:
        return Oracle(self.oracle, OracleBudget(self.horizon))

    def load_spec(self) -> PredicateSpec:
        if self.family:
            return family(self.family)
        if self.predicate:
            return load_predicate(self.predicate)
        raise InputError("give --predicate FILE or --family NAME")


def _status(status: str, message: str = "", trace=None) -> dict:
    rec = {"type": "status", "status": status}
    if message:
        rec["message"] = message
    if trace:
        rec["trace"] = [str(t) for t in trace]
    return rec


# --------------------------------------------------------------------------
# commands


def cmd_encode(cfg: RunConfig) -> int:
    write_records(cfg.output, encode_records(cfg.load_spec(), cfg.imax, cfg.precision))
    return EXIT_OK


def cmd_cluster(cfg: RunConfig) -> int:
    xs = load_sequence(cfg.input).sequence()
    x = weak_cluster(xs, cfg.make_oracle())
    v = x.stage(cfg.precision)
    recs = [point_record(v, cfg.precision, x.norm_bound), trace_record(x.certificate.box_trace, x.certified)]
    write_records(cfg.output, recs)
    return EXIT_OK


def cmd_extract(cfg: RunConfig) -> int:
    x = load_point(cfg.point)
    write_records(cfg.output, [{"type": "extract", "n": n, "g": extract_g(x, n)} for n in range(cfg.nmax)])
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    xs = load_sequence(cfg.input).sequence()
    ok = verify_cluster(xs, load_point(cfg.point), cfg.k, cfg.horizon)
    write_records(cfg.output, [{"type": "verify", "k": cfg.k, "horizon": cfg.horizon, "ok": ok}])
    return EXIT_OK if ok else EXIT_MISMATCH


def roundtrip_records(spec: PredicateSpec, nmax: int, oracle: Oracle) -> tuple[list[dict], int]:
    x = weak_cluster(build_sequence(spec).xs, oracle)
    recs, first_bad = [], None
    for n in range(nmax):
        g = extract_g(x, n)
        truth = 0 if decide_A(spec, n) else 1
        recs.append({"type": "roundtrip", "n": n, "g": g, "truth": truth, "match": g == truth})
        if g != truth and first_bad is None:
            first_bad = n
    if first_bad is not None:
        recs.append(_status("mismatch", f"first mismatch at n={first_bad}"))
        return recs, EXIT_MISMATCH
    note = "" if x.certified else "staged oracle: values not certified"
    recs.append(_status("ok", note))
    return recs, EXIT_OK


def cmd_roundtrip(cfg: RunConfig) -> int:
    spec = cfg.load_spec()
    try:
        recs, code = roundtrip_records(spec, cfg.nmax, cfg.make_oracle())
    except OracleUnknown as e:
        write_records(cfg.output, [_status("unknown", str(e), e.trace)])
        return EXIT_UNKNOWN
    write_records(cfg.output, recs)
    return code


def _random_sequences(count: int, seed: int):
    rng = random.Random(seed)
    out = []
    for t in range(count):
        period = rng.randint(1, 3)
        start = rng.randint(0, 2)
        vecs = []
        for _ in range(start + period):
            dim = rng.randint(1, 4)
            coords = [Fraction(rng.randint(-4, 4), 8 * dim) for _ in range(dim)]
            vecs.append(FinVec(coords))
        out.append((f"random-{seed}-{t}", eventually_periodic(vecs, start, period, label=f"random{t}")))
    return out


def _reduce_instances(cfg: RunConfig):
    name = cfg.instance or "corpus"
    if name == "corpus":
        return instance_corpus(cfg.chain)
    if name.startswith("random:"):
        if cfg.chain == "fwd-chain":
            raise InputError("random instances are sequences; fwd-chain takes a predicate")
        seqs = _random_sequences(int(name.split(":", 1)[1]), cfg.seed)
        return seqs if cfg.chain == "rev-chain" else [(n, coord_stream(xs)) for n, xs in seqs]
    if name.startswith("family:"):
        spec = family(name.split(":", 1)[1])
    else:
        spec = None
    if cfg.chain == "fwd-chain":
        return [(name, Lim2Instance(spec or load_predicate(name)))]
    if spec is not None:
        xs = build_sequence(spec).xs
    else:
        xs = load_sequence(name).sequence()
    return [(name, xs if cfg.chain == "rev-chain" else coord_stream(xs))]


def cmd_reduce(cfg: RunConfig) -> int:
    if cfg.chain not in CHAINS:
        raise InputError(f"unknown chain {cfg.chain!r}; choose from {', '.join(CHAINS)}")
    oracle = cfg.make_oracle()
    recs, code = [], EXIT_OK
    for name, inst in _reduce_instances(cfg):
        try:
            rep = run_reduction(CHAINS[cfg.chain](oracle), inst, oracle, cfg.precision)
        except OracleUnknown as e:
            recs.append(_status("unknown", f"{name}: {e}", e.trace))
            code = max(code, EXIT_UNKNOWN) if code != EXIT_MISMATCH else code
            continue
        recs.append({"type": "reduce", "chain": cfg.chain, "instance": name, "valid": rep.valid, **rep.details})
        if not rep.valid:
            code = EXIT_MISMATCH
    recs.append(_status({EXIT_OK: "ok", EXIT_MISMATCH: "mismatch", EXIT_UNKNOWN: "unknown"}[code]))
    write_records(cfg.output, recs)
    return code


COMMANDS = {
    "encode": cmd_encode,
    "cluster": cmd_cluster,
    "extract": cmd_extract,
    "verify": cmd_verify,
    "roundtrip": cmd_roundtrip,
    "reduce": cmd_reduce,
}


# --------------------------------------------------------------------------
# argument parsing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--precision", type=int, default=12, help="precision exponent k (values to 2**-k)")
    common.add_argument("--horizon", type=int, default=10_000, help="staged oracle search horizon")
    common.add_argument("--oracle", choices=("certified", "staged"), default="certified")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized corpus generation")
    common.add_argument("-o", "--output", default=None, help="output file (default stdout)")

    pred = argparse.ArgumentParser(add_help=False)
    src = pred.add_mutually_exclusive_group()
    src.add_argument("--predicate", help="predicate file")
    src.add_argument("--family", choices=FAMILY_NAMES, help="built-in predicate family")

    p = argparse.ArgumentParser(prog="weakbw", description="Weak Bolzano-Weierstrass toolkit for l2.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("encode", parents=[common, pred], help="dump stages of the encoded sequence")
    s.add_argument("--imax", type=int, default=16)

    s = sub.add_parser("cluster", parents=[common], help="weak cluster point of a dumped sequence")
    s.add_argument("--input", required=True)

    s = sub.add_parser("extract", parents=[common], help="read g(0..N-1) off a cluster point")
    s.add_argument("--point", required=True)
    s.add_argument("--nmax", type=int, default=16)

    s = sub.add_parser("verify", parents=[common], help="finite check of the cluster property")
    s.add_argument("--input", required=True)
    s.add_argument("--point", required=True)
    s.add_argument("--k", type=int, default=8)

    s = sub.add_parser("roundtrip", parents=[common, pred], help="encode, cluster, extract, compare")
    s.add_argument("--nmax", type=int, default=16)

    s = sub.add_parser("reduce", parents=[common], help="run a Weihrauch reduction chain")
    s.add_argument("--chain", required=True, choices=tuple(CHAINS))
    s.add_argument(
        "--instance",
        default="corpus",
        help="'corpus', 'random:N', 'family:NAME', a predicate file (fwd-chain) or a sequence dump",
    )
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__})
        return COMMANDS[cfg.command](cfg)
    except OracleUnknown as e:
        write_records(None, [_status("unknown", str(e), e.trace)])
        return EXIT_UNKNOWN
    except (InputError, DumpError, TermSyntaxError, UnknownIdentifier, UncertifiedSpec,
            AnnotationError, PrecisionExceeded, KeyError, ValueError, OSError) as e:
        print(f"weakbw: error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
