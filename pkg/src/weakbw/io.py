"""JSON-lines dump formats and their schemas."""
from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Optional

import jsonschema

from .dsl import PredicateSpec, parse_predicate
from .exact import BoundedSeq, FinVec, L2Point, PrecisionExceeded, format_rat, parse_rat
from .forward import build_sequence
from .reverse import eventually_periodic

RAT = {"type": "string", "pattern": r"^-?\d+(/[1-9]\d*)?$"}
NAT = {"type": "integer", "minimum": 0}

SCHEMAS = {
    "header": {
        "type": "object",
        "required": ["type", "imax", "precision", "predicate", "tail", "bound"],
        "properties": {
            "type": {"const": "header"},
            "imax": NAT,
            "precision": {"type": "integer", "minimum": 1},
            "predicate": {"type": ["string", "null"]},
            "tail": {
                "oneOf": [
                    {"type": "null"},
                    {
                        "type": "object",
                        "required": ["start", "period"],
                        "properties": {"start": NAT, "period": {"type": "integer", "minimum": 1}},
                        "additionalProperties": False,
                    },
                ]
            },
            "bound": RAT,
        },
        "additionalProperties": False,
    },
    "point": {
        "type": "object",
        "required": ["type", "k", "coords", "normBound"],
        "properties": {
            "type": {"const": "point"},
            "i": {"oneOf": [NAT, {"type": "null"}]},
            "k": {"type": "integer", "minimum": 0},
            "coords": {"type": "array", "items": RAT},
            "normBound": RAT,
        },
        "additionalProperties": False,
    },
    "trace": {
        "type": "object",
        "required": ["type", "boxes"],
        "properties": {
            "type": {"const": "trace"},
            "certified": {"type": "boolean"},
            "boxes": {
                "type": "array",
                "items": {"type": "array", "prefixItems": [NAT, NAT, RAT], "minItems": 3, "maxItems": 3},
            },
        },
        "additionalProperties": False,
    },
    "roundtrip": {
        "type": "object",
        "required": ["type", "n", "g", "truth", "match"],
        "properties": {
            "type": {"const": "roundtrip"},
            "n": NAT,
            "g": {"enum": [0, 1]},
            "truth": {"enum": [0, 1]},
            "match": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "extract": {
        "type": "object",
        "required": ["type", "n", "g"],
        "properties": {"type": {"const": "extract"}, "n": NAT, "g": {"enum": [0, 1]}},
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "required": ["type", "k", "horizon", "ok"],
        "properties": {
            "type": {"const": "verify"},
            "k": NAT,
            "horizon": NAT,
            "ok": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
    "reduce": {
        "type": "object",
        "required": ["type", "chain", "instance", "valid"],
        "properties": {
            "type": {"const": "reduce"},
            "chain": {"enum": ["rev-chain", "fwd-chain", "prod-collapse"]},
            "instance": {"type": "string"},
            "valid": {"type": "boolean"},
            "source": {"type": "string"},
            "target": {"type": "string"},
        },
        "additionalProperties": False,
    },
    "status": {
        "type": "object",
        "required": ["type", "status"],
        "properties": {
            "type": {"const": "status"},
            "status": {"enum": ["ok", "mismatch", "unknown", "input-error"]},
            "message": {"type": "string"},
            "trace": {"type": "array", "items": {"type": "string"}},
        },
        "additionalProperties": False,
    },
}


class DumpError(ValueError):
    pass


def validate(record: dict) -> dict:
    kind = record.get("type")
    if kind not in SCHEMAS:
        raise DumpError(f"unknown record type {kind!r}")
    try:
        jsonschema.validate(record, SCHEMAS[kind])
    except jsonschema.ValidationError as e:
        raise DumpError(f"{kind} record: {e.message}") from None
    return record


def dumps(record: dict) -> str:
    return json.dumps(validate(record), sort_keys=True, separators=(",", ":"))


def write_records(path, records: Iterable[dict]) -> None:
    text = "".join(dumps(r) + "\n" for r in records)
    if path is None or str(path) == "-":
        import sys

        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def read_records(path) -> list[dict]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise DumpError(f"cannot read {path}: {e.strerror}") from None
    out = []
    for no, ln in enumerate(lines, 1):
        if not ln.strip():
            continue
        try:
            rec = json.loads(ln)
        except json.JSONDecodeError as e:
            raise DumpError(f"{path}:{no}: {e.msg}") from None
        out.append(validate(rec))
    return out


# --------------------------------------------------------------------------
# points


def point_record(v: FinVec, k: int, norm_bound, i: Optional[int] = None) -> dict:
    return {"type": "point", "i": i, "k": k, "coords": v.to_json(), "normBound": format_rat(Fraction(norm_bound))}


def point_from_record(rec: dict) -> L2Point:
    """The stored stage serves every k up to the stored precision."""
    v = FinVec.from_json(rec["coords"])
    K = rec["k"]

    def stage(k: int) -> FinVec:
        if k > K:
            raise PrecisionExceeded(f"point stored at precision {K}, asked for {k}")
        return v

    return L2Point(stage, parse_rat(rec["normBound"]), label=f"dump@{K}")


def trace_record(boxes, certified: bool) -> dict:
    return {
        "type": "trace",
        "certified": certified,
        "boxes": [[j, s, format_rat(c)] for j, s, c in boxes],
    }


def load_point(path) -> L2Point:
    recs = [r for r in read_records(path) if r["type"] == "point"]
    if len(recs) != 1:
        raise DumpError(f"{path}: expected exactly one point record, found {len(recs)}")
    return point_from_record(recs[0])


# --------------------------------------------------------------------------
# sequence dumps


def header_record(imax: int, precision: int, bound, predicate: Optional[str] = None, tail=None) -> dict:
    return {
        "type": "header",
        "imax": imax,
        "precision": precision,
        "predicate": predicate,
        "tail": None if tail is None else {"start": tail[0], "period": tail[1]},
        "bound": format_rat(Fraction(bound)),
    }


def encode_records(spec: PredicateSpec, imax: int, precision: int) -> list[dict]:
    xs = build_sequence(spec).xs
    recs = [header_record(imax, precision, xs.bound, predicate=spec.text)]
    for i in range(imax + 1):
        recs.append(point_record(xs.item(i).stage(precision), precision, xs.item(i).norm_bound, i))
    return recs


@dataclass
class SequenceDump:
    header: dict
    points: list[dict]
    spec: Optional[PredicateSpec] = None

    def sequence(self) -> BoundedSeq:
        """The infinite sequence the dump describes.

        With a predicate, the sequence is rebuilt from it (the stored points
        are checked against the rebuilt stages).  With a tail annotation,
        the stored vectors are taken as exact and repeated periodically.
        """
        if self.spec is not None:
            xs = build_sequence(self.spec).xs
            for rec in self.points:
                i, k = rec["i"], rec["k"]
                if i is not None and xs.item(i).stage(k).to_json() != FinVec.from_json(rec["coords"]).to_json():
                    raise DumpError(f"stored x_{i} does not match the predicate's stage {k}")
            return xs
        tail = self.header["tail"]
        if tail is None:
            raise DumpError("a dump needs a predicate or a tail annotation to describe a sequence")
        vecs = [FinVec.from_json(r["coords"]) for r in self.points]
        try:
            xs = eventually_periodic(vecs, tail["start"], tail["period"], label="dump")
        except ValueError as e:
            raise DumpError(str(e)) from None
        declared = parse_rat(self.header["bound"])
        if xs.bound > declared:
            raise DumpError(f"declared bound {self.header['bound']} is below the stored norms")
        xs.bound = declared
        return xs


def load_sequence(path) -> SequenceDump:
    recs = read_records(path)
    if not recs or recs[0]["type"] != "header":
        raise DumpError(f"{path}: first record must be a header")
    header = recs[0]
    points = [r for r in recs[1:] if r["type"] == "point"]
    if len(points) != header["imax"] + 1:
        raise DumpError(f"{path}: header announces {header['imax'] + 1} points, found {len(points)}")
    spec = parse_predicate(header["predicate"], name="dump") if header["predicate"] else None
    return SequenceDump(header, points, spec)
