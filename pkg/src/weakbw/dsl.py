"""Terms t(x, y, n) over naturals and the predicates ``A(n) = forall x exists y t(x,y,n) = 0``.

Grammar::

    expr  := prod (('+' | '-.') prod)*
    prod  := atom ('*' atom)*
    atom  := NAT | 'x' | 'y' | 'n' | 'ifz' '(' expr ',' expr ',' expr ')' | '(' expr ')'

``-.`` is truncated subtraction; ``ifz(c, a, b)`` is ``a`` if ``c = 0`` else ``b``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

VARIABLES = ("x", "y", "n")


# --------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Const:
    value: int


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # '+', '*', '-.'
    left: "Term"
    right: "Term"


@dataclass(frozen=True)
class Ifz:
    cond: "Term"
    zero: "Term"
    other: "Term"


Term = Union[Const, Var, BinOp, Ifz]


class TermSyntaxError(ValueError):
    def __init__(self, msg: str, offset: int):
        super().__init__(f"{msg} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(TermSyntaxError):
    pass


# --------------------------------------------------------------------------
# parsing

_TOKEN_RE = re.compile(r"\s*(?:(\d+)|(-\.)|([A-Za-z_][A-Za-z_0-9]*)|(\S))")


def _tokenize(text: str, allowed: tuple[str, ...]):
    pos = 0
    toks = []
    while True:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastindex is None:
            break
        start = m.start(m.lastindex)
        num, monus, ident, other = m.groups()
        if num is not None:
            toks.append(("num", int(num), start))
        elif monus is not None:
            toks.append(("op", "-.", start))
        elif ident is not None:
            if ident == "ifz":
                toks.append(("ifz", ident, start))
            elif ident in allowed:
                toks.append(("var", ident, start))
            else:
                raise UnknownIdentifier(f"unknown identifier {ident!r}", start)
        elif other in "+*(),":
            toks.append(("op", other, start))
        else:
            raise TermSyntaxError(f"unexpected character {other!r}", start)
        pos = m.end()
    toks.append(("eof", None, len(text)))
    return toks


class _Parser:
    def __init__(self, text: str, allowed: tuple[str, ...]):
        self.toks = _tokenize(text, allowed)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.take()
        if val != value:
            what = "end of input" if kind == "eof" else repr(val)
            raise TermSyntaxError(f"expected {value!r}, found {what}", pos)

    def expr(self) -> Term:
        left = self.prod()
        while self.peek()[1] in ("+", "-.") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.prod())
        return left

    def prod(self) -> Term:
        left = self.atom()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.take()
            left = BinOp("*", left, self.atom())
        return left

    def atom(self) -> Term:
        kind, val, pos = self.take()
        if kind == "num":
            return Const(val)
        if kind == "var":
            return Var(val)
        if kind == "ifz":
            self.expect("(")
            c = self.expr()
            self.expect(",")
            a = self.expr()
            self.expect(",")
            b = self.expr()
            self.expect(")")
            return Ifz(c, a, b)
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect(")")
            return e
        what = "end of input" if kind == "eof" else repr(val)
        raise TermSyntaxError(f"expected a term, found {what}", pos)


def parse(text: str, allowed: tuple[str, ...] = VARIABLES) -> Term:
    p = _Parser(text, allowed)
    t = p.expr()
    kind, val, pos = p.peek()
    if kind != "eof":
        raise TermSyntaxError(f"unexpected {val!r}", pos)
    return t


# --------------------------------------------------------------------------
# printing

_PREC = {"+": 1, "-.": 1, "*": 2}


def to_text(t: Term) -> str:
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Ifz):
        return f"ifz({to_text(t.cond)}, {to_text(t.zero)}, {to_text(t.other)})"
    p = _PREC[t.op]
    left = to_text(t.left)
    if isinstance(t.left, BinOp) and _PREC[t.left.op] < p:
        left = f"({left})"
    right = to_text(t.right)
    # left association: a right operand at the same level needs parentheses
    if isinstance(t.right, BinOp) and _PREC[t.right.op] <= p:
        right = f"({right})"
    return f"{left} {t.op} {right}"


# --------------------------------------------------------------------------
# evaluation


def evaluate(t: Term, x: int, y: int, n: int) -> int:
    """Reference tree-walking evaluator."""
    if isinstance(t, Const):
        return t.value
    if isinstance(t, Var):
        return {"x": x, "y": y, "n": n}[t.name]
    if isinstance(t, Ifz):
        if evaluate(t.cond, x, y, n) == 0:
            return evaluate(t.zero, x, y, n)
        return evaluate(t.other, x, y, n)
    a = evaluate(t.left, x, y, n)
    b = evaluate(t.right, x, y, n)
    if t.op == "+":
        return a + b
    if t.op == "*":
        return a * b
    return a - b if a > b else 0


def _py(t: Term) -> str:
    if isinstance(t, Const):
        return str(t.value)
    if isinstance(t, Var):
        return t.name
    if isinstance(t, Ifz):
        return f"(({_py(t.zero)}) if ({_py(t.cond)}) == 0 else ({_py(t.other)}))"
    if t.op == "-.":
        return f"_monus({_py(t.left)}, {_py(t.right)})"
    return f"({_py(t.left)} {t.op} {_py(t.right)})"


def _monus(a: int, b: int) -> int:
    return a - b if a > b else 0


def compile_term(t: Term) -> Callable[[int, int, int], int]:
    """Compile to a Python closure; agrees with :func:`evaluate` everywhere."""
    src = f"lambda x, y, n: {_py(t)}"
    return eval(src, {"_monus": _monus, "__builtins__": {}})  # noqa: S307 - source built from the AST


# --------------------------------------------------------------------------
# predicates with certification annotations


class UncertifiedSpec(ValueError):
    """The spec lacks the annotations a certified answer needs."""


class AnnotationError(ValueError):
    """An annotation was contradicted by direct search."""


def _parse_cyclic(text: str, item, bits: bool = False) -> tuple[list, list]:
    """``"a,b,(c,d)*"`` -> (prefix, cycle); bitstrings are written without commas."""
    text = text.strip()
    cycle: list = []
    m = re.search(r"\(([^()]*)\)\*\s*$", text)
    if m:
        cycle = [item(s) for s in _split_items(m.group(1), bits)]
        if not cycle:
            raise ValueError("empty repeating group")
        text = text[: m.start()]
    prefix = [item(s) for s in _split_items(text, bits)]
    return prefix, cycle


def _split_items(s: str, bits: bool) -> list[str]:
    s = s.strip().strip(",").strip()
    if not s:
        return []
    if bits:
        if not re.fullmatch(r"[01]+", s):
            raise ValueError(f"not a bitstring: {s!r}")
        return list(s)
    return [p.strip() for p in s.split(",") if p.strip()]


class CyclicTable:
    """A finite prefix followed by an optional repeating block."""

    def __init__(self, prefix: list, cycle: list):
        self.prefix = list(prefix)
        self.cycle = list(cycle)

    def __call__(self, n: int):
        if n < len(self.prefix):
            return self.prefix[n]
        if not self.cycle:
            raise UncertifiedSpec(f"annotation table ends before n={n}")
        return self.cycle[(n - len(self.prefix)) % len(self.cycle)]

    def covers(self, n: int) -> bool:
        return n < len(self.prefix) or bool(self.cycle)


def _failure_item(s: str) -> Optional[int]:
    s = s.strip().lower()
    return None if s == "none" else int(s)


@dataclass
class PredicateSpec:
    """A term plus optional claims that make its jump questions decidable.

    ``witness_bound(n, x)``: a witness for x exists iff one exists below
    or at this bound.  ``failure_point(n)``: least x without a witness, or
    None if A(n) holds.  ``truth(n)``: A(n) itself.
    """

    term: Term
    witness_bound: Optional[Callable[[int, int], int]] = None
    failure_point: Optional[Callable[[int], Optional[int]]] = None
    truth: Optional[Callable[[int], bool]] = None
    name: str = ""
    text: str = ""
    _fn: Callable = field(default=None, repr=False)
    # (n, x) -> [searched_below, least_witness_or_None]
    _witness_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self._fn is None:
            self._fn = compile_term(self.term)

    def t(self, x: int, y: int, n: int) -> int:
        return self._fn(x, y, n)

    @property
    def certified(self) -> bool:
        return self.witness_bound is not None and (
            self.failure_point is not None or self.truth is not None
        )

    def has_witness(self, n: int, x: int, below: int) -> bool:
        """Is there y < below with t(x, y, n) = 0?  (bounded search, resumable)"""
        entry = self._witness_cache.get((n, x))
        if entry is None:
            entry = self._witness_cache[(n, x)] = [0, None]
        if entry[1] is not None:
            return entry[1] < below
        fn = self._fn
        for y in range(entry[0], below):
            if fn(x, y, n) == 0:
                entry[1] = y
                return True
        entry[0] = max(entry[0], below)
        return False

    def least_failure(self, n: int) -> Optional[int]:
        """Least x without a witness (None when A(n)), from the annotations."""
        if self.failure_point is not None:
            return self.failure_point(n)
        if self.truth is None or self.witness_bound is None:
            raise UncertifiedSpec(f"{self.name or 'spec'}: no failure point for n={n}")
        if self.truth(n):
            return None
        x = 0
        while self.has_witness(n, x, self.witness_bound(n, x) + 1):
            x += 1
        return x


def decide_A(spec: PredicateSpec, n: int) -> bool:
    """Ground truth of A(n) from the annotations (never by unbounded search)."""
    if spec.truth is not None:
        return bool(spec.truth(n))
    if spec.witness_bound is None or spec.failure_point is None:
        raise UncertifiedSpec(f"{spec.name or 'spec'}: cannot decide A({n})")
    # local import: oracle builds on this module
    from .oracle import Answer, Certified, exists_oracle

    fp = spec.failure_point(n)
    if fp is None:
        return True
    for x in range(fp):
        wb = spec.witness_bound(n, x)
        ans = exists_oracle(lambda y: spec.t(x, y, n) == 0, Certified(wb))
        if ans is not Answer.YES:
            raise AnnotationError(f"x={x} < failure point {fp} has no witness up to {wb} (n={n})")
    wb = spec.witness_bound(n, fp)
    if exists_oracle(lambda y: spec.t(fp, y, n) == 0, Certified(wb)) is Answer.YES:
        raise AnnotationError(f"failure point {fp} has a witness (n={n})")
    return False


def check_annotations(spec: PredicateSpec, nmax: int, xmax: int, horizon: int) -> None:
    """Sampled soundness check of the annotations; raises AnnotationError."""
    for n in range(nmax):
        if spec.witness_bound is not None:
            for x in range(xmax):
                wb = spec.witness_bound(n, x)
                bounded = spec.has_witness(n, x, wb + 1)
                if bounded != spec.has_witness(n, x, max(horizon, wb + 1)):
                    raise AnnotationError(f"witness bound unsound at n={n}, x={x}")
        fp = spec.failure_point(n) if spec.failure_point is not None else "absent"
        if spec.truth is not None and fp != "absent":
            if spec.truth(n) != (fp is None):
                raise AnnotationError(f"truth and failure point disagree at n={n}")
        if fp is None:
            for x in range(xmax):
                if not spec.has_witness(n, x, horizon):
                    raise AnnotationError(f"x={x} lacks a witness below {horizon} though n={n} has no failure")
        elif fp != "absent":
            if spec.has_witness(n, fp, horizon):
                raise AnnotationError(f"failure point {fp} has a witness below {horizon} (n={n})")
            for x in range(fp):
                if not spec.has_witness(n, x, horizon):
                    raise AnnotationError(f"x={x} below failure point lacks a witness (n={n})")


# --------------------------------------------------------------------------
# predicate files


def parse_predicate(text: str, name: str = "") -> PredicateSpec:
    """Read the predicate file format.

    Line 1 is the term; optional lines ``bound: <term in n, x>``,
    ``failure: <comma list of naturals or none>`` and ``truth: <bitstring>``.
    A trailing ``(...)*`` group in the last two repeats forever.
    """
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise TermSyntaxError("empty predicate file", 0)
    term = parse(lines[0])
    wb = fp = truth = None
    for ln in lines[1:]:
        key, sep, value = ln.partition(":")
        key = key.strip().lower()
        if not sep:
            raise ValueError(f"malformed annotation line {ln!r}")
        if key == "bound":
            bt = compile_term(parse(value.strip(), allowed=("n", "x")))
            wb = lambda n, x, _b=bt: _b(x, 0, n)
        elif key == "failure":
            fp = CyclicTable(*_parse_cyclic(value, _failure_item))
        elif key == "truth":
            tt = CyclicTable(*_parse_cyclic(value, lambda s: s == "1", bits=True))
            truth = tt
        else:
            raise ValueError(f"unknown annotation {key!r}")
    return PredicateSpec(term, wb, fp, truth, name=name, text=text)


def load_predicate(path) -> PredicateSpec:
    from pathlib import Path

    p = Path(path)
    return parse_predicate(p.read_text(encoding="utf-8"), name=p.stem)
