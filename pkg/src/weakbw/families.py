"""The built-in certified predicate families, stored in the predicate file format."""
from __future__ import annotations

from .dsl import PredicateSpec, parse_predicate

THRESHOLD_N0 = 5

FAMILY_TEXT = {
    # every (x, y) is a witness
    "always": "0\nbound: 0\nfailure: (none)*\ntruth: (1)*\n",
    # no witness ever; x = 0 already fails
    "never": "1\nbound: 0\nfailure: (0)*\ntruth: (0)*\n",
    # y = n/2 witnesses every x exactly when n is even
    "parity": "(2 * y -. n) + (n -. 2 * y)\nbound: n\nfailure: (none, 0)*\ntruth: (10)*\n",
    # A(n) iff n < 5
    "threshold": (
        f"ifz({THRESHOLD_N0} -. n, 1, 0)\nbound: 0\n"
        f"failure: {'none, ' * THRESHOLD_N0}(0)*\ntruth: {'1' * THRESHOLD_N0}(0)*\n"
    ),
    # t = 0 iff y = x*x
    "square": "(y -. x * x) + (x * x -. y)\nbound: x * x\nfailure: (none)*\ntruth: (1)*\n",
}

FAMILY_NAMES = tuple(FAMILY_TEXT)


def family(name: str) -> PredicateSpec:
    try:
        text = FAMILY_TEXT[name]
    except KeyError:
        raise KeyError(f"unknown family {name!r}; choose from {', '.join(FAMILY_NAMES)}") from None
    return parse_predicate(text, name=name)


def all_families() -> list[PredicateSpec]:
    return [family(name) for name in FAMILY_NAMES]
