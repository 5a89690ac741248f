"""Continued-fraction frequencies.

A frequency ``alpha = [0; a1, a2, ...]`` is given as text, either in bracket
form with a parenthesised period (``"[0;1,2,(3,4)]"``) or as a pure period
(``"per:1,2"``).  ``"trunc:1,2,3"`` gives a finite list of quotients for
experiments; anything computed from it is labelled truncated.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .errors import CFSyntaxError, InvalidQuotient, TruncationExceeded, UnsupportedAperiodic

_INT = r"-?\d+"
_BRACKET = re.compile(r"^\[\s*0\s*;(?P<body>.*)\]$")
_PERIOD_TAIL = re.compile(r"^(?P<pre>.*?)\(\s*(?P<per>[^()]*)\s*\)\s*$")


class Convergent(NamedTuple):
    k: int
    p: int
    q: int


@dataclass(frozen=True)
class ContinuedFraction:
    preperiod: tuple[int, ...]
    period: tuple[int, ...]
    truncated: bool = False

    def __post_init__(self):
        for a in self.preperiod + self.period:
            if a < 1:
                raise InvalidQuotient(f"partial quotients must be >= 1, got {a}")
        if not self.period and not self.truncated:
            raise UnsupportedAperiodic("an eventually periodic expansion is required")
        if self.truncated and not self.preperiod:
            raise CFSyntaxError("truncated expansion needs at least one quotient")

    @property
    def M(self) -> int:
        return max(self.preperiod + self.period)

    def quotient(self, i: int) -> int:
        """Return a_i (1-based)."""
        if i < 1:
            raise IndexError("quotients are indexed from 1")
        n = len(self.preperiod)
        if i <= n:
            return self.preperiod[i - 1]
        if not self.period:
            raise TruncationExceeded(f"truncated expansion has only {n} quotients, a_{i} requested")
        return self.period[(i - n - 1) % len(self.period)]

    def quotients(self, n: int) -> tuple[int, ...]:
        """Return (a_1, ..., a_n)."""
        return tuple(self.quotient(i) for i in range(1, n + 1))

    def available(self, n: int) -> bool:
        return bool(self.period) or n <= len(self.preperiod)

    def spec(self) -> str:
        """Canonical text form, accepted by :func:`parse_cf`."""
        if self.truncated:
            return "trunc:" + ",".join(map(str, self.preperiod))
        if not self.preperiod:
            return "per:" + ",".join(map(str, self.period))
        pre = ",".join(map(str, self.preperiod))
        return f"[0;{pre},({','.join(map(str, self.period))})]"

    def value(self, bits: int = 256) -> Fraction:
        """Rational approximation of alpha with error below 2**-bits."""
        if self.truncated:
            k = len(self.preperiod)
            c = convergent(self, k)
            return Fraction(c.p, c.q)
        k = 1
        while True:
            c = convergent(self, k)
            # |alpha - p_k/q_k| < 1/q_k^2
            if c.q.bit_length() * 2 > bits + 2:
                return Fraction(c.p, c.q)
            k += 1

    def __str__(self):
        return self.spec()


def _parse_ints(text: str) -> tuple[int, ...]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    out = []
    for s in items:
        if not re.fullmatch(_INT, s):
            raise CFSyntaxError(f"bad partial quotient {s!r}")
        out.append(int(s))
    return tuple(out)


def _check(values):
    for a in values:
        if a < 1:
            raise InvalidQuotient(f"partial quotients must be >= 1, got {a}")


def parse_cf(spec: str) -> ContinuedFraction:
    """Parse a frequency specification.

    >>> parse_cf("[0;1,2,(3,4)]")
    ContinuedFraction(preperiod=(1, 2), period=(3, 4), truncated=False)
    """
    text = spec.strip()
    if text.startswith("per:"):
        period = _parse_ints(text[4:])
        if not period:
            raise UnsupportedAperiodic("empty period")
        _check(period)
        return ContinuedFraction((), period)
    if text.startswith("trunc:"):
        quotients = _parse_ints(text[6:])
        _check(quotients)
        return ContinuedFraction(quotients, (), truncated=True)
    m = _BRACKET.match(text)
    if not m:
        raise CFSyntaxError(f"cannot parse frequency {spec!r}")
    body = m.group("body").strip()
    tail = _PERIOD_TAIL.match(body)
    if tail:
        pre_text = tail.group("pre").strip().rstrip(",")
        preperiod = _parse_ints(pre_text)
        period = _parse_ints(tail.group("per"))
        _check(preperiod + period)
        if not period:
            raise UnsupportedAperiodic("empty period")
        return ContinuedFraction(preperiod, period)
    if "(" in body or ")" in body:
        raise CFSyntaxError(f"malformed period in {spec!r}")
    quotients = _parse_ints(body)
    _check(quotients)
    raise UnsupportedAperiodic(f"{spec!r} has no period; use trunc: for a finite expansion")


def convergent(cf: ContinuedFraction, k: int) -> Convergent:
    """Exact convergent p_k/q_k, k >= -1."""
    if k < -1:
        raise ValueError("k must be >= -1")
    p_prev, p = 1, 0
    q_prev, q = 0, 1
    if k == -1:
        return Convergent(-1, p_prev, q_prev)
    for i in range(1, k + 1):
        a = cf.quotient(i)
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
    return Convergent(k, p, q)


def growth_K(cf: ContinuedFraction) -> float:
    """liminf (a_1...a_k)^(1/k): the geometric mean of the period."""
    values = cf.period if cf.period else cf.preperiod
    return math.exp(math.fsum(math.log(a) for a in values) / len(values))
