"""High-precision helpers around gmpy2."""

import math

import gmpy2
from gmpy2 import mpfr

LOG10_2 = math.log10(2)


def digits(bits: int) -> int:
    """Decimal digits carried by a ``bits``-bit mantissa."""
    return int(bits * LOG10_2)


def working(bits: int):
    """Context manager setting the gmpy2 working precision."""
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def mp(value, bits: int):
    """Convert int/str/float/mpfr to an mpfr of ``bits`` precision."""
    if isinstance(value, str):
        return mpfr(value.strip(), bits)
    return mpfr(value, bits)


def to_decimal(x) -> str:
    """Full-precision decimal string that round-trips through :func:`mp`."""
    if gmpy2.is_infinite(x):
        return "inf" if x > 0 else "-inf"
    if gmpy2.is_nan(x):
        return "nan"
    if x == 0:
        return "-0" if gmpy2.is_signed(x) else "0"
    mant, exp, _ = x.digits(10)
    sign = ""
    if mant.startswith("-"):
        sign, mant = "-", mant[1:]
    mant = mant.rstrip("0") or "0"
    # x = 0.mant * 10**exp
    e = exp - 1
    head, tail = mant[0], mant[1:]
    body = f"{head}.{tail}" if tail else head
    return f"{sign}{body}e{e:+d}"


def required_bits(order: int, V: float, M: int = 1, base: int = 192) -> int:
    """Working precision for band endpoints at ``order`` and coupling ``V``.

    Lengths shrink by at most (V+8)(M+2)^3/4 per ladder rung; 64 guard bits.
    """
    per_rung = math.log2((float(V) + 8) * (M + 2) ** 3 / 4)
    return max(base, int(math.ceil((order + 1) * per_rung)) + 64)
