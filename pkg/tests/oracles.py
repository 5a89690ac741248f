"""Independent reference computations used by the tests.

Nothing here touches the trace recursion: traces come from multiplying the
site matrices of the Sturmian potential directly.
"""

from fractions import Fraction
import math

import gmpy2
from gmpy2 import mpfr

from sturmband.cfrac import convergent


def sturm_potential(alpha: Fraction, n: int) -> int:
    """v_n / V for phase 0: 1 when n*alpha mod 1 lies in [1-alpha, 1)."""
    frac = (n * alpha) % 1
    return 1 if frac >= 1 - alpha else 0


def _mul(A, B):
    return [[A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]],
            [A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]]]


def _inv(A):
    # det = 1 for every matrix here
    return [[A[1][1], -A[0][1]], [-A[1][0], A[0][0]]]


def transfer_matrix(cf, k: int, x, V, bits: int = 192):
    """M_k(x) as the literal product over q_k sites (k >= -1)."""
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        x, V = mpfr(x), mpfr(V)
        if k == -1:
            return [[mpfr(1), -V], [mpfr(0), mpfr(1)]]
        if k == 0:
            return [[x, mpfr(-1)], [mpfr(1), mpfr(0)]]
        q = convergent(cf, k).q
        alpha = cf.value(bits=4 * q.bit_length() + 128)
        M = [[mpfr(1), mpfr(0)], [mpfr(0), mpfr(1)]]
        for n in range(1, q + 1):
            site = [[x - V * sturm_potential(alpha, n), mpfr(-1)], [mpfr(1), mpfr(0)]]
            M = _mul(site, M)
        return M


def guard_bits(cf, k: int, p: int, x, V) -> int:
    """Bits lost to cancellation: log2 of the entry bound of the full product."""
    sites = max(convergent(cf, max(k - 1, 0)).q, 1) + max(abs(p), 1) * convergent(cf, max(k, 0)).q
    return int(sites * math.log2(abs(float(x)) + float(V) + 3)) + 64


def literal_trace(cf, k: int, p: int, x, V, bits: int = 192):
    """tr M_{k-1}(x) M_k(x)^p from the literal products.

    The products are formed with ``bits`` plus enough guard bits to absorb
    the cancellation in the trace, so the result is good to ``bits``.
    """
    bits = bits + guard_bits(cf, k, p, x, V)
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        A = transfer_matrix(cf, k - 1, x, V, bits)
        B = transfer_matrix(cf, k, x, V, bits)
        if p < 0:
            B, p = _inv(B), -p
        M = A
        for _ in range(p):
            M = _mul(M, B)
        return M[0][0] + M[1][1]


def literal_traces(cf, k_max: int, powers, x, V, bits: int = 192) -> dict:
    """{(k, p): tr M_{k-1} M_k^p} for 0 <= k <= k_max, from one run over the sites.

    M_k is the product over sites 1..q_k, so every level is a prefix of the
    same product.
    """
    bits = bits + guard_bits(cf, k_max, max(abs(p) for p in powers), x, V)
    with gmpy2.context(gmpy2.get_context(), precision=bits):
        xm, Vm = mpfr(x), mpfr(V)
        mats = {-1: transfer_matrix(cf, -1, xm, Vm, bits), 0: transfer_matrix(cf, 0, xm, Vm, bits)}
        qs = {convergent(cf, k).q: k for k in range(1, k_max + 1)}
        q_max = convergent(cf, k_max).q
        alpha = cf.value(bits=4 * q_max.bit_length() + 128)
        M = [[mpfr(1), mpfr(0)], [mpfr(0), mpfr(1)]]
        for n in range(1, q_max + 1):
            site = [[xm - Vm * sturm_potential(alpha, n), mpfr(-1)], [mpfr(1), mpfr(0)]]
            M = _mul(site, M)
            if n in qs:
                mats[qs[n]] = M
        out = {}
        for k in range(0, k_max + 1):
            for p in powers:
                B = _inv(mats[k]) if p < 0 else mats[k]
                P = mats[k - 1]
                for _ in range(abs(p)):
                    P = _mul(P, B)
                out[(k, p)] = P[0][0] + P[1][1]
        return out


def fricke(x, y, z):
    return x * x + y * y + z * z - x * y * z - 4


def chebyshev_closed(p: int, t: float) -> float:
    """S_p(2 cos theta) = sin(p theta) / sin(theta) for |t| < 2."""
    theta = math.acos(t / 2)
    return math.sin(p * theta) / math.sin(theta)


def similarity_dimension(N: int, L: float) -> float:
    return math.log(N) / -math.log(L)
