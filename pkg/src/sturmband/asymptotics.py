"""Large-coupling constant f_*(alpha) and the s * ln V law.

For quotient a the 3x3 matrix

    R(a, x) = [[0,       x^(a-1), 0      ],
               [(a+1) x, 0,       a x    ],
               [a x,     0,       (a-1) x]]

is nonnegative and entrywise increasing in x.  For periodic alpha, f_* is
the x in (0, 1] at which the product over one period has Perron root 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bandtree import enumerate_bands
from .cfrac import ContinuedFraction
from .dimension import band_lengths, pre_dimension
from .errors import DomainViolation, NoRootInUnitInterval
from .hp import required_bits
from .tracemap import DEFAULT_PRECISION, SpectralParams

ROOT_TOL = 1e-14


def r_matrix(a: int, x: float) -> np.ndarray:
    if a < 1:
        raise ValueError("quotient must be >= 1")
    if not 0 < x <= 1:
        raise DomainViolation(f"x = {x} outside (0, 1]")
    return np.array([
        [0.0, x ** (a - 1), 0.0],
        [(a + 1) * x, 0.0, a * x],
        [a * x, 0.0, (a - 1) * x],
    ])


def period_product(cf: ContinuedFraction, x: float) -> np.ndarray:
    """R_{i+1}(x) ... R_{i+T}(x) over one period (i = preperiod length)."""
    P = np.eye(3)
    for a in cf.period:
        P = P @ r_matrix(a, x)
    return P


def perron_root(P: np.ndarray, tol: float = ROOT_TOL, maxit: int = 100000) -> float:
    """Perron root of a nonnegative irreducible matrix.

    Power iteration on P + I, stopped on the Collatz-Wielandt bracket
    min (Pv)_i / v_i <= rho <= max (Pv)_i / v_i.
    """
    n = P.shape[0]
    shifted = P + np.eye(n)
    v = np.ones(n)
    lo = hi = 0.0
    for _ in range(maxit):
        w = P @ v
        if np.all(v > 0):
            q = w / v
            lo, hi = q.min(), q.max()
            if hi - lo <= tol * max(hi, 1e-300):
                return float((lo + hi) / 2)
        v = shifted @ v
        v /= v.max()
    return float((lo + hi) / 2)


def char_poly(P: np.ndarray) -> tuple[float, float, float]:
    """(c2, c1, c0) with det(lambda I - P) = lambda^3 - c2 lambda^2 + c1 lambda - c0."""
    tr = P[0, 0] + P[1, 1] + P[2, 2]
    minors = (P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
              + P[0, 0] * P[2, 2] - P[0, 2] * P[2, 0]
              + P[1, 1] * P[2, 2] - P[1, 2] * P[2, 1])
    det = (P[0, 0] * (P[1, 1] * P[2, 2] - P[1, 2] * P[2, 1])
           - P[0, 1] * (P[1, 0] * P[2, 2] - P[1, 2] * P[2, 0])
           + P[0, 2] * (P[1, 0] * P[2, 1] - P[1, 1] * P[2, 0]))
    return float(tr), float(minors), float(det)


def largest_real_root(c2: float, c1: float, c0: float) -> float:
    """Largest real root of lambda^3 - c2 lambda^2 + c1 lambda - c0, by bisection."""
    p = lambda t: ((t - c2) * t + c1) * t - c0
    bound = 1 + max(abs(c2), abs(c1), abs(c0))
    # p' = 3t^2 - 2 c2 t + c1; p is increasing right of its largest critical point
    disc = c2 * c2 - 3 * c1
    if disc > 0:
        r_hi = (c2 + math.sqrt(disc)) / 3
        r_lo = (c2 - math.sqrt(disc)) / 3
        a, b = (r_hi, bound) if p(r_hi) <= 0 else (-bound, r_lo)
    else:
        a, b = -bound, bound
    for _ in range(200):
        mid = (a + b) / 2
        if p(mid) > 0:
            b = mid
        else:
            a = mid
        if b - a <= 1e-16 * max(1.0, abs(b)):
            break
    return (a + b) / 2


def oracle_root(P: np.ndarray) -> float:
    return largest_real_root(*char_poly(P))


def _solve_unit(rho_of, T: int) -> float:
    g = lambda x: rho_of(x) ** (1 / T) - 1
    if g(1.0) < 0:
        raise NoRootInUnitInterval(f"rho(P(1))^(1/T) = {g(1.0) + 1:.6g} < 1")
    a, b = 0.0, 1.0
    for _ in range(200):
        mid = (a + b) / 2
        if mid == a or mid == b:
            break
        if g(mid) < 0:
            a = mid
        else:
            b = mid
        if b - a <= 1e-16:
            break
    return (a + b) / 2


def f_star(cf: ContinuedFraction, oracle: bool = False) -> float:
    """x in (0, 1] with rho(R_{i+1}(x) ... R_{i+T}(x))^(1/T) = 1."""
    if not cf.period:
        raise NoRootInUnitInterval("f_* needs a periodic tail")
    root = oracle_root if oracle else perron_root
    return _solve_unit(lambda x: root(period_product(cf, x)), len(cf.period))


def norm_growth(cf: ContinuedFraction, x: float, n: int) -> float:
    """||R_1(x) ... R_n(x)||^(1/n), max-row-sum norm, with running rescaling."""
    M = np.eye(3)
    log_scale = 0.0
    for i in range(1, n + 1):
        M = M @ r_matrix(cf.quotient(i), x)
        s = np.abs(M).sum(axis=1).max()
        M /= s
        log_scale += math.log(s)
    return math.exp(log_scale / n)


@dataclass
class LawRow:
    V: float
    order: int
    s: float
    s_lnV: float
    target: float

    @property
    def gap(self) -> float:
        return abs(self.s_lnV - self.target)

    def csv(self) -> str:
        return f"{self.V:g},{self.order},{self.s:.12f},{self.s_lnV:.12f},{self.target:.12f},{self.gap:.12f}"


LAW_HEADER = "V,order,s,s_lnV,target,gap"


def large_v_law(cf: ContinuedFraction, V_list, order: int, precision_bits: int = DEFAULT_PRECISION,
                threads: int = 1) -> list[LawRow]:
    target = -math.log(f_star(cf))
    rows = []
    for V in V_list:
        bits = max(precision_bits, required_bits(order, float(V), cf.M))
        tree = enumerate_bands(cf, SpectralParams(V, bits), order, threads)
        s = pre_dimension(band_lengths(tree.generations[order])).s
        rows.append(LawRow(float(V), order, s, s * math.log(float(V)), target))
    return rows
