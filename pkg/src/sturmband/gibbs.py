"""Finite-order Gibbs-like measures.

mu_{beta,m} gives each order-m band the mass |B|^beta / b_m with
b_m = sum over G_m of |B|^beta.  Lower-order bands get the mass of their
descendants.  The ratio

    rho(B) = mu_{beta,m}(B) * (sum over G_k of |.|^beta) / |B|^beta,   B in G_k,

is what the Gibbs property keeps bounded above and below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import gmpy2

from .bandtree import Band
from .errors import ConfigError, OrderUnavailable
from .hp import to_decimal, working


@dataclass
class GibbsMeasure:
    beta: float
    m: int
    weights: dict[tuple[str, ...], float]
    b_m: float
    exact: dict[tuple[str, ...], object] = field(default_factory=dict, repr=False)
    _mass: dict[tuple[str, ...], float] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        acc: dict[tuple[str, ...], list[float]] = {}
        for path, w in self.weights.items():
            for j in range(1, len(path) + 1):
                acc.setdefault(path[:j], []).append(w)
        self._mass = {p: math.fsum(ws) for p, ws in acc.items()}

    def mass(self, path: tuple[str, ...]) -> float:
        """mu_{beta,m}(B_path) for any path of length <= m+1."""
        return self._mass.get(tuple(path), 0.0)

    def total(self) -> float:
        return math.fsum(self.weights.values())

    def lines(self) -> list[str]:
        src = self.exact or self.weights
        return [f"{'-'.join(p)} {to_decimal(w) if self.exact else repr(w)}" for p, w in sorted(src.items())]


def _check_beta(beta: float):
    if not 0 < beta < 1:
        raise ConfigError(f"beta must lie in (0, 1), got {beta}")


def build_measure(tree, beta: float, m: int) -> GibbsMeasure:
    _check_beta(beta)
    if m < 0 or m >= len(tree.generations):
        raise OrderUnavailable(f"order {m} not enumerated")
    gen = tree.generations[m]
    prec = max(b.precision for b in gen)
    with working(prec):
        b_exp = gmpy2.mpfr(beta)
        powers = [b.length ** b_exp for b in gen]
        b_m = gmpy2.fsum(powers)
        exact = {b.path: w / b_m for b, w in zip(gen, powers)}
    weights = {p: float(w) for p, w in exact.items()}
    return GibbsMeasure(beta, m, weights, float(b_m), exact)


def generation_sum(gen: list[Band], beta: float) -> float:
    return math.fsum(b.flength ** beta for b in gen)


def ratios(measure: GibbsMeasure, tree, k: int) -> list[float]:
    """rho(B) for every B in G_k under ``measure``."""
    gen = tree.generations[k]
    z = generation_sum(gen, measure.beta)
    return [measure.mass(b.path) * z / b.flength ** measure.beta for b in gen]


@dataclass
class RatioRow:
    k: int
    m: int
    rho_min: float
    rho_max: float

    @property
    def zeta(self) -> float:
        return max(self.rho_max, 1 / self.rho_min)


def gibbs_ratio_report(tree, beta: float, k_max: int, m: int) -> list[RatioRow]:
    """Ratio extremes for k = 1..k_max under mu_{beta,m}; needs m >= k_max + 3."""
    if m < k_max + 3:
        raise OrderUnavailable(f"m = {m} must be at least k_max + 3 = {k_max + 3}")
    measure = build_measure(tree, beta, m)
    rows = []
    for k in range(1, k_max + 1):
        rs = ratios(measure, tree, k)
        rows.append(RatioRow(k, m, min(rs), max(rs)))
    return rows


def zeta_hat(tree, beta: float, m: int) -> float:
    """max over 1 <= k <= m-3 of max(rho_max, 1/rho_min) under mu_{beta,m}."""
    if m < 4:
        raise OrderUnavailable("need m >= 4")
    return max(r.zeta for r in gibbs_ratio_report(tree, beta, m - 3, m))


def progib_constant(tree, beta: float, k_max: int) -> float:
    """Smallest c with c^-1 <= mu_{beta,k}(B) / mu_{beta,k+3}(B) <= c over k <= k_max."""
    if k_max + 3 >= len(tree.generations):
        raise OrderUnavailable(f"need order {k_max + 3}")
    c = 1.0
    for k in range(1, k_max + 1):
        near = build_measure(tree, beta, k)
        far = build_measure(tree, beta, k + 3)
        for b in tree.generations[k]:
            q = near.mass(b.path) / far.mass(b.path)
            c = max(c, q, 1 / q)
    return c


def additivity_defect(measure: GibbsMeasure, tree) -> float:
    """max |mu(B) - sum of children masses| over bands of order < m."""
    worst = 0.0
    for k in range(0, measure.m):
        for b in tree.generations[k]:
            kids = tree.children_of(b)
            total = math.fsum(measure.mass(c.path) for c in kids)
            worst = max(worst, abs(measure.mass(b.path) - total))
    return worst
