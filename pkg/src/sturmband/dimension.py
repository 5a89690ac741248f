"""Pre-dimensions, dimension estimates and Moran covers.

The pre-dimension of generation n is the root s_n of sum |B|^s = 1.  The
lower and upper fractal dimensions are the liminf and limsup of s_n; at
finite depth they are estimated by the min and max over the last half of
the computed orders.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bandtree import Band, children_index
from .cfrac import growth_K
from .errors import (CouplingTooSmall, DegenerateSingleBand, InsufficientDepth,
                     NotContractive)
from .hp import working

CERT_TOL = 1e-12
BRACKET_STEP = 1e-6


@dataclass
class PreDimension:
    s: float
    residual: float  # |sum |B|^s - 1|, compensated, descending order
    f_minus: float  # sum at s - 1e-6
    f_plus: float  # sum at s + 1e-6
    count: int

    @property
    def certified(self) -> bool:
        return self.residual <= CERT_TOL and self.f_minus > 1 > self.f_plus


def _power_sum(logs, s: float) -> float:
    # logs ascending (most negative first) means terms ascending; reverse for descending order
    return math.fsum(math.exp(s * lg) for lg in reversed(logs))


def pre_dimension(lengths) -> PreDimension:
    """Root of sum L^s = 1 for band lengths 0 < L < 1."""
    lengths = [float(L) for L in lengths]
    if not lengths:
        raise ValueError("empty generation")
    if any(L <= 0 for L in lengths):
        raise ValueError("band lengths must be positive")
    if max(lengths) >= 1:
        raise NotContractive(f"largest band has length {max(lengths):.6g} >= 1")
    if len(lengths) == 1:
        warnings.warn("single band: sum L^s = 1 only as s -> 0", DegenerateSingleBand, stacklevel=2)
        L = lengths[0]
        return PreDimension(0.0, 0.0, L ** -BRACKET_STEP, L ** BRACKET_STEP, 1)
    logs = sorted(math.log(L) for L in lengths)
    lo, hi = 0.0, 1.0
    while _power_sum(logs, hi) > 1:
        lo, hi = hi, 2 * hi
    for _ in range(60):
        mid = (lo + hi) / 2
        if _power_sum(logs, mid) > 1:
            lo = mid
        else:
            hi = mid
    s = (lo + hi) / 2
    for _ in range(4):
        f = _power_sum(logs, s) - 1
        df = math.fsum(lg * math.exp(s * lg) for lg in reversed(logs))
        if df == 0:
            break
        step = f / df
        if not lo <= s - step <= hi:
            break
        s -= step
        if abs(step) < 1e-17:
            break
    residual = abs(_power_sum(logs, s) - 1)
    return PreDimension(s, residual, _power_sum(logs, s - BRACKET_STEP),
                        _power_sum(logs, s + BRACKET_STEP), len(lengths))


def dimension_bounds(V: float, K: float) -> tuple[float, float]:
    """Lower and upper dimension bounds from the growth constant K of the quotients.

    t1 = 3/(V-8), t2 = 1/(4(V+8)); K = inf gives (1, 1).
    """
    V = float(V)
    if V <= 20:
        raise CouplingTooSmall(f"V = {V:g} must exceed 20")
    if math.isinf(K):
        return 1.0, 1.0
    if K < 1:
        raise ValueError("K must be >= 1")
    t1 = 3 / (V - 8)
    t2 = 1 / (4 * (V + 8))
    lnK = math.log(K)
    lower = max(math.log(2) / (10 * math.log(2) - 3 * math.log(t2)),
                (lnK - math.log(3)) / (lnK - math.log(t2 / 3)))
    upper = (2 * lnK + math.log(3)) / (2 * lnK - math.log(t1))
    return lower, upper


def band_lengths(gen: list[Band], evaluator=None, fast: bool = False) -> list[float]:
    """Band lengths; ``fast`` uses 4/|t'(midpoint)| instead of the endpoints."""
    if not fast:
        return [b.flength for b in gen]
    out = []
    for b in gen:
        d = evaluator.trace(b.level, b.power, b.midpoint)[1]
        with working(b.precision):
            out.append(float(4 / abs(d)))
    return out


def first_contractive_order(tree) -> int | None:
    for n, gen in enumerate(tree.generations):
        if max(b.flength for b in gen) < 1:
            return n
    return None


def moran_cover(tree, r: float) -> list[Band]:
    """Bands B with |B| <= r < |parent(B)|; the order -1 parent counts as unbounded."""
    if r <= 0:
        raise ValueError("scale must be positive")
    kids = children_index(tree)
    out = []
    stack = list(reversed(kids.get(id(tree.root), [])))
    while stack:
        b = stack.pop()
        if b.flength <= r:
            out.append(b)
            continue
        below = kids.get(id(b))
        if not below:
            raise InsufficientDepth(f"band at order {b.order} still longer than r = {r:g}")
        stack.extend(reversed(below))
    return out


def cover_ratio(cover: list[Band]) -> float:
    """Smallest |B| / |parent(B)| over a cover (order-0 members skipped)."""
    ratios = [b.flength / b.parent.flength for b in cover if b.order > 0]
    return min(ratios) if ratios else 1.0


def cover_scales(tree, count: int = 8) -> list[float]:
    """Geometric scales between the largest band of the first contractive order
    and the largest band of the deepest order."""
    n0 = first_contractive_order(tree)
    if n0 is None or n0 >= len(tree.generations) - 1:
        return []
    top = max(b.flength for b in tree.generations[n0])
    bottom = max(b.flength for b in tree.generations[-1])
    if bottom >= top:
        return []
    return [float(r) for r in np.geomspace(top, bottom, count)]


def log_count_slope(tree, scales) -> float | None:
    """Slope of log N(r) against log(1/r) over Moran covers."""
    if len(scales) < 2:
        return None
    counts = [len(moran_cover(tree, r)) for r in scales]
    slope, _ = np.polyfit(np.log(1 / np.asarray(scales)), np.log(np.asarray(counts, float)), 1)
    return float(slope)


@dataclass
class DimensionReport:
    s_seq: dict[int, float]
    residuals: dict[int, float]
    s_low: float | None
    s_high: float | None
    bounds: tuple[float, float]
    n0: int | None
    moran_counts: dict[float, int] = field(default_factory=dict)
    slope: float | None = None
    cover_min_ratio: float | None = None
    fast: bool = False
    truncated: bool = False
    certified: dict[int, bool] = field(default_factory=dict)

    def tail(self) -> list[int]:
        orders = sorted(self.s_seq)
        if not orders:
            return []
        n_max = orders[-1]
        width = math.ceil(n_max / 2)
        return [n for n in orders if n > n_max - width]

    def lines(self) -> list[str]:
        out = []
        tag = " (fast lengths)" if self.fast else ""
        if self.truncated:
            tag += " (truncated frequency)"
        out.append(f"n0: {self.n0}")
        out.append(f"bounds_lower: {self.bounds[0]:.6f}")
        out.append(f"bounds_upper: {self.bounds[1]:.6f}")
        if self.s_low is not None:
            out.append(f"s_low_estimate: {self.s_low:.12f}{tag}")
            out.append(f"s_high_estimate: {self.s_high:.12f}{tag}")
        if self.slope is not None:
            out.append(f"box_slope_estimate: {self.slope:.6f}")
        if self.cover_min_ratio is not None:
            out.append(f"cover_min_ratio: {self.cover_min_ratio:.6g}")
        return out

    def table(self) -> list[str]:
        rows = ["order\ts_n\tsum_residual"]
        for n in sorted(self.s_seq):
            rows.append(f"{n}\t{self.s_seq[n]:.15f}\t{self.residuals[n]:.3e}")
        return rows


def box_dim_estimate(report: DimensionReport) -> float | None:
    """Upper box dimension estimate: max of s_n over the tail window."""
    return report.s_high


def dimension_report(tree, orders=None, fast: bool = False, scales=None) -> DimensionReport:
    n0 = first_contractive_order(tree)
    if orders is None:
        orders = range(n0 if n0 is not None else len(tree.generations), len(tree.generations))
    s_seq, res, cert = {}, {}, {}
    for n in orders:
        lengths = band_lengths(tree.generations[n], tree.evaluator, fast)
        pd = pre_dimension(lengths)
        s_seq[n], res[n], cert[n] = pd.s, pd.residual, pd.certified
    K = growth_K(tree.cf)
    report = DimensionReport(s_seq, res, None, None, dimension_bounds(float(tree.params.V), K), n0,
                             fast=fast, truncated=tree.cf.truncated, certified=cert)
    window = report.tail()
    if window:
        report.s_low = min(s_seq[n] for n in window)
        report.s_high = max(s_seq[n] for n in window)
    if scales is None:
        scales = cover_scales(tree)
    if scales:
        covers = {r: moran_cover(tree, r) for r in scales}
        report.moran_counts = {r: len(c) for r, c in covers.items()}
        report.cover_min_ratio = min(cover_ratio(c) for c in covers.values())
        report.slope = log_count_slope(tree, scales)
    return report


@dataclass
class ToyTree:
    """Self-similar test tree: every band has N children of ratio L."""

    root: Band
    generations: list[list[Band]]


def toy_tree(N: int, L: float, depth: int) -> ToyTree:
    from .bandtree import Kind

    root = Band(-1, Kind.ROOT, 0, 0, -math.inf, math.inf)
    gens = [[Band(0, Kind.III, 0, 0, 0.0, 1.0, path=("III",), parent=root)]]
    for k in range(1, depth + 1):
        nxt = []
        for b in gens[-1]:
            w = b.flength
            gap = w * (1 - N * L) / max(N - 1, 1)
            for j in range(N):
                lo = b.lo + j * (w * L + gap)
                nxt.append(Band(k, Kind.III, 0, 0, lo, lo + w * L, j + 1, N,
                                b.path + (f"III{j + 1}",), b))
        gens.append(nxt)
    return ToyTree(root, gens)
