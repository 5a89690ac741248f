"""Numerical audit of the band hierarchy.

Hard checks carry explicit constants and must hold exactly (up to rounding).
Soft checks measure constants whose existence is known but whose value is
not; they pass when the measured extreme grows by less than 5% per added
order over the last three depths.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field

import gmpy2
import numpy as np

from . import gibbs
from .bandtree import Band, IndexWindow, Kind, expected_counts, path_text
from .errors import ConfigError
from .hp import working
from .ladder import build_ladder, ratio_bounds
from .tracemap import chebyshev

HARD_TOL = 1e-10
DRIFT = 1.05
VARIATION_POINTS = 33
KEYLW_SAMPLES = 1000
MAX_PAIRS = 10_000

CHECKS = {
    1: "fricke_invariant",
    2: "triple_disjoint",
    3: "covering_chain",
    4: "bounded_variation",
    5: "bounded_distortion",
    6: "bounded_covariation",
    7: "derivative_ratio",
    8: "index_localization",
    9: "keyLW_windows",
    10: "contraction",
    11: "count_recursion",
    12: "gibbs_ratios",
}
HARD = (1, 2, 3, 7, 8, 9, 10, 11)
SOFT = (4, 5, 6, 12)


@dataclass
class AuditReport:
    id: int
    name: str
    hard: bool
    population: int
    extreme: float | None
    bound: str
    verdict: str  # pass, fail, warn, insufficient
    worst: str = ""
    series: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict == "pass"

    def summary(self) -> str:
        ext = "-" if self.extreme is None else f"{self.extreme:.6g}"
        return f"{self.name} population={self.population} extreme={ext} bound={self.bound} verdict={self.verdict}"

    def lines(self) -> list[str]:
        out = [self.summary()]
        if self.worst:
            out.append(f"  worst: {self.worst}")
        for d, v in sorted(self.series.items()):
            out.append(f"  depth {d}: {v:.6g}")
        for k, v in self.extra.items():
            out.append(f"  {k}: {v}")
        return out


def select(selection) -> list[int]:
    if selection is None or selection == "all":
        return sorted(CHECKS)
    if selection == "hard":
        return list(HARD)
    if selection == "soft":
        return list(SOFT)
    if isinstance(selection, str):
        selection = [s for s in selection.replace(" ", "").split(",") if s]
    ids = []
    names = {v: k for k, v in CHECKS.items()}
    for s in selection:
        if isinstance(s, int) or str(s).isdigit():
            i = int(s)
        elif s in names:
            i = names[s]
        else:
            raise ConfigError(f"unknown audit check {s!r}")
        if i not in CHECKS:
            raise ConfigError(f"unknown audit check {s!r}")
        ids.append(i)
    return sorted(set(ids))


def drift_ok(series: dict) -> tuple[bool, float | None]:
    """Growth over the last three depths stays below 5% per order."""
    depths = sorted(series)[-3:]
    if len(depths) < 3:
        return False, None
    growth = max(series[b] / series[a] for a, b in zip(depths, depths[1:]))
    return growth < DRIFT, growth


class Auditor:
    def __init__(self, tree, depth: int | None = None, beta: float = 0.5, seed: int = 0):
        self.tree = tree
        self.depth = tree.depth if depth is None else depth
        if self.depth > tree.depth:
            raise ConfigError(f"audit depth {self.depth} exceeds enumerated depth {tree.depth}")
        self.ev = tree.evaluator
        self.prec = tree.params.precision_bits
        self.V = tree.params.V
        self.cf = tree.cf
        self.beta = beta
        self.seed = seed
        self._ladders = None

    # -- shared data ----------------------------------------------------

    def bands(self, upto=None):
        return list(self.tree.bands(self.depth if upto is None else upto))

    def ladders(self):
        if self._ladders is None:
            self._ladders = [build_ladder(b, self.tree) for b in self.bands()]
        return self._ladders

    def trace_many(self, label, xs):
        return self.ev.trace_many(label[0], label[1], xs)

    def sample_points(self, k: int) -> list:
        """Energies for the pointwise set checks at level k."""
        pts = []
        for n in (k - 1, k, k + 1):
            if 0 <= n <= self.tree.depth:
                for b in self.tree.generations[n]:
                    pts.extend(b.samples(9))
        with working(self.prec):
            lo, hi = mp_(-2.5, self.prec), self.V + mp_(2.5, self.prec)
            step = (hi - lo) / 400
            pts.extend(lo + i * step for i in range(401))
        return pts

    # -- hard -----------------------------------------------------------

    def fricke_invariant(self) -> AuditReport:
        V2 = self.V * self.V
        residuals, worst = [], (0.0, "")
        for b in self.bands():
            xs = [b.lo, b.midpoint, b.hi]
            k_top = b.order + 1
            for k in range(0, k_top + 1):
                a = self.cf.quotient(k + 1)
                v = self.trace_many((k + 1, 0), xs)
                ts = [self.trace_many((k, p), xs) for p in range(0, a + 2)]
                for p in range(0, a + 1):
                    for j in range(3):
                        x, y, z = v[j][0], ts[p][j][0], ts[p + 1][j][0]
                        with working(self.prec):
                            lam = x * x + y * y + z * z - x * y * z - 4
                            scale = max(V2, x * x + y * y + z * z)
                            r = float(abs(lam - V2) / scale)
                        residuals.append(r)
                        if r > worst[0]:
                            worst = (r, f"{path_text(b.path)} k={k} p={p} x={float(xs[j]):.17g}")
        ext = max(residuals)
        rep = AuditReport(1, CHECKS[1], True, len(residuals), ext, f"<= {HARD_TOL:g} relative",
                          "pass" if ext <= HARD_TOL else "fail", worst[1])
        rep.extra["median"] = f"{statistics.median(residuals):.3e}"
        return rep

    def _families(self):
        fam: dict[tuple[int, int], list[tuple]] = {}
        for b in self.bands():
            fam.setdefault(self.ev.resolve(*b.label), []).append((b.lo, b.hi))
            for r in self.tree.added_rungs(b):
                fam.setdefault(self.ev.resolve(*r.label), []).append((r.lo, r.hi))
        return fam

    def triple_disjoint(self) -> AuditReport:
        violations, population, worst = 0, 0, ""
        for k in range(0, self.depth + 1):
            xs = self.sample_points(k)
            a = self.cf.quotient(k + 1)
            v = self.trace_many((k + 1, 0), xs)
            prev = self.trace_many((k, -1), xs)
            cur_list = {p: self.trace_many((k, p), xs) for p in range(0, a + 2)}
            for p in range(0, a + 2):
                lower = prev if p == 0 else cur_list[p - 1]
                for j, x in enumerate(xs):
                    population += 1
                    if abs(v[j][0]) <= 2 + HARD_TOL and abs(cur_list[p][j][0]) <= 2 + HARD_TOL \
                            and abs(lower[j][0]) <= 2 + HARD_TOL:
                        violations += 1
                        worst = worst or f"k={k} p={p} x={float(x):.17g}"
        # interval sweep on the computed families
        fam = self._families()
        swept = 0
        for k in range(0, self.depth + 1):
            for p in range(0, self.cf.quotient(k + 1) + 2):
                labels = [(k + 1, 0), self.ev.resolve(k, p), self.ev.resolve(k, p - 1)]
                sets = [fam.get(l) for l in labels]
                if any(not s for s in sets):
                    continue
                swept += 1
                hit = _triple_overlap(*sets)
                if hit is not None:
                    violations += 1
                    worst = worst or f"intervals k={k} p={p} near {float(hit):.17g}"
        rep = AuditReport(2, CHECKS[2], True, population, float(violations), "0 points in all three sets",
                          "pass" if violations == 0 else "fail", worst)
        rep.extra["interval_families_swept"] = swept
        return rep

    def covering_chain(self) -> AuditReport:
        violations, population, worst = 0, 0, ""
        for k in range(0, self.depth + 1):
            xs = self.sample_points(k)
            a = self.cf.quotient(k + 1)
            v = self.trace_many((k + 1, 0), xs)
            # p = -1 is excluded: sigma_(0,0) is the whole line, and the p = -1
            # inclusion fails at every level once the -1 label is resolved
            rows = {p: self.trace_many((k, p), xs) for p in range(0, a + 2)}
            for p in range(0, a + 1):
                for j, x in enumerate(xs):
                    if abs(rows[p + 1][j][0]) > 2:
                        continue
                    population += 1
                    if min(abs(v[j][0]), abs(rows[p][j][0])) > 2 * (1 + HARD_TOL):
                        violations += 1
                        worst = worst or f"k={k} p={p} x={float(x):.17g}"
        # every computed left-family band inside the union of computed right-family bands
        fam = self._families()
        intervals = 0
        for k in range(0, self.depth + 1):
            for p in range(0, self.cf.quotient(k + 1) + 1):
                left = fam.get(self.ev.resolve(k, p + 1))
                rights = [self.ev.resolve(k + 1, 0), self.ev.resolve(k, p)]
                if not left or (0, 0) in rights:
                    continue  # t_(0,0) = 2, so sigma_(0,0) is the whole line
                union = _merge(sorted(iv for lab in rights for iv in fam.get(lab, [])))
                for lo, hi in left:
                    intervals += 1
                    if not any(a <= lo and hi <= b for a, b in union):
                        violations += 1
                        worst = worst or f"band [{float(lo):.17g}, {float(hi):.17g}] of t_{(k, p + 1)} uncovered"
        # nesting of generations
        nest = 0
        for b in self.bands():
            if b.order >= 1 and not b.parent.contains(b):
                nest += 1
                worst = worst or f"{path_text(b.path)} not inside its parent"
        rep = AuditReport(3, CHECKS[3], True, population, float(violations + nest),
                          "0 uncovered points", "pass" if violations + nest == 0 else "fail", worst)
        rep.extra["bands_checked_against_union"] = intervals
        return rep

    def derivative_ratio(self) -> AuditReport:
        V = float(self.V)
        pop, bad, worst, lo_margin, hi_margin = 0, 0, "", math.inf, 0.0
        for lad in self.ladders():
            top = lad.top
            xs = [top.lo, top.midpoint, top.hi]
            vals = [self.trace_many(r.label, xs) for r in lad.rungs]
            for i in range(1, lad.m):
                lo, hi = ratio_bounds(V, lad.p_seq[i])
                for j in range(3):
                    with working(self.prec):
                        r = float(abs(vals[i + 1][j][1] / vals[i][j][1]))
                    pop += 1
                    lo_margin = min(lo_margin, r / lo)
                    hi_margin = max(hi_margin, r / hi)
                    if not lo * (1 - HARD_TOL) <= r <= hi * (1 + HARD_TOL):
                        bad += 1
                        worst = worst or f"{path_text(top.path)} rung {i} ratio {r:.6g} not in [{lo:.6g}, {hi:.6g}]"
        rep = AuditReport(7, CHECKS[7], True, pop, float(bad), "(V-8)(p+1)/3 <= ratio <= (V+8)(p+1)^3/4",
                          "pass" if bad == 0 and pop else "fail", worst)
        rep.extra["min ratio/lower"] = f"{lo_margin:.6g}"
        rep.extra["max ratio/upper"] = f"{hi_margin:.6g}"
        return rep

    def index_localization(self) -> AuditReport:
        pop, bad, worst = 0, 0, ""
        for lad in self.ladders():
            for i in range(1, lad.m):
                p, l = lad.p_seq[i], lad.l_seq[i]
                nxt = lad.rungs[i + 1].band
                pop += 1
                if l is None:
                    bad += 1
                    worst = worst or f"{path_text(lad.top.path)} rung {i}: no window"
                    continue
                hs = self.trace_many(lad.rungs[i].label, nxt.samples(5))
                win = IndexWindow(p, l)
                holders = {ll for ll in range(1, p + 1) for h, _ in hs if IndexWindow(p, ll).contains(h)}
                if not all(win.contains(h) for h, _ in hs) or holders != {l}:
                    bad += 1
                    worst = worst or f"{path_text(lad.top.path)} rung {i}: h not inside I_({p},{l})"
        return AuditReport(8, CHECKS[8], True, pop, float(bad), "h_i(B_{i+1}) in unique I_{p_i,l_i}",
                           "pass" if bad == 0 and pop else "fail", worst)

    def keyLW_windows(self) -> AuditReport:
        pop, bad, worst = 0, 0, ""
        for p in range(1, self.cf.M + 2):
            for l in range(1, p + 1):
                w = IndexWindow(p, l)
                cm, cp = w.c_range()
                for c in np.linspace(cm, cp, KEYLW_SAMPLES):
                    t = 2 * math.cos(w.theta(float(c)))
                    s1 = chebyshev(p + 1, t)
                    s0 = chebyshev(p, t)
                    pop += 1
                    ok = (abs(s1.value) <= 0.25 + 1e-12 and abs(s0.value) <= 1.25 + 1e-12
                          and (p + 1) / 3 <= abs(s1.derivative) <= (p + 1) ** 3 / 4
                          and abs(s0.derivative) <= 2 * abs(s1.derivative))
                    if not ok:
                        bad += 1
                        worst = worst or f"p={p} l={l} t={t:.17g}"
        return AuditReport(9, CHECKS[9], True, pop, float(bad), "four Chebyshev bounds on I_{p,l}",
                           "pass" if bad == 0 else "fail", worst)

    def contraction(self) -> AuditReport:
        rng = np.random.default_rng(self.seed)
        pop, bad, worst, margin, step = 0, 0, "", 0.0, 0.0
        for lad in self.ladders():
            top = lad.top
            with working(self.prec):
                extra = [top.lo + float(u) * top.length for u in rng.random(2)]
            xs = [top.lo, top.midpoint, top.hi] + extra
            vals = [self.trace_many(r.label, xs) for r in lad.rungs]
            pairs = [(0, 2), (0, 1), (1, 2), (3, 4)]
            m = lad.m
            for a, b in pairs:
                with working(self.prec):
                    diffs = [abs(v[a][0] - v[b][0]) for v in vals]
                    for i in range(1, m):
                        if diffs[i + 1] > 0:
                            step = max(step, float(diffs[i] / diffs[i + 1]))
                    dm = abs(vals[m][a][0] - vals[m][b][0])
                    for i in range(0, m):
                        di = abs(vals[i][a][0] - vals[i][b][0])
                        f = 3.0 ** -(m - i)
                        pop += 1
                        if dm > 0:
                            margin = max(margin, float(di / (f * dm)))
                        if di > f * dm * (1 + HARD_TOL) + gmpy2.mpfr(10) ** -(self.tree.params.digits - 10) \
                                or f * dm > 4 * f * (1 + HARD_TOL):
                            bad += 1
                            worst = worst or f"{path_text(top.path)} rung {i}"
        rep = AuditReport(10, CHECKS[10], True, pop, float(bad), "|h_i(x)-h_i(y)| <= 3^-(m-i)|h_m(x)-h_m(y)| <= 4*3^-(m-i)",
                          "pass" if bad == 0 and pop else "fail", worst)
        rep.extra["max ratio to bound"] = f"{margin:.6g}"
        # one-step constant c: |h_i(x) - h_i(y)| <= c |h_{i+1}(x) - h_{i+1}(y)|
        rep.extra["one-step c"] = f"{step:.6g}"
        if 0 < step < 0.5:
            rep.extra["lambda"] = f"{(1 + math.sqrt(1 - 4 * step * step)) / (2 * step):.6g}"
        if step >= 0.25:
            rep.extra["note"] = "one-step c >= 1/4 at this coupling"
        return rep

    def count_recursion(self) -> AuditReport:
        expect = expected_counts(self.cf, self.depth)
        bad = [k for k in range(self.depth + 1) if self.tree.counts(k) != expect[k]]
        rep = AuditReport(11, CHECKS[11], True, self.depth + 1, float(len(bad)), "exact",
                          "pass" if not bad else "fail",
                          f"order {bad[0]}: {self.tree.counts(bad[0])} != {expect[bad[0]]}" if bad else "")
        rep.extra["counts"] = " ".join(str(self.tree.counts(k)) for k in range(self.depth + 1))
        return rep

    # -- soft -----------------------------------------------------------

    def _derivative_table(self):
        """(order, path, |h'| samples, |B|) per band, 33 points each."""
        rows = []
        for b in self.bands():
            vals = self.trace_many(b.label, b.samples(VARIATION_POINTS))
            d = [float(abs(v[1])) for v in vals]
            rows.append((b.order, b.path, d, b.flength))
        return rows

    def _soft(self, cid, per_band, bound) -> AuditReport:
        series, worst_at = {}, {}
        cur, cur_path = 0.0, ""
        by_order: dict[int, list] = {}
        for order, path, value in per_band:
            by_order.setdefault(order, []).append((value, path))
        for d in range(0, self.depth + 1):
            for value, path in by_order.get(d, []):
                if value > cur:
                    cur, cur_path = value, path_text(path)
            series[d] = cur
            worst_at[d] = cur_path
        ok, growth = drift_ok(series)
        rep = AuditReport(cid, CHECKS[cid], False, len(per_band), cur, bound,
                          "pass" if ok else ("insufficient" if growth is None else "warn"),
                          worst_at.get(self.depth, ""), series)
        if growth is not None:
            rep.extra["max growth over last depths"] = f"{growth:.6f}"
        return rep

    def bounded_variation(self) -> AuditReport:
        per = [(o, p, max(d) / min(d)) for o, p, d, _ in self._derivative_table()]
        return self._soft(4, per, f"growth < {DRIFT - 1:.0%} per order")

    def bounded_distortion(self) -> AuditReport:
        per = []
        for o, p, d, L in self._derivative_table():
            v = [x * L for x in d]
            per.append((o, p, max(max(v), 1 / min(v))))
        return self._soft(5, per, f"growth < {DRIFT - 1:.0%} per order")

    def bounded_covariation(self) -> AuditReport:
        series = {}
        pop = 0
        cur, worst = 0.0, ""
        for n in range(0, self.depth + 1):
            for k in range(1, n):
                groups: dict[tuple, list[float]] = {}
                for b in self.tree.generations[n]:
                    chain = b.chain()  # index j holds order j-1
                    bk = chain[k + 1]
                    sig = (bk.kind.value,) + tuple((c.kind.value, c.index_l) for c in chain[k + 2:])
                    groups.setdefault(sig, []).append(b.flength / bk.flength)
                for sig, rs in groups.items():
                    if len(rs) < 2:
                        continue
                    pop += len(rs)
                    eta = max(rs) / min(rs)
                    if eta > cur:
                        cur, worst = eta, f"k={k} n={n} group {'/'.join(map(str, sig))}"
            series[n] = cur if cur > 0 else 1.0
        ok, growth = drift_ok(series)
        rep = AuditReport(6, CHECKS[6], False, pop, cur, f"growth < {DRIFT - 1:.0%} per order",
                          "pass" if ok else ("insufficient" if growth is None else "warn"), worst, series)
        if growth is not None:
            rep.extra["max growth over last depths"] = f"{growth:.6f}"
        return rep

    def gibbs_ratios(self) -> AuditReport:
        series = {}
        for m in range(4, self.depth + 1):
            series[m] = gibbs.zeta_hat(self.tree, self.beta, m)
        if not series:
            return AuditReport(12, CHECKS[12], False, 0, None, "depth >= 4 needed", "insufficient")
        ok, growth = drift_ok(series)
        meas = gibbs.build_measure(self.tree, self.beta, self.depth)
        norm = abs(meas.total() - 1)
        add = gibbs.additivity_defect(meas, self.tree)
        verdict = "pass" if ok and norm <= 1e-12 and add <= 1e-12 else ("insufficient" if growth is None else "warn")
        rep = AuditReport(12, CHECKS[12], False, sum(len(g) for g in self.tree.generations[1:self.depth + 1]),
                          series[max(series)], f"growth < {DRIFT - 1:.0%} per order; mass 1 +- 1e-12",
                          verdict, "", series)
        rep.extra["beta"] = self.beta
        rep.extra["normalization defect"] = f"{norm:.3e}"
        rep.extra["additivity defect"] = f"{add:.3e}"
        if growth is not None:
            rep.extra["max growth over last depths"] = f"{growth:.6f}"
        return rep

    def run(self, ids) -> list[AuditReport]:
        return [getattr(self, CHECKS[i])() for i in ids]


def mp_(value, bits):
    return gmpy2.mpfr(value, bits)


def _merge(intervals):
    out = []
    for lo, hi in intervals:
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


def _triple_overlap(a, b, c):
    """A point in the intersection of three interval unions, or None."""

    def meet(xs, ys):
        out = []
        for lo1, hi1 in xs:
            for lo2, hi2 in ys:
                lo, hi = max(lo1, lo2), min(hi1, hi2)
                if lo <= hi:
                    out.append((lo, hi))
        return out

    both = meet(meet(a, b), c)
    return both[0][0] if both else None


def run_suite(tree, selection="all", depth: int | None = None, beta: float = 0.5, seed: int = 0) -> list[AuditReport]:
    return Auditor(tree, depth, beta, seed).run(select(selection))


def hard_failures(reports) -> list[AuditReport]:
    return [r for r in reports if r.hard and not r.ok]
