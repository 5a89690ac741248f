"""Typed spectral generating bands and their enumeration.

Order-k bands come in three kinds.  Their generating traces are

    I   -> t_(k,1)
    II  -> t_(k+1,0)   (inside an order k-1 I band)
    III -> t_(k+1,0)   (inside an order k-1 II or III band)

Each child of a II/III parent sits where the parent trace lies in a
Chebyshev window ``I_{p,l}``.  Its bracket is the preimage of the window's
arc under the parent trace.  An I parent has one II child, reached
through the windows ``I_{1,1}`` of t_(k,1), t_(k,2), ... (the added rungs).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, NamedTuple

import gmpy2

from .cfrac import ContinuedFraction
from .errors import BracketFailure, ConfigError, PrecisionExhausted, SturmbandError
from .hp import mp, to_decimal, working
from .tracemap import Evaluator, SpectralParams

ARC_HALF_WIDTH = 0.1
VERIFY_POINTS = 17
SCAN_POINTS = 1024
REL_TOL = "1e-30"  # endpoint tolerance relative to the parent length


class Kind(str, Enum):
    I = "I"
    II = "II"
    III = "III"
    ADDED = "ADDED"  # intermediate rung B_(k,p), 2 <= p <= a-1; not a generation member
    ROOT = "ROOT"  # order -1, the whole line

    def __str__(self):
        return self.value


_RANK = {"I": 0, "II": 1, "III": 2}


def symbol(kind: Kind, l: int = 0) -> str:
    return f"{kind.value}{l}" if l else kind.value


def parse_symbol(sym: str) -> tuple[str, int]:
    name = sym.rstrip("0123456789")
    digits = sym[len(name):]
    if name not in _RANK:
        raise ValueError(f"bad path symbol {sym!r}")
    return name, int(digits) if digits else 0


def path_key(path: tuple[str, ...]):
    out = []
    for sym in path:
        name, l = parse_symbol(sym)
        out.append((_RANK[name], l))
    return tuple(out)


def path_text(path: tuple[str, ...]) -> str:
    return "-".join(path)


def parse_path(text: str) -> tuple[str, ...]:
    return tuple(text.split("-")) if text else ()


@dataclass(eq=False)
class Band:
    order: int
    kind: Kind
    level: int
    power: int
    lo: object
    hi: object
    index_l: int = 0
    family_p: int = 0
    path: tuple[str, ...] = ()
    parent: "Band | None" = field(default=None, repr=False)

    @property
    def label(self) -> tuple[int, int]:
        return (self.level, self.power)

    @property
    def precision(self) -> int:
        return max(getattr(self.lo, "precision", 53), getattr(self.hi, "precision", 53))

    @property
    def length(self):
        with working(self.precision):
            return self.hi - self.lo

    @property
    def flength(self) -> float:
        return float(self.length)

    @property
    def midpoint(self):
        with working(self.precision):
            return (self.lo + self.hi) / 2

    def samples(self, n: int) -> list:
        """``n`` equispaced points from lo to hi inclusive."""
        with working(self.precision):
            step = (self.hi - self.lo) / (n - 1)
            return [self.lo + i * step for i in range(n - 1)] + [self.hi]

    @property
    def key(self):
        return path_key(self.path)

    def contains(self, other: "Band") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def strictly_contains(self, other: "Band") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def ancestors(self):
        b = self.parent
        while b is not None:
            yield b
            b = b.parent

    def chain(self) -> list["Band"]:
        """Bands from order -1 down to this one."""
        out = [self]
        out.extend(self.ancestors())
        return out[::-1]

    def __repr__(self):
        return (f"Band({path_text(self.path) or 'ROOT'}, {self.kind.value}, "
                f"t{self.label}, [{float(self.lo):.12g}, {float(self.hi):.12g}])")


@dataclass(frozen=True)
class IndexWindow:
    """``I_{p,l}``: values 2cos((l+c)pi/(p+1)) with |c| <= 1/10 and |S_{p+1}| <= 1/4."""

    p: int
    l: int

    def __post_init__(self):
        if self.p < 1 or not 1 <= self.l <= self.p:
            raise ValueError(f"no window I_({self.p},{self.l})")

    def theta(self, c: float) -> float:
        return (self.l + c) * math.pi / (self.p + 1)

    def arc(self, bits: int = 53):
        """(low, high) trace values bounding the |c| <= 1/10 arc."""
        if bits <= 53:
            return 2 * math.cos(self.theta(ARC_HALF_WIDTH)), 2 * math.cos(self.theta(-ARC_HALF_WIDTH))
        with working(bits):
            pi = gmpy2.const_pi()
            c = mp("0.1", bits)
            lo = 2 * gmpy2.cos((self.l + c) * pi / (self.p + 1))
            hi = 2 * gmpy2.cos((self.l - c) * pi / (self.p + 1))
        return lo, hi

    def s_abs(self, c: float) -> float:
        """|S_{p+1}(2cos((l+c)pi/(p+1)))| = |sin(c pi)| / sin(theta)."""
        return abs(math.sin(c * math.pi)) / math.sin(self.theta(c))

    def c_range(self) -> tuple[float, float]:
        """Extent of c on which the window is defined."""

        def edge(sign):
            if self.s_abs(sign * ARC_HALF_WIDTH) <= 0.25:
                return sign * ARC_HALF_WIDTH
            a, b = 0.0, ARC_HALF_WIDTH
            for _ in range(200):
                m = (a + b) / 2
                if self.s_abs(sign * m) <= 0.25:
                    a = m
                else:
                    b = m
            return sign * a

        return edge(-1), edge(1)

    def bounds(self) -> tuple[float, float]:
        cm, cp = self.c_range()
        return 2 * math.cos(self.theta(cp)), 2 * math.cos(self.theta(cm))

    def offset(self, t: float) -> float:
        """c with t = 2cos((l+c)pi/(p+1)); t is clamped to [-2, 2]."""
        t = max(-2.0, min(2.0, float(t)))
        return math.acos(t / 2) * (self.p + 1) / math.pi - self.l

    def contains(self, t, slack: float = 1e-12) -> bool:
        t = float(t)
        if abs(t) > 2:
            return False
        if abs(self.offset(t)) > ARC_HALF_WIDTH + slack:
            return False
        s = _cheb_value(self.p + 1, t)
        return abs(s) <= 0.25 + slack


def _cheb_value(p: int, t: float) -> float:
    s_prev, s = 0.0, 1.0
    if p == 0:
        return 0.0
    for _ in range(p - 1):
        s_prev, s = s, t * s - s_prev
    return s


class ChildSlot(NamedTuple):
    kind: Kind
    family_p: int
    l: int
    label: tuple[int, int]


def child_plan(band: Band, a_next: int) -> list[ChildSlot]:
    """Children of ``band`` given a = a_{k+1} (k the band order), in path order."""
    k = band.order
    if band.kind is Kind.ROOT:
        return [ChildSlot(Kind.I, 0, 0, (0, 1)), ChildSlot(Kind.III, 0, 0, (1, 0))]
    if band.kind is Kind.I:
        return [ChildSlot(Kind.II, 0, 0, (k + 2, 0))]
    if band.kind is Kind.II:
        p_one, p_three = a_next + 1, a_next
    elif band.kind is Kind.III:
        p_one, p_three = a_next, a_next - 1
    else:
        raise ValueError(f"{band.kind} bands have no children")
    slots = [ChildSlot(Kind.I, p_one, l, (k + 1, 1)) for l in range(1, p_one + 1)]
    slots += [ChildSlot(Kind.III, p_three, l, (k + 2, 0)) for l in range(1, p_three + 1)]
    return slots


def expected_counts(cf: ContinuedFraction, n_max: int) -> list[tuple[int, int, int]]:
    """(n_I, n_II, n_III) for orders 0..n_max from the child-count recursion."""
    counts = [(1, 0, 1)]
    for k in range(n_max):
        a = cf.quotient(k + 1)
        n1, n2, n3 = counts[-1]
        counts.append(((a + 1) * n2 + a * n3, n1, a * n2 + (a - 1) * n3))
    return counts


def roots(params: SpectralParams) -> tuple[Band, list[Band]]:
    """The order -1 line and the two order-0 bands."""
    params.require_band_regime()
    prec = params.precision_bits
    V = params.V
    with working(prec):
        root = Band(-1, Kind.ROOT, 0, 0, mp("-inf", prec), mp("inf", prec))
        one = Band(0, Kind.I, 0, 1, V - 2, V + 2, path=("I",), parent=root)
        three = Band(0, Kind.III, 1, 0, mp(-2, prec), mp(2, prec), path=("III",), parent=root)
    return root, [one, three]


class Locator:
    """Resolves child bands for one (frequency, coupling, precision)."""

    def __init__(self, cf: ContinuedFraction, params: SpectralParams, rel_tol=REL_TOL):
        self.cf = cf
        self.params = params
        self.rel_tol = str(rel_tol)
        self.ev = Evaluator(cf, params)
        self.prec = params.precision_bits
        with working(self.prec):
            self.abs_tol = mp(10, self.prec) ** -(params.digits - 12)
            self.two = mp(2, self.prec)

    def tol_for(self, parent: Band):
        with working(self.prec):
            rel = parent.length * mp(self.rel_tol, self.prec)
        return max(rel, self.abs_tol)

    # -- primitives -----------------------------------------------------

    def preimage(self, band: Band, window: IndexWindow, tol):
        """x-interval of ``band`` where its trace lies in the arc of ``window``."""
        t_lo, t_hi = window.arc(self.prec)
        xa = self.ev.solve(band.level, band.power, t_lo, band.lo, band.hi, tol)
        xb = self.ev.solve(band.level, band.power, t_hi, band.lo, band.hi, tol)
        return (xa, xb) if xa < xb else (xb, xa)

    def resolve(self, label, a, b, tol, path=()):
        """Endpoints of the band of t_label inside the bracket [a, b]."""
        level, power = label
        ga = self.ev.trace(level, power, a)[0]
        gb = self.ev.trace(level, power, b)[0]
        if not (abs(ga) > 2 and abs(gb) > 2 and ga * gb < 0):
            raise BracketFailure(
                f"t{label} = ({float(ga):.4g}, {float(gb):.4g}) at bracket ends", path
            )
        x1 = self.ev.solve(level, power, -self.two, a, b, tol)
        x2 = self.ev.solve(level, power, self.two, a, b, tol)
        return (x1, x2) if x1 < x2 else (x2, x1)

    def monotone(self, label, lo, hi) -> bool:
        """17-point derivative sign test, plus |t| <= 2 at the interior samples."""
        if not lo < hi:
            return False
        with working(self.prec):
            step = (hi - lo) / (VERIFY_POINTS - 1)
            xs = [lo + i * step for i in range(VERIFY_POINTS)]
        vals = self.ev.trace_many(label[0], label[1], xs)
        signs = {gmpy2.sign(d) for _, d in vals}
        if len(signs) != 1 or 0 in signs:
            return False
        return all(abs(t) <= 2 for t, _ in vals[1:-1])

    def scan(self, label, a, b, tol, accept=None, path=()):
        """Fallback: locate bands of t_label in [a, b] on a 1024-cell grid.

        ``accept(lo, hi)`` picks the wanted band when several are found.
        """
        level, power = label
        with working(self.prec):
            step = (b - a) / SCAN_POINTS
            xs = [a + i * step for i in range(SCAN_POINTS)] + [b]
        vals = [t for t, _ in self.ev.trace_many(level, power, xs)]
        crossings = []
        for i in range(SCAN_POINTS):
            for target in (-self.two, self.two):
                with working(self.prec):
                    fa, fb = vals[i] - target, vals[i + 1] - target
                if fa == 0:
                    crossings.append(xs[i])
                elif fa * fb < 0:
                    crossings.append(self.ev.solve(level, power, target, xs[i], xs[i + 1], tol))
        crossings = sorted(set(crossings))
        found = []
        for x1, x2 in zip(crossings, crossings[1:]):
            t1 = self.ev.trace(level, power, x1)[0]
            t2 = self.ev.trace(level, power, x2)[0]
            if t1 * t2 < 0 and self.monotone(label, x1, x2):
                found.append((x1, x2))
        if accept is not None:
            found = [f for f in found if accept(*f)]
        if len(found) != 1:
            raise BracketFailure(f"scan found {len(found)} bands of t{label}", path)
        return found[0]

    # -- children -------------------------------------------------------

    def children(self, parent: Band) -> tuple[list[Band], list[Band]]:
        """(children in path order, added rungs) for one parent."""
        a = self.cf.quotient(parent.order + 1)
        slots = child_plan(parent, a)
        if parent.kind is Kind.I:
            child, added = self.second_kind_child(parent, a, slots[0])
            return [child], added
        return [self.window_child(parent, slot) for slot in slots], []

    def window_child(self, parent: Band, slot: ChildSlot) -> Band:
        path = parent.path + (symbol(slot.kind, slot.l),)
        window = IndexWindow(slot.family_p, slot.l)
        tol = self.tol_for(parent)
        lo = hi = None
        try:
            a, b = self.preimage(parent, window, tol)
            lo, hi = self.resolve(slot.label, a, b, tol, path)
            if not self.monotone(slot.label, lo, hi):
                lo = None
        except (BracketFailure, PrecisionExhausted):
            lo = None
        if lo is None:
            def in_window(x1, x2):
                with working(self.prec):
                    mid = (x1 + x2) / 2
                h = self.ev.trace(parent.level, parent.power, mid)[0]
                return window.contains(h)

            lo, hi = self.scan(slot.label, parent.lo, parent.hi, tol, in_window, path)
        return Band(parent.order + 1, slot.kind, slot.label[0], slot.label[1], lo, hi,
                    slot.l, slot.family_p, path, parent)

    def second_kind_child(self, parent: Band, a: int, slot: ChildSlot):
        """The II child of an I band, through t_(k,2), ..., t_(k,a) = t_(k+2,0)."""
        k = parent.order
        path = parent.path + (symbol(Kind.II),)
        level, power = slot.label
        if a == 1:
            # t_(k+2,0) = t_(k,1): the same band
            return Band(k + 1, Kind.II, level, power, parent.lo, parent.hi, 0, 0, path, parent), []
        tol = self.tol_for(parent)
        window = IndexWindow(1, 1)
        added = []
        current = parent
        try:
            for p in range(1, a):
                label = (level, power) if p + 1 == a else (k, p + 1)
                x0, x1 = self.preimage(current, window, tol)
                lo, hi = self.resolve(label, x0, x1, tol, path)
                if not self.monotone(label, lo, hi):
                    raise BracketFailure(f"t{label} not monotone on its band", path)
                if p + 1 < a:
                    current = Band(k, Kind.ADDED, k, p + 1, lo, hi, 1, 1, path, current)
                    added.append(current)
        except (BracketFailure, PrecisionExhausted):
            lo, hi = self.scan((level, power), parent.lo, parent.hi, tol, None, path)
            added = self.added_rungs_by_scan(parent, a, tol, path)
        child = Band(k + 1, Kind.II, level, power, lo, hi, 0, 0, path, parent)
        for rung in added:
            rung.path = path
        return child, added

    def added_rungs_by_scan(self, parent: Band, a: int, tol, path):
        k = parent.order
        out = []
        current = parent
        for p in range(2, a):
            lo, hi = self.scan((k, p), current.lo, current.hi, tol, None, path)
            current = Band(k, Kind.ADDED, k, p, lo, hi, 1, 1, path, current)
            out.append(current)
        return out


class BandTree:
    """Generations G_0 .. G_n for one frequency and coupling."""

    def __init__(self, cf: ContinuedFraction, params: SpectralParams, threads: int = 1, rel_tol=REL_TOL):
        self.cf = cf
        self.params = params
        self.threads = max(1, int(threads))
        self.locator = Locator(cf, params, rel_tol)
        self.root, first = roots(params)
        self.generations: list[list[Band]] = [first]
        self._added: dict[tuple[str, ...], tuple[Band, ...]] = {}
        self._kids: dict[int, list[Band]] | None = None

    @property
    def evaluator(self) -> Evaluator:
        return self.locator.ev

    @property
    def depth(self) -> int:
        return len(self.generations) - 1

    def generation(self, n: int) -> list[Band]:
        if n < 0 or n > self.depth:
            raise IndexError(f"order {n} not enumerated (depth {self.depth})")
        return self.generations[n]

    def bands(self, upto: int | None = None) -> Iterable[Band]:
        last = self.depth if upto is None else upto
        for gen in self.generations[: last + 1]:
            yield from gen

    def children_of(self, band: Band) -> list[Band]:
        """Enumerated children of ``band`` in path order (empty at the deepest order)."""
        return children_index(self).get(id(band), [])

    def counts(self, n: int) -> tuple[int, int, int]:
        gen = self.generation(n)
        return tuple(sum(1 for b in gen if b.kind is kind) for kind in (Kind.I, Kind.II, Kind.III))

    def _expand(self, parent: Band):
        try:
            return self.locator.children(parent)
        except BracketFailure as exc:
            if not exc.path:
                exc.path = parent.path
            raise

    def extend(self, n_max: int) -> "BandTree":
        if n_max < 0:
            raise ConfigError("order must be >= 0")
        if not self.cf.available(n_max):
            from .errors import TruncationExceeded
            raise TruncationExceeded(f"order {n_max} needs more quotients than the truncated expansion has")
        while self.depth < n_max:
            parents = self.generations[-1]
            if self.threads > 1:
                with ThreadPoolExecutor(self.threads) as pool:
                    results = list(pool.map(self._expand, parents))
            else:
                results = [self._expand(p) for p in parents]
            nxt = []
            for children, added in results:
                nxt.extend(children)
                if added:
                    self._added[children[0].path] = tuple(added)
            nxt.sort(key=lambda b: b.key)
            self.generations.append(nxt)
            self._kids = None
        return self

    def added_rungs(self, band: Band) -> tuple[Band, ...]:
        """Rungs B_(k,2) .. B_(k,a-1) between an I band and its II child."""
        if band.kind is not Kind.II:
            return ()
        a = self.cf.quotient(band.order)
        if a <= 2:
            return ()
        if band.path not in self._added:
            _, added = self.locator.second_kind_child(band.parent, a, child_plan(band.parent, a)[0])
            self._added[band.path] = tuple(added)
        return self._added[band.path]

    def find(self, path: tuple[str, ...]) -> Band:
        if not path:
            return self.root
        for b in self.generation(len(path) - 1):
            if b.path == path:
                return b
        raise KeyError(path_text(path))

    # -- persistence ----------------------------------------------------

    @staticmethod
    def record(b: Band) -> dict:
        return {
            "order": b.order,
            "kind": b.kind.value,
            "level": b.level,
            "power": b.power,
            "l": b.index_l,
            "path": path_text(b.path),
            "lo": to_decimal(b.lo),
            "hi": to_decimal(b.hi),
            "parent_path": path_text(b.parent.path) if b.parent is not None else "",
        }

    def records(self, upto: int | None = None) -> Iterable[str]:
        for b in self.bands(upto):
            yield json.dumps(self.record(b))

    def dump(self, fh, upto: int | None = None):
        for line in self.records(upto):
            fh.write(line + "\n")

    def load_records(self, lines: Iterable[str]) -> "BandTree":
        """Rebuild generations from dump records (replacing current content)."""
        prec = self.params.precision_bits
        by_path: dict[tuple[str, ...], Band] = {(): self.root}
        gens: list[list[Band]] = []
        for line in lines:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            path = parse_path(rec["path"])
            parent = by_path.get(parse_path(rec["parent_path"]))
            if parent is None:
                raise SturmbandError(f"record {rec['path']} precedes its parent")
            kind = Kind(rec["kind"])
            l = int(rec["l"])
            p = 0
            if kind in (Kind.I, Kind.III) and parent.kind is not Kind.ROOT:
                slots = child_plan(parent, self.cf.quotient(parent.order + 1))
                p = next(s.family_p for s in slots if s.kind is kind and s.l == l)
            band = Band(int(rec["order"]), kind, int(rec["level"]), int(rec["power"]),
                        mp(rec["lo"], prec), mp(rec["hi"], prec), l, p, path, parent)
            if band.order != len(gens) - 1 and band.order != len(gens):
                raise SturmbandError("records are not grouped by order")
            if band.order == len(gens):
                gens.append([])
            gens[band.order].append(band)
            by_path[path] = band
        if not gens:
            raise SturmbandError("no band records")
        for k, gen in enumerate(gens):
            if len(gen) != sum(expected_counts(self.cf, k)[k]):
                raise SturmbandError(f"order {k} is incomplete in the records")
        self.generations = gens
        self._added.clear()
        self._kids = None
        return self


def children_index(tree) -> dict[int, list[Band]]:
    """id(parent) -> children, for any object with ``generations``; cached on BandTree."""
    kids = getattr(tree, "_kids", None)
    if kids is None:
        kids = {}
        for gen in tree.generations:
            for b in gen:
                kids.setdefault(id(b.parent), []).append(b)
        if hasattr(tree, "_kids"):
            tree._kids = kids
    return kids


def enumerate_bands(cf: ContinuedFraction, params: SpectralParams, n_max: int, threads: int = 1,
                    rel_tol=REL_TOL) -> BandTree:
    """Enumerate G_0 .. G_{n_max}."""
    return BandTree(cf, params, threads, rel_tol).extend(n_max)


def locate_child(parent: Band, slot: ChildSlot, locator: Locator) -> Band:
    """Resolve one slot of ``child_plan(parent, ...)``."""
    if parent.kind is Kind.I:
        a = locator.cf.quotient(parent.order + 1)
        return locator.second_kind_child(parent, a, slot)[0]
    return locator.window_child(parent, slot)
