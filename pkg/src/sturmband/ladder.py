"""Initial and modified ladders.

A ladder is the nested chain B_k ⊃ ... ⊃ B_n above one band.  The modified
ladder drops the I rung whose successor coincides with it (a = 1) and
inserts the rungs B_(i,2) .. B_(i,a-1) below an I rung when a > 2.  On the
modified ladder consecutive generating traces obey

    h_{i+1} = z(h_i, h_{i-1}) S_{p_i+1}(h_i) - h_{i-1} S_{p_i}(h_i)

with p_i read from the rung types, and h_i maps B_{i+1} into the window
I_{p_i, l_i}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2

from .bandtree import Band, BandTree, IndexWindow, Kind
from .errors import InadmissiblePath, ZeroDerivative
from .hp import working
from .tracemap import chebyshev, z_branch


@dataclass(frozen=True)
class Rung:
    """One modified-ladder rung.

    ``band`` carries the set and trace.  ``entry`` is the band the previous
    rung sees as its child: the I band itself when a deleted successor
    shares its set, otherwise ``band``.  ``role`` picks the p-table row.
    """

    band: Band
    role: Kind
    entry: Band

    @property
    def label(self):
        return self.band.label

    @property
    def order(self) -> int:
        return self.band.order

    @property
    def kind(self) -> Kind:
        return self.role


@dataclass
class Ladder:
    initial: list[Band]
    rungs: list[Rung]
    p_seq: list  # p_i for 0 < i < m; None at the ends
    l_seq: list
    deleted: list[Band] = field(default_factory=list)
    added: list[Band] = field(default_factory=list)

    @property
    def m(self) -> int:
        return len(self.rungs) - 1

    @property
    def h_labels(self) -> list[tuple[int, int]]:
        return [r.label for r in self.rungs]

    @property
    def top(self) -> Band:
        return self.rungs[-1].band


def _check_admissible(chain: list[Band]):
    for parent, child in zip(chain, chain[1:]):
        if child.parent is not parent:
            raise InadmissiblePath("ladder bands are not a parent chain")
        if parent.kind is Kind.ROOT:
            ok = child.kind in (Kind.I, Kind.III)
        elif parent.kind is Kind.I:
            ok = child.kind is Kind.II
        else:
            ok = child.kind in (Kind.I, Kind.III)
        if not ok:
            raise InadmissiblePath(f"{parent.kind} band cannot contain a {child.kind} child")


def p_value(role: Kind, next_kind: Kind, a_next: int) -> int:
    """Type-sequence entry for a ``role`` rung whose child is ``next_kind``; a_next = a_{k+1}."""
    if role in (Kind.I, Kind.ADDED):
        return 1
    if role is Kind.III:
        return a_next if next_kind is Kind.I else a_next - 1
    if role is Kind.II:
        return a_next + 1 if next_kind is Kind.I else a_next
    raise InadmissiblePath(f"no p value after a {role} rung")


def build_ladder(band: Band, tree: BandTree, start: int = -1) -> Ladder:
    """Modified ladder from the order-``start`` ancestor down to ``band``."""
    if start < -1 or start > band.order:
        raise InadmissiblePath(f"start order {start} outside -1..{band.order}")
    chain = band.chain()[start + 1:]
    _check_admissible(band.chain())
    cf = tree.cf
    rungs: list[Rung] = []
    deleted, added = [], []
    skip = False
    for idx, b in enumerate(chain):
        if skip:
            skip = False
            continue
        nxt = chain[idx + 1] if idx + 1 < len(chain) else None
        if b.kind is Kind.I and nxt is not None:
            a = cf.quotient(b.order + 1)
            if a == 1:
                # B_{i+1} = B_i with the same trace: one rung, acting as the II band
                deleted.append(nxt)
                rungs.append(Rung(nxt, Kind.II, b))
                skip = True
                continue
            rungs.append(Rung(b, Kind.I, b))
            if a > 2:
                extra = list(tree.added_rungs(nxt))
                rungs.extend(Rung(r, Kind.ADDED, r) for r in extra)
                added.extend(extra)
            continue
        rungs.append(Rung(b, b.kind, b))
    m = len(rungs) - 1
    p_seq: list = [None] * (m + 1)
    l_seq: list = [None] * (m + 1)
    ev = tree.evaluator
    for i in range(1, m):
        r, nxt = rungs[i], rungs[i + 1]
        p = p_value(r.role, nxt.entry.kind, cf.quotient(r.order + 1))
        p_seq[i] = p
        l_seq[i] = _index(ev, r.band, nxt.band, p)
    return Ladder(chain, rungs, p_seq, l_seq, deleted, added)


def _index(ev, rung: Band, nxt: Band, p: int):
    """l with h_rung(nxt) inside I_{p,l}: midpoint first, then 5-sample majority."""
    h = ev.trace(rung.level, rung.power, nxt.midpoint)[0]
    for l in range(1, p + 1):
        if IndexWindow(p, l).contains(h):
            return l
    votes: dict[int, int] = {}
    for x in nxt.samples(7)[1:-1]:
        h = ev.trace(rung.level, rung.power, x)[0]
        for l in range(1, p + 1):
            if IndexWindow(p, l).contains(h):
                votes[l] = votes.get(l, 0) + 1
    if not votes:
        return None
    return max(sorted(votes), key=lambda l: votes[l])


def rung_values(ladder: Ladder, tree: BandTree, x) -> list:
    """[(h_i(x), h_i'(x)) for each rung]."""
    ev = tree.evaluator
    return [ev.trace(*r.label, x) for r in ladder.rungs]


def rung_ratio(ladder: Ladder, tree: BandTree, i: int, x) -> float:
    """|h'_{i+1}(x) / h'_i(x)|."""
    if not 0 < i < ladder.m:
        raise IndexError(f"rung index {i} outside 1..{ladder.m - 1}")
    ev = tree.evaluator
    d_i = ev.trace(*ladder.rungs[i].label, x)[1]
    d_n = ev.trace(*ladder.rungs[i + 1].label, x)[1]
    if d_i == 0:
        raise ZeroDerivative(f"h'_{i} vanishes at x = {float(x):.17g}")
    with working(tree.params.precision_bits):
        return float(abs(d_n / d_i))


def ratio_bounds(V: float, p: int) -> tuple[float, float]:
    return (V - 8) * (p + 1) / 3, (V + 8) * (p + 1) ** 3 / 4


def closure_residual(ladder: Ladder, tree: BandTree, i: int, x) -> float:
    """Relative residual of the one-step ladder formula at rung ``i``, best branch."""
    if not 0 < i < ladder.m:
        raise IndexError(f"rung index {i} outside 1..{ladder.m - 1}")
    ev = tree.evaluator
    prec = tree.params.precision_bits
    h_prev = ev.trace(*ladder.rungs[i - 1].label, x)[0]
    h = ev.trace(*ladder.rungs[i].label, x)[0]
    h_next = ev.trace(*ladder.rungs[i + 1].label, x)[0]
    p = ladder.p_seq[i]
    with working(prec):
        two = gmpy2.mpfr(2)
        h_c = max(-two, min(two, h))
        hp_c = max(-two, min(two, h_prev))
        s_hi = chebyshev(p + 1, h).value
        s_lo = chebyshev(p, h).value
        best = None
        for sign in (1, -1):
            z = z_branch(h_c, hp_c, tree.params.V, sign).value
            pred = z * s_hi - h_prev * s_lo
            r = abs(pred - h_next) / max(gmpy2.mpfr(1), abs(h_next))
            best = r if best is None else min(best, r)
    return float(best)
