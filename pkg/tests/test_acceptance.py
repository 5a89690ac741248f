"""Acceptance criteria, one PASS/FAIL line each.

Run under pytest, or directly: ``python tests/test_acceptance.py``.
"""

import math
import os
import random
import subprocess
import sys
import tempfile

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from oracles import literal_traces  # noqa: E402
from sturmband import SpectralParams, parse_cf  # noqa: E402
from sturmband.asymptotics import f_star, large_v_law  # noqa: E402
from sturmband.audit import Auditor, drift_ok  # noqa: E402
from sturmband.bandtree import Kind, enumerate_bands, expected_counts  # noqa: E402
from sturmband.dimension import band_lengths, pre_dimension  # noqa: E402
from sturmband.gibbs import additivity_defect, build_measure  # noqa: E402
from sturmband.hp import working  # noqa: E402
from sturmband.tracemap import Evaluator  # noqa: E402

# pinned tolerances
F_STAR_GOLDEN = 0.4142135624
F_STAR_TOL = 1e-9
BRACKET = (0.184621, 0.656288)
ORACLE_TOL = 1e-20
ORACLE_ENERGIES = 100
ENDPOINT_TOL = 1e-20
ROOT_TOL = 1e-12
DRIFT = 1.05
MASS_TOL = 1e-12


def _report(n: int, ok: bool, text: str):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {text}", flush=True)


_trees = {}


def golden_tree(depth=12):
    key = ("per:1", 24)
    tree = _trees.get(key)
    if tree is None or tree.depth < depth:
        tree = _trees[key] = enumerate_bands(parse_cf("per:1"), SpectralParams(24), depth)
    return tree


# -- criteria -------------------------------------------------------------


def c1():
    fs = f_star(parse_cf("per:1"))
    diff = abs(fs - F_STAR_GOLDEN)
    return diff <= F_STAR_TOL, f"f_star(golden) = {fs:.15f}, |f - {F_STAR_GOLDEN}| = {diff:.2e} <= {F_STAR_TOL:g}"


def c2():
    tree = golden_tree()
    s = {n: pre_dimension(band_lengths(tree.generations[n])).s for n in range(6, 11)}
    ok = all(BRACKET[0] <= v <= BRACKET[1] for v in s.values())
    vals = ", ".join(f"s_{n}={v:.6f}" for n, v in s.items())
    return ok, f"golden V=24 {vals} within [{BRACKET[0]}, {BRACKET[1]}]"


def c3():
    rows = large_v_law(parse_cf("per:1"), [100, 1000, 10000], 8)
    gaps = [r.gap for r in rows]
    ok = all(a > b for a, b in zip(gaps, gaps[1:]))
    vals = ", ".join(f"V={r.V:g}: {r.gap:.5f}" for r in rows)
    return ok, f"|s_8 lnV - ln(1+sqrt2)| {vals} (strictly decreasing required)"


def c4():
    worst, count = 0.0, 0
    rng = random.Random(20240607)
    for spec in ("per:1", "per:2"):
        cf = parse_cf(spec)
        ev = Evaluator(cf, SpectralParams(24, 192))
        for _ in range(ORACLE_ENERGIES):
            x = rng.uniform(-4.0, 28.0)
            for (k, p), want in literal_traces(cf, 8, (-1, 0, 1, 2), x, 24).items():
                got = ev.trace(k, p, x)[0]
                with working(max(want.precision, 192)):
                    r = float(abs(got - want) / max(1, abs(want)))
                worst = max(worst, r)
                count += 1
    return worst <= ORACLE_TOL, f"{count} trace values (k<=8, p=-1..2, golden and [2]) worst relative residual {worst:.2e} <= {ORACLE_TOL:g}"


def c5():
    tree = golden_tree(12)
    problems = []
    expect = expected_counts(tree.cf, 12)
    got = [tree.counts(k) for k in range(13)]
    if got != expect:
        problems.append("counts")
    same, strict = 0, 0
    for b in tree.bands():
        if b.order == 0:
            continue
        p = b.parent
        if b.kind is Kind.II and tree.cf.quotient(p.order + 1) == 1:
            # a = 1: the second-kind child is the parent band itself
            if (b.lo, b.hi) != (p.lo, p.hi):
                problems.append(f"{b} differs from parent")
            same += 1
        elif p.strictly_contains(b):
            strict += 1
        else:
            problems.append(f"{b} not strictly inside")
    for k in range(13):
        ordered = sorted(tree.generations[k], key=lambda b: b.lo)
        if any(a.hi >= b.lo for a, b in zip(ordered, ordered[1:])):
            problems.append(f"overlap at order {k}")
    ev = tree.evaluator
    worst = 0.0
    for b in tree.bands():
        for x in (b.lo, b.hi):
            t = ev.trace(*b.label, x)[0]
            with working(tree.params.precision_bits):
                worst = max(worst, float(abs(abs(t) - 2)))
    if worst > ENDPOINT_TOL:
        problems.append("endpoints")
    totals = [sum(c) for c in got]
    return not problems, (f"totals {totals[:8]}..{totals[12]} match recursion; {strict} strict children, "
                          f"{same} second-kind children equal to their parent (a=1); "
                          f"worst endpoint ||t|-2| {worst:.1e}" + (f"; problems: {problems[:3]}" if problems else ""))


def c6():
    aud = Auditor(golden_tree(), depth=8)
    ids = (1, 2, 3, 7, 8, 9, 10)
    reps = aud.run(ids)
    bad = [r.name for r in reps if not r.ok]
    detail = ", ".join(f"{r.name}={'0' if r.ok else 'FAIL'}" for r in reps)
    return not bad, f"golden V=24 depth 8 violations: {detail}"


def c7():
    checked, worst, bracket_ok = 0, 0.0, True
    gens = [golden_tree().generations[n] for n in range(2, 13)]
    for V in (100, 1000, 10000):
        t = enumerate_bands(parse_cf("per:1"), SpectralParams(V, 256), 8)
        gens.extend(t.generations[n] for n in range(2, 9))
    for gen in gens:
        pd = pre_dimension(band_lengths(gen))
        checked += 1
        worst = max(worst, pd.residual)
        bracket_ok = bracket_ok and pd.f_minus > 1 > pd.f_plus
    ok = worst <= ROOT_TOL and bracket_ok
    return ok, f"{checked} pre-dimensions, worst |sum|B|^s - 1| {worst:.1e} <= {ROOT_TOL:g}, monotone bracket {'ok' if bracket_ok else 'broken'}"


def c8():
    tree = golden_tree()
    aud = Auditor(tree, depth=8)
    reps = aud.run((4, 5, 6, 12))
    parts, ok = [], True
    for r in reps:
        series = {d: r.series[d] for d in (6, 7, 8)}
        good, growth = drift_ok(series)
        ok = ok and good
        parts.append(f"{r.name} {series[6]:.4f}/{series[7]:.4f}/{series[8]:.4f} (max growth {growth:.4f})")
    worst_mass = 0.0
    for m in range(4, 13):
        mu = build_measure(tree, 0.5, m)
        worst_mass = max(worst_mass, abs(mu.total() - 1), additivity_defect(mu, tree))
    ok = ok and worst_mass <= MASS_TOL
    return ok, "; ".join(parts) + f"; Gibbs mass defect {worst_mass:.1e} <= {MASS_TOL:g}"


def c9():
    with tempfile.TemporaryDirectory() as tmp:
        outs = []
        for name in ("a.jsonl", "b.jsonl"):
            path = os.path.join(tmp, name)
            subprocess.run([sys.executable, "-m", "sturmband", "bands", "--alpha", "per:1", "--V", "24",
                            "--order", "10", "--seed", "0", "-o", path], check=True)
            with open(path, "rb") as fh:
                outs.append(fh.read())
    same = outs[0] == outs[1] and len(outs[0]) > 0
    return same, f"two bands runs, {len(outs[0])} bytes each, byte-identical={same}"


CRITERIA = [c1, c2, c3, c4, c5, c6, c7, c8, c9]


@pytest.mark.parametrize("n", range(1, 10))
def test_criterion(n, capsys):
    ok, text = CRITERIA[n - 1]()
    with capsys.disabled():
        print()
        _report(n, ok, text)
    assert ok, text


if __name__ == "__main__":
    failed = 0
    for n, fn in enumerate(CRITERIA, 1):
        ok, text = fn()
        _report(n, ok, text)
        failed += not ok
    sys.exit(1 if failed else 0)
