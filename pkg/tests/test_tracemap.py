import math
import random

import gmpy2
import pytest
from hypothesis import given, settings, strategies as st

from oracles import chebyshev_closed, fricke, literal_traces
from sturmband import SpectralParams, parse_cf
from sturmband.errors import ConfigError, CouplingTooSmall, DomainViolation, InvalidLabel
from sturmband.hp import mp, working
from sturmband.tracemap import Evaluator, chebyshev, state_at, trace_at, z_branch


def rel(a, b, bits=4096):
    with working(bits):
        return float(abs(a - b) / max(1, abs(b)))


@pytest.mark.parametrize("spec", ["per:1", "per:2", "[0;1,2,(3,4)]"])
def test_matches_literal_products(spec):
    cf = parse_cf(spec)
    ev = Evaluator(cf, SpectralParams(24))
    rng = random.Random(7)
    for _ in range(5):
        x = rng.uniform(-3, 27)
        for (k, p), want in literal_traces(cf, 6, (-1, 0, 1, 2), x, 24).items():
            assert rel(ev.trace(k, p, x)[0], want) < 1e-40, (k, p, x)


def test_low_levels_by_hand():
    ev = Evaluator(parse_cf("per:1"), SpectralParams(24))
    x = mp("0.7", 192)
    assert ev.trace(0, 0, x)[0] == 2
    assert ev.trace(1, 0, x)[0] == x
    with working(192):
        assert ev.trace(0, 1, x)[0] == x - 24
        assert ev.trace(0, -1, x)[0] == x + 24


@settings(max_examples=40, deadline=None)
@given(st.floats(-4, 30), st.integers(0, 9), st.sampled_from(["per:1", "per:2", "per:1,3"]))
def test_fricke_invariant(x, k, spec):
    cf = parse_cf(spec)
    ev = Evaluator(cf, SpectralParams(24))
    a = cf.quotient(k + 1)
    v = ev.trace(k + 1, 0, x)[0]
    for p in range(0, a + 1):
        y, z = ev.trace(k, p, x)[0], ev.trace(k, p + 1, x)[0]
        with working(192):
            scale = max(mp(576, 192), y * y + z * z + v * v)
            assert abs(fricke(v, y, z) - 576) / scale < 1e-40


@settings(max_examples=30, deadline=None)
@given(st.floats(-4, 30), st.integers(0, 7), st.integers(-1, 3))
def test_derivative_matches_difference(x, k, p):
    ev = Evaluator(parse_cf("per:1,2"), SpectralParams(24, 256))
    t, d = ev.trace(k, p, x)
    h = mp("1e-30", 256)
    with working(256):
        up = ev.trace(k, p, mp(x, 256) + h)[0]
        dn = ev.trace(k, p, mp(x, 256) - h)[0]
        fd = (up - dn) / (2 * h)
        assert abs(fd - d) <= mp("1e-20", 256) * max(1, abs(d))


@given(st.integers(0, 40), st.floats(-1.999, 1.999))
def test_chebyshev_closed_form(p, t):
    assert chebyshev(p, t).value == pytest.approx(chebyshev_closed(p, t), abs=1e-9 * (p + 1) ** 2)


def test_chebyshev_small():
    assert chebyshev(-1, 0.3).value == -1
    assert chebyshev(0, 0.3).value == 0
    assert chebyshev(1, 0.3).value == 1
    assert chebyshev(2, 0.3).value == pytest.approx(0.3)
    assert chebyshev(3, 0.3).derivative == pytest.approx(0.6)
    with pytest.raises(ValueError):
        chebyshev(-2, 0.0)


def test_z_branch_solves_fricke():
    V = mp(24, 192)
    with working(192):
        x, y = mp("0.3", 192), mp("-1.1", 192)
        for sign in (1, -1):
            z = z_branch(x, y, V, sign).value
            assert abs(fricke(x, y, z) - V * V) < mp("1e-50", 192)
    with pytest.raises(DomainViolation):
        z_branch(3.0, 0.0, 24.0, 1)


def test_state_and_trace_at_agree():
    cf = parse_cf("per:2")
    params = SpectralParams(30)
    with working(192):
        st_ = state_at(cf, 4, mp(1.25, 192), params.V)
    assert trace_at(cf, params, 5, 0, 1.25)[0] == st_.v
    assert rel(trace_at(cf, params, 4, 1, 1.25)[0], st_.w, 192) < 1e-50


def test_bad_inputs():
    ev = Evaluator(parse_cf("per:1"), SpectralParams(24))
    with pytest.raises(InvalidLabel):
        ev.trace(0, -2, 0.0)
    with pytest.raises(InvalidLabel):
        ev.trace(-1, 0, 0.0)
    with pytest.raises(ConfigError):
        SpectralParams(24, 32)
    with pytest.raises(ConfigError):
        SpectralParams("abc")
    with pytest.raises(CouplingTooSmall):
        SpectralParams(20).require_band_regime()


def test_solve_finds_level_crossing():
    ev = Evaluator(parse_cf("per:1"), SpectralParams(24))
    x = ev.solve(1, 0, 2, -2.5, 2.5, mp("1e-50", 192))
    assert abs(x - 2) < mp("1e-45", 192)
