from fractions import Fraction
import math

import pytest
from hypothesis import given, strategies as st

from sturmband.cfrac import ContinuedFraction, convergent, growth_K, parse_cf
from sturmband.errors import (CFSyntaxError, InvalidQuotient, TruncationExceeded,
                              UnsupportedAperiodic)


def test_golden_quotients():
    cf = parse_cf("per:1")
    assert cf.quotients(6) == (1,) * 6
    assert cf.M == 1
    assert [convergent(cf, k).q for k in range(-1, 8)] == [0, 1, 1, 2, 3, 5, 8, 13, 21]


def test_bracket_form_with_preperiod():
    cf = parse_cf("[0;1,2,(3,4)]")
    assert cf.preperiod == (1, 2) and cf.period == (3, 4)
    assert cf.quotients(7) == (1, 2, 3, 4, 3, 4, 3)
    assert cf.M == 4


def test_spec_round_trip():
    for text in ("per:1", "per:2,1", "[0;1,2,(3,4)]", "trunc:1,1,2"):
        assert parse_cf(parse_cf(text).spec()).spec() == parse_cf(text).spec()


@pytest.mark.parametrize("text,err", [
    ("[0;1,2", CFSyntaxError),
    ("per:0", InvalidQuotient),
    ("[0;1,-2,(3)]", InvalidQuotient),
    ("[0;1,2,3]", UnsupportedAperiodic),
    ("per:", UnsupportedAperiodic),
    ("golden", CFSyntaxError),
])
def test_rejects(text, err):
    with pytest.raises(err):
        parse_cf(text)


def test_truncated():
    cf = parse_cf("trunc:2,1")
    assert cf.truncated and cf.available(2) and not cf.available(3)
    with pytest.raises(TruncationExceeded):
        cf.quotient(3)


def test_value_golden():
    v = parse_cf("per:1").value(bits=200)
    assert abs(float(v) - (math.sqrt(5) - 1) / 2) < 1e-15


@given(st.lists(st.integers(1, 9), min_size=1, max_size=4))
def test_convergent_determinant(period):
    cf = ContinuedFraction((), tuple(period))
    for k in range(0, 10):
        a, b = convergent(cf, k), convergent(cf, k - 1)
        assert a.p * b.q - b.p * a.q == (-1) ** (k + 1)


def test_convergents_approach_value():
    cf = parse_cf("[0;1,2,(3,4)]")
    alpha = cf.value(bits=256)
    for k in range(2, 12):
        c = convergent(cf, k)
        assert abs(alpha - Fraction(c.p, c.q)) < Fraction(1, c.q ** 2)


def test_growth_K():
    assert growth_K(parse_cf("per:1")) == 1.0
    assert growth_K(parse_cf("per:2,8")) == pytest.approx(4.0)
