import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sturmband import parse_cf
from sturmband.asymptotics import (LAW_HEADER, f_star, large_v_law, norm_growth, oracle_root,
                                   perron_root, period_product, r_matrix)
from sturmband.errors import DomainViolation, NoRootInUnitInterval


def test_golden_constant():
    assert f_star(parse_cf("per:1")) == pytest.approx(math.sqrt(2) - 1, abs=1e-12)
    assert f_star(parse_cf("per:1"), oracle=True) == pytest.approx(math.sqrt(2) - 1, abs=1e-12)


def test_period_two_constant():
    # x^3 + 3x^2 + x - 1 = (x + 1)(x^2 + 2x - 1)
    assert f_star(parse_cf("per:2")) == pytest.approx(math.sqrt(2) - 1, abs=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(1, 6), min_size=1, max_size=3), st.floats(0.05, 1.0))
def test_perron_matches_characteristic_root(period, x):
    cf = parse_cf("per:" + ",".join(map(str, period)))
    P = period_product(cf, x)
    want = max(abs(np.linalg.eigvals(P)))
    assert perron_root(P) == pytest.approx(want, rel=1e-10)
    assert oracle_root(P) == pytest.approx(want, rel=1e-10)


def test_preperiod_does_not_matter():
    assert f_star(parse_cf("[0;5,2,(1)]")) == pytest.approx(f_star(parse_cf("per:1")), abs=1e-14)


def test_norm_growth_near_one_at_root():
    cf = parse_cf("per:1,2")
    x = f_star(cf)
    assert norm_growth(cf, x, 600) == pytest.approx(1, abs=5e-3)


def test_domain():
    with pytest.raises(DomainViolation):
        r_matrix(1, 1.5)
    with pytest.raises(DomainViolation):
        r_matrix(1, 0.0)
    with pytest.raises(NoRootInUnitInterval):
        f_star(parse_cf("trunc:1,1"))


def test_large_v_table():
    rows = large_v_law(parse_cf("per:1"), [100, 1000], 5)
    assert LAW_HEADER.count(",") == rows[0].csv().count(",")
    for r in rows:
        assert r.s_lnV == pytest.approx(r.s * math.log(r.V))
        assert r.target == pytest.approx(math.log(1 + math.sqrt(2)))


def test_r_matrix_entries():
    assert r_matrix(1, 1.0).tolist() == [[0, 1, 0], [2, 0, 1], [1, 0, 0]]
    assert r_matrix(2, 0.5).tolist() == [[0, 0.5, 0], [1.5, 0, 1], [1, 0, 0.5]]


def test_unit_perron_root_is_golden_ratio():
    assert perron_root(r_matrix(1, 1.0)) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-13)


@pytest.mark.parametrize("spec", ["per:1", "per:3", "per:1,4,2"])
def test_perron_monotone_in_x(spec):
    cf = parse_cf(spec)
    rho = [perron_root(period_product(cf, x)) for x in np.linspace(0.01, 1.0, 100)]
    assert all(a < b for a, b in zip(rho, rho[1:]))


def test_law_row_matches_dimension_module():
    from sturmband import SpectralParams
    from sturmband.bandtree import enumerate_bands
    from sturmband.dimension import band_lengths, pre_dimension

    cf = parse_cf("per:1")
    row = large_v_law(cf, [100], 6)[0]
    tree = enumerate_bands(cf, SpectralParams(100, 192), 6)
    assert row.s == pre_dimension(band_lengths(tree.generations[6])).s
