import pytest

from sturmband.errors import ConfigError, OrderUnavailable
from sturmband.gibbs import (additivity_defect, build_measure, gibbs_ratio_report, progib_constant,
                             ratios, zeta_hat)


def test_normalization_and_additivity(golden_tree):
    for m in (4, 8, 12):
        mu = build_measure(golden_tree, 0.5, m)
        assert abs(mu.total() - 1) <= 1e-12
        assert additivity_defect(mu, golden_tree) <= 1e-12
        assert mu.mass(golden_tree.generations[0][0].path) + mu.mass(golden_tree.generations[0][1].path) \
            == pytest.approx(1, abs=1e-12)


def test_at_own_order_ratio_is_one(golden_tree):
    mu = build_measure(golden_tree, 0.3, 7)
    assert all(r == pytest.approx(1, rel=1e-12) for r in ratios(mu, golden_tree, 7))


def test_zeta_bounded(golden_tree):
    z = [zeta_hat(golden_tree, 0.5, m) for m in (8, 10, 12)]
    assert all(1 <= v < 5 for v in z)
    rows = gibbs_ratio_report(golden_tree, 0.5, 3, 8)
    assert [r.k for r in rows] == [1, 2, 3]
    assert progib_constant(golden_tree, 0.5, 5) >= 1


def test_errors(golden_tree):
    with pytest.raises(ConfigError):
        build_measure(golden_tree, 1.0, 4)
    with pytest.raises(OrderUnavailable):
        build_measure(golden_tree, 0.5, 40)
    with pytest.raises(OrderUnavailable):
        gibbs_ratio_report(golden_tree, 0.5, 5, 6)


def test_lines_are_decimal(golden_tree):
    mu = build_measure(golden_tree, 0.5, 3)
    line = mu.lines()[0]
    path, weight = line.split()
    assert "e" in weight and len(weight) > 30
