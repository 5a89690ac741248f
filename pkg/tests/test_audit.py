import pytest

from sturmband.audit import CHECKS, HARD, Auditor, drift_ok, hard_failures, run_suite, select
from sturmband.errors import ConfigError


@pytest.fixture(scope="module")
def golden_reports(golden_tree):
    return {r.name: r for r in run_suite(golden_tree, "all", depth=8)}


def test_every_check_reports(golden_reports):
    assert set(golden_reports) == set(CHECKS.values())


def test_hard_suite_clean(golden_reports):
    assert not hard_failures(golden_reports.values())
    assert golden_reports["fricke_invariant"].extreme < 1e-40


def test_soft_series_cover_depths(golden_reports):
    for name in ("bounded_variation", "bounded_distortion", "bounded_covariation"):
        assert sorted(golden_reports[name].series)[-3:] == [6, 7, 8]
    assert sorted(golden_reports["gibbs_ratios"].series) == [4, 5, 6, 7, 8]


def test_mixed_frequency_hard(mixed_tree):
    assert not hard_failures(run_suite(mixed_tree, "hard"))


def test_select():
    assert select("hard") == list(HARD)
    assert select("fricke_invariant,7") == [1, 7]
    assert select(["contraction"]) == [10]
    with pytest.raises(ConfigError):
        select("nonsense")


def test_drift_rule():
    assert drift_ok({6: 1.0, 7: 1.04, 8: 1.08})[0]
    assert not drift_ok({6: 1.0, 7: 1.06, 8: 1.06})[0]
    assert drift_ok({7: 1.0, 8: 1.0}) == (False, None)


def test_depth_guard(golden_tree):
    with pytest.raises(ConfigError):
        Auditor(golden_tree, depth=golden_tree.depth + 1)


def test_summary_line(golden_reports):
    line = golden_reports["contraction"].summary()
    assert line.startswith("contraction population=") and line.endswith("verdict=pass")
