import pytest

from pairent import checks


@pytest.mark.parametrize("name", sorted(checks.SUITES))
def test_suites_pass_small(name):
    res = checks.SUITES[name](trials=40, seed=5)
    assert res.ok, res
    assert res.worst_margin >= 0


def test_suite_reports_replayable_seed():
    res = checks.lu_invariance(n=3, trials=10, seed=2)
    assert res.worst_seed in {checks.trial_seed(2, i) for i in range(10)}


def test_qutrit_normalization():
    res = checks.normalization(n=3, d=3, trials=50)
    assert res.ok


def test_qutrit_lu_uses_fr_only():
    assert checks.lu_invariance(n=3, d=3, trials=5).ok
