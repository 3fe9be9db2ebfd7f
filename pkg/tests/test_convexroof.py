import numpy as np
import pytest

import oracles
from pairent.convexroof import (ConcurrenceObjective, RoofObjective, check_isometry,
                                convex_roof, descend, eigen_ensemble, make_objective,
                                pairwise_condition_check, polar, steer_ensemble, _eigen_rows)
from pairent.errors import UsageError
from pairent.measure import measure_m
from pairent.probes import ProbeKind, concurrence, entanglement_of_formation
from pairent.qstate import (DensityMatrix, density_of, ghz, mems, named_state, partial_trace,
                            random_mixed, random_pure)


def test_pure_eigen_ensemble():
    dec = eigen_ensemble(density_of(random_pure(2, 2, 0)))
    assert dec.size == 1 and dec.weights[0] == pytest.approx(1)


def test_maximally_mixed_eigen_ensemble():
    dec = eigen_ensemble(DensityMatrix(np.eye(4) / 4, 2))
    assert dec.size == 4
    assert np.allclose(dec.weights, 0.25)
    for m in dec.members:
        assert abs(np.linalg.norm(m.amplitudes) - 1) < 1e-12


def test_mems_half_eigen_ensemble():
    dec = eigen_ensemble(mems(0.5))
    assert dec.size == 2
    assert sorted(dec.weights) == pytest.approx([0.5, 0.5])
    assert dec.residual(mems(0.5)) < 1e-12


def test_steer_identity_and_rotation():
    rho = DensityMatrix((np.diag([1, 0, 0, 0]) + np.diag([0, 0, 0, 1])) / 2, 2)
    base = eigen_ensemble(rho)
    same = steer_ensemble(base, np.eye(2))
    assert np.allclose(same.weights, base.weights)
    h = np.array([[1, 1], [1, -1]]) / np.sqrt(2)
    turned = steer_ensemble(base, h)
    assert turned.residual(rho) <= 1e-10
    assert abs(turned.weights.sum() - 1) <= 1e-10
    # members are the two Bell states (|00> +- |11>)/sqrt(2)
    for m in turned.members:
        assert abs(concurrence(density_of(m)) - 1) < 1e-12


@pytest.mark.parametrize("seed", range(10))
def test_random_isometry_preserves_state(seed):
    rng = np.random.default_rng(seed)
    rho = random_mixed(2, 2, 3, rng)
    base = eigen_ensemble(rho)
    v = polar(rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3)))
    dec = steer_ensemble(base, v)
    assert dec.residual(rho) <= 1e-10
    assert abs(dec.weights.sum() - 1) <= 1e-10
    assert 3 <= dec.size <= 6


def test_non_isometry_rejected():
    base = eigen_ensemble(mems(0.5))
    with pytest.raises(UsageError):
        steer_ensemble(base, np.ones((3, 2)))
    with pytest.raises(UsageError):
        check_isometry(np.eye(3), rows=2)


@pytest.mark.parametrize("seed", range(5))
def test_concurrence_gradient_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    rho = random_mixed(2, 2, 3, rng)
    rows = _eigen_rows(rho)
    closed = ConcurrenceObjective(rows, 2, 2, ProbeKind.QC)
    generic = RoofObjective(rows, 2, 2, ProbeKind.QC)
    v = polar(rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3)))
    assert closed.value(v) == pytest.approx(generic.value(v), abs=1e-10)
    assert np.abs(closed.gradient(v) - generic.gradient(v)).max() < 1e-5


def test_make_objective_selects_closed_form():
    rows = _eigen_rows(mems(0.5))
    assert isinstance(make_objective(rows, 2, 2, ProbeKind.QC), ConcurrenceObjective)
    assert type(make_objective(rows, 2, 2, ProbeKind.FR)) is RoofObjective


def test_descend_stays_on_manifold():
    rng = np.random.default_rng(1)
    rho = random_mixed(2, 2, 4, rng)
    obj = make_objective(_eigen_rows(rho), 2, 2, ProbeKind.QC)
    v0 = polar(rng.standard_normal((6, 4)) + 1j * rng.standard_normal((6, 4)))
    v, f, _ = descend(obj, v0)
    assert np.abs(v.conj().T @ v - np.eye(4)).max() < 1e-10
    assert f <= obj.value(v0) + 1e-15


def test_pure_input_is_exact():
    psi = random_pure(3, 2, 5)
    res = convex_roof(density_of(psi), "fr")
    assert res.restarts == 0 and res.converged
    assert res.value == pytest.approx(measure_m(psi, "fr").m_value, abs=1e-12)


def test_bell_projector_roof_is_one():
    res = convex_roof(mems(1), "qc", restarts=4)
    assert res.value == pytest.approx(1, abs=1e-12)


def werner(p):
    bell = density_of(named_state("epr")).matrix
    return DensityMatrix(p * bell + (1 - p) * np.eye(4) / 4, 2)


@pytest.mark.parametrize("p", [1.0, 0.6, 0.2])
def test_werner_roof(p):
    # closed form C = max(0, (3p - 1) / 2)
    res = convex_roof(werner(p), "qc", restarts=16)
    assert res.value == pytest.approx(max(0.0, (3 * p - 1) / 2), abs=1e-6)


@pytest.mark.parametrize("seed", range(8))
def test_concurrence_roof_matches_wootters(seed):
    rng = np.random.default_rng(100 + seed)
    rho = random_mixed(2, 2, int(rng.integers(2, 5)), rng)
    res = convex_roof(rho, "qc", restarts=32, seed=seed)
    assert abs(res.value - oracles.concurrence(rho.matrix)) <= 1e-3
    assert res.upper_bound
    assert res.decomposition.residual(rho) <= 1e-8


@pytest.mark.parametrize("seed", range(4))
def test_fr_roof_at_least_eof(seed):
    rho = random_mixed(2, 2, 2, seed)
    res = convex_roof(rho, "fr", restarts=16, seed=seed)
    assert res.value >= entanglement_of_formation(rho) - 1e-3


def test_fr_roof_of_mems_is_eof():
    res = convex_roof(mems(0.8), "fr", restarts=16)
    assert res.value == pytest.approx(oracles.eof_from_concurrence(0.8), abs=1e-4)


def test_best_so_far_non_increasing_and_prefix_stable():
    rho = random_mixed(2, 2, 4, 11)
    short = convex_roof(rho, "qc", restarts=6, seed=3)
    long = convex_roof(rho, "qc", restarts=12, seed=3)
    assert long.trace[:6] == short.trace
    assert np.all(np.diff(long.best_so_far) <= 0)
    assert long.value <= short.value


def test_jobs_do_not_change_result():
    rho = random_mixed(2, 2, 3, 2)
    a = convex_roof(rho, "qc", restarts=4, seed=1)
    b = convex_roof(rho, "qc", restarts=4, seed=1, jobs=2)
    assert a.trace == b.trace and a.value == b.value


def test_member_cap_below_rank():
    with pytest.raises(UsageError):
        convex_roof(random_mixed(2, 2, 3, 0), "qc", member_cap=2)


def test_qc_roof_needs_qubits():
    with pytest.raises(UsageError):
        convex_roof(random_mixed(2, 3, 2, 0), "qc")


def test_three_site_roof_profile():
    rho = partial_trace(ghz(4), [0, 1, 2])
    res = convex_roof(rho, "fr", restarts=4)
    assert res.decomposition.residual(rho) <= 1e-8
    assert res.profile.n == 3
    assert res.value <= res.eigen_value + 1e-15


@pytest.mark.parametrize("seed", range(4))
def test_pairwise_condition_qc_rank2(seed):
    rep = pairwise_condition_check(random_mixed(2, 2, 2, seed), "qc", restarts=16)
    assert rep.satisfied


def test_pairwise_condition_pure():
    rep = pairwise_condition_check(density_of(random_pure(2, 2, 3)), "fr")
    assert rep.direct == pytest.approx(rep.roof, abs=1e-12)
    assert rep.satisfied


def test_pairwise_condition_fails_for_fr_on_mems():
    # Fr(mems:0.8) = 0.610 sits below its roof (= EoF = 0.722)
    rep = pairwise_condition_check(mems(0.8), "fr", restarts=16)
    assert rep.direct == pytest.approx(0.609986547010987, abs=1e-12)
    assert rep.roof == pytest.approx(0.721928094887362, abs=1e-4)
    assert not rep.satisfied
