import numpy as np
import pytest

from qsteer import canonical, lp_engine, povm_lab, qstate


@pytest.fixture(scope="module")
def setting(icosa42, icosa42_normals):
    can = canonical.canonicalize(qstate.random_state(11))
    n = len(icosa42.vertices)
    u = np.full(n, 1.0 / n)
    return (can.a, can.s), icosa42, icosa42_normals, u


def test_candidate_invariants_roundtrip():
    rng = np.random.default_rng(0)
    cand = povm_lab._random_candidate(rng)
    cand.validate()
    effects = cand.effects()
    assert np.allclose(np.sum(effects, axis=0), np.eye(2), atol=1e-10)
    for e in effects:
        vals = np.linalg.eigvalsh(e)
        assert vals[0] >= -1e-12
        assert vals[0] < 1e-10  # rank-1 scaled: one eigenvalue is zero
    assert np.allclose(np.sum(cand.observables(), axis=0), 0, atol=1e-12)


def test_candidate_validation_catches_violations():
    rng = np.random.default_rng(1)
    cand = povm_lab._random_candidate(rng)
    broken = povm_lab.PovmCandidate(w=cand.w * 1.01, e=cand.e, z=cand.z)
    with pytest.raises(ValueError):
        broken.validate()
    broken_z = povm_lab.PovmCandidate(w=cand.w, e=cand.e, z=cand.z + 0.01)
    with pytest.raises(ValueError):
        broken_z.validate()


def test_seeded_candidate_achieves_r2(setting):
    pair, poly, normals, u = setting
    r2inv = povm_lab.exact_r2_inverse(pair, u, normals, poly.vertices)
    cand = povm_lab.seeded_candidate(pair, u, normals, poly.vertices)
    cand.validate()
    value = povm_lab.inverse_fraction(pair, poly, u, cand)
    assert abs(value - r2inv) < 1e-12 * r2inv


def test_negative_numerator_convention(setting):
    pair, poly, normals, u = setting
    cand = povm_lab.seeded_candidate(pair, u, normals, poly.vertices)
    flipped = povm_lab.PovmCandidate(w=cand.w, e=-cand.e, z=cand.z)
    assert povm_lab.inverse_fraction(pair, poly, u, flipped) == 0.0


def test_random_candidates_below_r2(setting, rng):
    pair, poly, normals, u = setting
    r2inv = povm_lab.exact_r2_inverse(pair, u, normals, poly.vertices)
    for _ in range(100):
        value = povm_lab.inverse_fraction(
            pair, poly, u, povm_lab._random_candidate(rng))
        assert value <= r2inv + 1e-9


def test_inverse_fraction_rejects_bad_weights(setting):
    pair, poly, normals, u = setting
    rng = np.random.default_rng(2)
    cand = povm_lab._random_candidate(rng)
    with pytest.raises(lp_engine.WeightResidualError):
        povm_lab.inverse_fraction(pair, poly, np.full(len(u), 0.5), cand)


def test_exact_r2_scaling(setting):
    pair, poly, normals, u = setting
    a, s = pair
    base = povm_lab.exact_r2_inverse((a, s), u, normals, poly.vertices)
    scaled = povm_lab.exact_r2_inverse((0.5 * a, 0.5 * s), u, normals,
                                       poly.vertices)
    assert abs(scaled - 0.5 * base) < 1e-12


def test_random_ensemble_contract(icosa42):
    u1 = povm_lab.random_ensemble(icosa42, 5)
    u2 = povm_lab.random_ensemble(icosa42, 6)
    for u in (u1, u2):
        assert abs(np.sum(u) - 1.0) < 1e-10
        assert np.linalg.norm(u @ icosa42.vertices) < 1e-10
        assert np.min(u) >= 0
    assert not np.allclose(u1, u2)


def test_anneal_determinism(setting):
    pair, poly, normals, u = setting
    sched = povm_lab.AnnealSchedule(seed=4, restarts=1, n_temperatures=3,
                                    steps_per_temperature=30)
    r1 = povm_lab.anneal_r4(pair, poly, u, sched, polish_rounds=3,
                            polish_steps=20)
    r2 = povm_lab.anneal_r4(pair, poly, u, sched, polish_rounds=3,
                            polish_steps=20)
    assert r1 == r2


def test_anneal_n2_slice_recovers_r2(setting):
    pair, poly, normals, u = setting
    r2 = 1.0 / povm_lab.exact_r2_inverse(pair, u, normals, poly.vertices)
    sched = povm_lab.AnnealSchedule(seed=3, restarts=2)
    r4 = povm_lab.anneal_r4(pair, poly, u, sched, n_outcomes=2, debug=True)
    assert abs(r4 - r2) / r2 < 1e-3


def test_anneal_seeded_never_below_r2(setting):
    pair, poly, normals, u = setting
    r2inv = povm_lab.exact_r2_inverse(pair, u, normals, poly.vertices)
    start = povm_lab.seeded_candidate(pair, u, normals, poly.vertices)
    sched = povm_lab.AnnealSchedule(seed=8, restarts=1, n_temperatures=2,
                                    steps_per_temperature=20)
    r4 = povm_lab.anneal_r4(pair, poly, u, sched, start=start,
                            polish_rounds=2, polish_steps=10)
    assert 1.0 / r4 >= r2inv - 1e-9


def test_schedule_validation():
    with pytest.raises(ValueError):
        povm_lab.AnnealSchedule(cooling=1.5)
    with pytest.raises(ValueError):
        povm_lab.AnnealSchedule(steps_per_temperature=0)
