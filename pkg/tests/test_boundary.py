import hashlib

import numpy as np
import pytest

from qsteer import boundary, qstate, radius


def test_bisect_ray_singlet_matches_analytic():
    crossing = boundary.bisect_ray(qstate.singlet(), polytope_name="icosa-12")
    b = radius.critical_radius_bounds(qstate.singlet(), "icosa-12")
    assert crossing.alpha_star is not None
    lo, hi = crossing.bracket
    # along the Werner ray the crossing happens where R(1)/alpha = 1
    assert abs(lo - b.R_in) <= 1.1e-3
    assert abs(hi - b.R_out) <= 1.1e-3
    assert hi - lo <= (b.R_out - b.R_in) + 2.1e-3


def test_bisect_ray_no_crossing():
    crossing = boundary.bisect_ray(qstate.werner(0.2), polytope_name="icosa-12")
    assert crossing.alpha_star is None
    assert crossing.bracket is None


def test_alpha_scaling_invariant_on_canonical_bob_ray():
    # when Bob's marginal is I/2 the center ray coincides with the
    # exact-scaling noise line, so alpha * R(alpha) is constant
    rho = qstate.werner(0.9)
    base = radius.critical_radius_bounds(rho, "icosa-12")
    for alpha in (0.7, 0.4):
        mixed = boundary._mix_toward_center(rho, alpha)
        b = radius.critical_radius_bounds(mixed, "icosa-12")
        assert abs(alpha * b.R_in - base.R_in) < 1e-9
        assert abs(alpha * b.R_out - base.R_out) < 1e-9


def test_cross_section_deterministic_and_classified():
    spec = boundary.SectionSpec(seed=42, rays=8, polytope="icosa-12",
                                samples_per_ray=2)
    res1 = boundary.cross_section(spec)
    res2 = boundary.cross_section(spec)
    h = hashlib.sha256(res1.csv_text.encode()).hexdigest()
    assert h == hashlib.sha256(res2.csv_text.encode()).hexdigest()
    assert res1.csv_text.splitlines()[0] == (
        "ray_index,x,y,class,R_ab_in,R_ab_out,R_ba_in,R_ba_out,ppt_min")
    classes = {p.klass for p in res1.points}
    allowed = {"Separable", "EntangledUnsteerable", "OneWayAB", "OneWayBA",
               "TwoWay", "Uncertain"}
    assert classes <= allowed
    # the innermost sample of every ray sits near I/4 and must be separable
    for p in res1.points:
        if abs(p.ppt_min) > 1e-10 and p.ppt_min > 0:
            assert p.klass == "Separable"


def test_cross_section_consistency_with_ppt():
    spec = boundary.SectionSpec(seed=11, rays=8, polytope="icosa-12",
                                samples_per_ray=3)
    res = boundary.cross_section(spec)
    for p in res.points:
        if p.klass in ("TwoWay", "OneWayAB", "OneWayBA"):
            assert p.ppt_min < 0  # steering implies entanglement


def test_section_spec_validation():
    with pytest.raises(ValueError):
        boundary.SectionSpec(seed=1, rays=4)


def test_symmetric_section_symmetries():
    sec = boundary.symmetric_section([0.3, 0.0, 0.2], [0.9, 0.6, 0.5],
                                     samples=8, polytope_name="icosa-12")
    # boundary radii invariant under (x, y) -> (-x, -y) and y -> -y
    for i in range(4):
        j = (i + 4) % 8
        for curve in (sec.ab_inner, sec.ab_outer, sec.ba_inner, sec.ba_outer):
            if np.isnan(curve[i]):
                assert np.isnan(curve[j])
            else:
                assert abs(curve[i] - curve[j]) < 1e-9
    assert np.all(np.isnan(sec.ab_inner[[0, 4]]))  # y = 0 rows are degenerate


def test_symmetric_section_consistency_with_bisection():
    # the scaling-located boundary must agree with direct bisection along
    # the pure-s ray (a small enough x keeps everything proper)
    a = np.array([0.05, 0.0, 0.0])
    s = np.array([0.85, 0.75, 0.6])
    sec = boundary.symmetric_section(a, s, samples=4, polytope_name="icosa-12")
    # angle index 1 is (x, y) = (0, 1): the state (0, s)
    rho = qstate.density_from_bloch(
        qstate.BlochTensor(a=np.zeros(3), b=np.zeros(3), T=np.diag(s)))
    b = radius.critical_radius_bounds(rho, "icosa-12")
    assert abs(sec.ab_inner[1] - b.R_in) < 1e-9
    assert abs(sec.ab_outer[1] - b.R_out) < 1e-9


def test_theta_scan_small_polytope():
    windows = boundary.theta_scan([np.pi / 16, np.pi / 4], p=7, q=16, tol=5e-3)
    for w in windows:
        assert w.alpha_ba == 0.5
        assert 0.5 < w.alpha_ab_lo <= w.alpha_ab_hi <= 1.0 + 1e-12
    # the one-way window shrinks as theta grows toward the Bell direction
    assert windows[0].alpha_ab_lo > windows[1].alpha_ab_hi


def test_theta_scan_rejects_bad_theta():
    with pytest.raises(ValueError):
        boundary.theta_scan([1.2], p=3, q=8)


def test_theta_ba_threshold_exact_by_swap_scaling():
    # the swapped theta state matches the scaling noise form exactly, so
    # B-to-A bounds computed by LP must straddle 1 right at alpha = 1/2
    for theta in (np.pi / 16, np.pi / 8):
        above = radius.critical_radius_bounds(
            qstate.theta_state(theta, 0.52), "icosa-42", "BtoA")
        below = radius.critical_radius_bounds(
            qstate.theta_state(theta, 0.48), "icosa-42", "BtoA")
        assert above.R_in < 1.0  # true R = 0.5/0.52 < 1
        assert below.R_out > 1.0
