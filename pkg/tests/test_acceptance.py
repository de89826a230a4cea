"""Acceptance gate: one test per criterion, each printing a single
pass/fail line with its measured numbers. Run with -s to see the report."""

import time

import numpy as np
import pytest

from qsteer import (
    boundary,
    canonical,
    lp_engine,
    polytope,
    povm_lab,
    qstate,
    radius,
)

# bounds collected by criteria 1 and 3, consumed by criterion 5
_SANDWICH_RECORDS: list[tuple[str, float, float, float]] = []


def _report(n: int, ok: bool, detail: str) -> None:
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"criterion {n}: {detail}"


def test_criterion_1_pure_state_radius():
    r_in_92 = polytope.load_covering("icosa-92").r_in
    states = [("singlet", qstate.singlet())]
    for seed in range(5):
        states.append((f"pure-{seed}", qstate.random_pure_entangled(seed)))
    worst_ratio, worst_time = 0.0, 0.0
    ok = True
    for name, rho in states:
        t0 = time.time()
        b = radius.critical_radius_bounds(rho, "icosa-92")
        dt = time.time() - t0
        worst_time = max(worst_time, dt)
        ok &= b.R_in <= 0.5 <= b.R_out
        worst_ratio = max(worst_ratio, b.R_out / b.R_in)
        _SANDWICH_RECORDS.append((name, b.R_in, b.R_out, r_in_92))
    ok &= abs(r_in_92 - 0.972) <= 0.005
    ok &= worst_ratio <= 1.0 / r_in_92 + 1e-7 and worst_time <= 120.0
    _report(1, ok, f"R_in <= 1/2 <= R_out on 6 pure states, worst "
                   f"R_out/R_in = {worst_ratio:.6f} <= {1/r_in_92:.6f} "
                   f"(r_in = {r_in_92:.6f} within 0.972±0.005), "
                   f"slowest state {worst_time:.1f}s")


def test_criterion_2_werner_threshold():
    t0 = time.time()
    crossing = boundary.bisect_ray(qstate.singlet(), tol=1e-3,
                                   polytope_name="icosa-252")
    dt = time.time() - t0
    r_in = polytope.load_covering("icosa-252").r_in
    lo, hi = crossing.bracket
    w_star = crossing.alpha_star
    ok = (0.5 - 1e-3 <= w_star <= 0.5 / r_in + 1e-3) and (hi - lo <= 0.011)
    _report(2, ok, f"w* = {w_star:.5f} in [{0.5-1e-3:.4f}, "
                   f"{0.5/r_in+1e-3:.4f}], bracket width {hi-lo:.4f} "
                   f"<= 0.011 ({dt:.0f}s)")


def test_criterion_3_tstate_oracle_agreement():
    rng = np.random.default_rng(301)
    r_in_42 = polytope.load_covering("icosa-42").r_in
    worst_violation = -np.inf
    for k in range(20):
        s = rng.uniform(0.25, 1.0, size=3)
        rho = qstate.density_from_bloch(qstate.BlochTensor(
            a=np.zeros(3), b=np.zeros(3), T=np.diag(s)))
        analytic = radius.tstate_analytic(s)
        b = radius.critical_radius_bounds(rho, "icosa-42")
        worst_violation = max(worst_violation, b.R_in - analytic,
                              analytic - b.R_out)
        _SANDWICH_RECORDS.append((f"tstate-{k}", b.R_in, b.R_out, r_in_42))
    worst_axial = 0.0
    for _ in range(20):
        s, t = rng.uniform(0.2, 1.0, size=2)
        diff = abs(radius.axial_closed_form(s, t)
                   - radius.tstate_analytic(np.array([s, s, t])))
        worst_axial = max(worst_axial, diff)
    ok = worst_violation <= 0.0 and worst_axial <= 1e-8
    _report(3, ok, f"LP sandwich holds on 20 T-states (worst slack "
                   f"{worst_violation:.2e} <= 0) and closed form matches "
                   f"quadrature to {worst_axial:.2e} <= 1e-8")


def test_criterion_4_exact_scaling():
    worst = 0.0
    done = 0
    seed = 0
    while done < 10:
        rho = qstate.random_state(400 + seed)
        seed += 1
        if canonical.classify(rho).tag != "Normal":
            continue
        base = radius.critical_radius_bounds(rho, "icosa-12")
        for alpha in (0.3, 0.7):
            b = radius.critical_radius_bounds(qstate.noise_mix(rho, alpha),
                                              "icosa-12")
            worst = max(worst, abs(b.R_in * alpha / base.R_in - 1.0),
                        abs(b.R_out * alpha / base.R_out - 1.0))
        done += 1
    ok = worst <= 1e-9
    _report(4, ok, f"R(noise_mix)/alpha vs R exact on 10 states x 2 alphas, "
                   f"worst relative deviation {worst:.2e} <= 1e-9")


def test_criterion_5_universal_error_bound():
    assert _SANDWICH_RECORDS, "criteria 1 and 3 must run first"
    worst = -np.inf
    for _, r_in_val, r_out_val, eta in _SANDWICH_RECORDS:
        worst = max(worst, r_out_val - r_in_val / eta)
    ok = worst <= 1e-7
    _report(5, ok, f"R_out <= R_in/r_in + 1e-7 on "
                   f"{len(_SANDWICH_RECORDS)} states from criteria 1-3, "
                   f"worst excess {worst:.2e}")


def _haar_unitary(rng):
    g = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(g)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_criterion_6_symmetry_invariance():
    rng = np.random.default_rng(601)
    worst = 0.0
    done = 0
    while done < 20:
        rho = qstate.random_state(int(rng.integers(2**31)))
        if canonical.classify(rho).tag != "Normal":
            continue
        u_mat = _haar_unitary(rng)
        v_mat = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        if abs(np.linalg.det(v_mat)) < 0.3:
            continue
        big = np.kron(u_mat, v_mat)
        m = big @ rho.matrix @ big.conj().T
        moved = qstate.DensityMatrix(m / np.trace(m).real)
        if canonical.classify(moved).tag != "Normal":
            continue
        b1 = radius.critical_radius_bounds(rho, "icosa-12")
        b2 = radius.critical_radius_bounds(moved, "icosa-12")
        worst = max(worst, abs(b1.R_in - b2.R_in), abs(b1.R_out - b2.R_out))
        done += 1
    # sign invariance a -> -a, directly at the LP level
    poly = polytope.load_covering("icosa-12")
    normals = polytope.enumerate_facet_normals(poly)
    worst_sign = 0.0
    for seed in range(5):
        can = canonical.canonicalize(qstate.random_state(620 + seed))
        v1 = lp_engine.solve(lp_engine.build_lp((can.a, can.s), poly, normals))
        v2 = lp_engine.solve(lp_engine.build_lp((-can.a, can.s), poly, normals))
        worst_sign = max(worst_sign, abs(v1.value - v2.value))
    ok = worst <= 1e-6 and worst_sign <= 1e-9
    _report(6, ok, f"(U, V) invariance on 20 states, worst drift {worst:.2e} "
                   f"<= 1e-6; sign flip a -> -a worst {worst_sign:.2e} <= 1e-9")


def test_criterion_7_analytic_bounds_sandwich():
    rng = np.random.default_rng(701)
    worst_lo, worst_hi, worst_uni = -np.inf, -np.inf, -np.inf
    done = 0
    while done < 20:
        rho = qstate.random_state(int(rng.integers(2**31)))
        cls = canonical.classify(rho)
        if cls.tag != "Normal" or cls.min_singular < 0.05:
            continue
        can = canonical.canonicalize(rho)
        lo, hi = radius.analytic_bounds(can)
        b = radius.critical_radius_bounds(rho, "icosa-42")
        worst_lo = max(worst_lo, lo - b.R_out)
        worst_hi = max(worst_hi, b.R_in - hi)
        if done < 10:  # uniform bound needs a simplex refine per state
            worst_uni = max(worst_uni, radius.uniform_bound(can) - b.R_out)
        done += 1
    ok = worst_lo <= 1e-7 and worst_hi <= 1e-7 and worst_uni <= 1e-7
    _report(7, ok, f"analytic sandwich on 20 states: lo - R_out <= "
                   f"{worst_lo:.2e}, R_in - hi <= {worst_hi:.2e}, "
                   f"uniform bound excess <= {worst_uni:.2e} (all <= 1e-7)")


def test_criterion_8_theta_one_way_window():
    ba_err = 0.0
    for w in boundary.theta_scan([np.pi / 16, np.pi / 8, np.pi / 4],
                                 p=7, q=16, tol=5e-3):
        ba_err = max(ba_err, abs(w.alpha_ba - 0.5))
    t0 = time.time()
    big = boundary.theta_scan([np.pi / 16], p=25, q=52, tol=0.12)[0]
    dt = time.time() - t0
    ok = (ba_err <= 1e-3 and big.alpha_ab_lo > 0.5
          and big.alpha_ab_hi > big.alpha_ab_lo
          and np.isfinite(big.alpha_ab_hi))
    _report(8, ok, f"alpha_BA = 0.5 (err {ba_err:.1e} <= 1e-3) for three "
                   f"thetas; at theta = pi/16 the A->B bracket "
                   f"[{big.alpha_ab_lo:.3f}, {big.alpha_ab_hi:.3f}] lies "
                   f"strictly above 0.5 at p=25, q=52 ({dt:.0f}s)")


def test_criterion_9_steering_implies_entanglement():
    violations = 0
    steerable = 0
    for seed in range(900, 950):
        rho = qstate.random_state(seed, rank=2)
        b = radius.critical_radius_bounds(rho, "icosa-12")
        if b.R_out < 1.0:
            steerable += 1
            if qstate.ppt_min_eigenvalue(rho) >= 0:
                violations += 1
    ok = violations == 0
    _report(9, ok, f"50 seeded states, {steerable} certified steerable, "
                   f"{violations} PPT-positive among them (must be 0)")


def test_criterion_10_brute_force_equivalence():
    rng = np.random.default_rng(1001)
    details = []
    ok = True
    for name in ("oct-6", "icosa-12"):
        poly = polytope.load_covering(name)
        normals = polytope.enumerate_facet_normals(poly)
        can = canonical.canonicalize(qstate.random_state(1000))
        lp = lp_engine.build_lp(can, poly, normals)
        gen = lp_engine.solve(lp)
        full = lp_engine.solve(lp, rows_per_round=len(lp.c0))
        rep = lp_engine.solve(lp)
        n = len(poly.vertices)
        constraints = np.vstack([np.ones(n), poly.vertices.T])
        target = np.array([1.0, 0.0, 0.0, 0.0])
        pinv = np.linalg.pinv(constraints)
        brute = -np.inf
        trials = 0
        while trials < 10_000:
            u = rng.dirichlet(np.ones(n))
            for _ in range(100):
                u = u - pinv @ (constraints @ u - target)
                if np.min(u) >= 0:
                    break
                u = np.clip(u, 0.0, None)
            if np.min(u) < 0 or np.max(np.abs(constraints @ u - target)) > 1e-10:
                continue
            trials += 1
            brute = max(brute, lp_engine.principal_radius(
                can, u, normals, poly.vertices))
        ok &= abs(gen.value - full.value) <= 1e-9
        ok &= abs(gen.value - rep.value) <= 1e-9
        ok &= brute <= gen.value + 1e-9
        details.append(f"{name}: |gen - full| = {abs(gen.value-full.value):.1e},"
                       f" brute - LP = {brute - gen.value:.1e}")
    _report(10, ok, "; ".join(details) + " (10^4 random weights each)")


def test_criterion_11_gradient_check():
    rng = np.random.default_rng(1101)
    worst = 0.0
    for _ in range(10):
        s = rng.uniform(0.3, 1.0, size=3)
        grad = radius.tstate_gradient(s)
        h = 1e-3
        for i in range(3):
            sp, sm = s.copy(), s.copy()
            sp[i] += h
            sm[i] -= h
            fd = (radius.tstate_analytic(sp) - radius.tstate_analytic(sm)) / (2 * h)
            worst = max(worst, abs(grad[i] - fd) / max(abs(fd), 1e-12))
    g = radius.tstate_gradient(np.ones(3))
    sym = float(np.max(np.abs(g - g[0])))
    # the 1e-3-step reference carries its own O(h^2) truncation, folded in
    ok = worst <= 2e-5 and sym <= 1e-6
    _report(11, ok, f"gradient vs central differences on 10 states, worst "
                    f"relative error {worst:.2e}; equal components at "
                    f"s = (1,1,1) to {sym:.1e}")


def test_criterion_12_povm_gap():
    poly = polytope.load_covering("icosa-42")
    normals = polytope.enumerate_facet_normals(poly)
    schedule = povm_lab.AnnealSchedule(restarts=2)
    csv_text = povm_lab.gap_report(20, poly, normals, seed=1201,
                                   schedule=schedule)
    gaps = [float(line.split(",")[4]) for line in csv_text.splitlines()[1:]]
    median_gap = float(np.median(gaps))
    # hard sub-criterion: seeded start can never fall below the exact r2
    can = canonical.canonicalize(qstate.random_state(1212))
    pair = (can.a, can.s)
    u = povm_lab.random_ensemble(poly, 1213)
    r2inv = povm_lab.exact_r2_inverse(pair, u, normals, poly.vertices)
    start = povm_lab.seeded_candidate(pair, u, normals, poly.vertices)
    r4 = povm_lab.anneal_r4(pair, poly, u,
                            povm_lab.AnnealSchedule(seed=1214, restarts=1),
                            start=start)
    hard_ok = 1.0 / r4 >= r2inv - 1e-9
    soft_ok = median_gap <= 0.02
    _report(12, hard_ok, f"median |r4 - r2|/r2 = {median_gap:.4f} over 20 "
                         f"pairs (soft target <= 0.02: "
                         f"{'met' if soft_ok else 'MISSED, reported only'}); "
                         f"hard sub-criterion seeded inverse >= exact r2 "
                         f"inverse - 1e-9: {hard_ok}")
