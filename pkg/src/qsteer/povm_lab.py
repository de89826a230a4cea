"""Generalized-measurement steering lab for two qubits: the n-outcome inverse
fraction function, the exact two-outcome baseline, and a simulated-annealing
search over 4-outcome rank-1 measurements testing whether generalized
measurements ever beat projective ones.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .lp_engine import (
    FEAS_TOL,
    WEIGHT_RESIDUAL_TOL,
    WeightResidualError,
    _canonical_pair,
    principal_radius,
)
from .polytope import FacetNormalSet, SpherePolytope

EFFECT_SUM_TOL = 1e-10
OBS_SUM_TOL = 1e-12
_PAULI = np.array([
    [[1, 0], [0, 1]],
    [[0, 1], [1, 0]],
    [[0, -1j], [1j, 0]],
    [[1, 0], [0, -1]],
], dtype=complex)


@dataclass(frozen=True)
class PovmCandidate:
    """n rank-1-scaled effects summing to identity, paired with n traceless-sum
    observables of unit total norm.

    Effects are stored in Bloch form: E_i = w_i (I + e_i . sigma) / 2 with
    unit e_i, so each is automatically rank-1 scaled. Observables are Bloch
    4-vectors z_i: Z_i = (z_i0 I + zeta_i . sigma) / 2.
    """

    w: np.ndarray  # (n,) nonnegative, sums to 2
    e: np.ndarray  # (n, 3) unit Bloch directions; sum_i w_i e_i = 0
    z: np.ndarray  # (n, 4) observable Bloch vectors; columns sum to 0

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float))
        object.__setattr__(self, "e", np.asarray(self.e, dtype=float))
        object.__setattr__(self, "z", np.asarray(self.z, dtype=float))

    @property
    def n(self) -> int:
        return len(self.w)

    def effects(self) -> np.ndarray:
        """The effects as 2x2 complex matrices."""
        bloch = np.column_stack([self.w, self.w[:, None] * self.e])
        return np.einsum("ik,kab->iab", bloch, _PAULI) / 2.0

    def observables(self) -> np.ndarray:
        return np.einsum("ik,kab->iab", self.z, _PAULI) / 2.0

    def validate(self) -> None:
        if np.min(self.w) < -1e-12:
            raise ValueError(f"negative effect weight {np.min(self.w)}")
        lens = np.linalg.norm(self.e, axis=1)
        live = self.w > 1e-14
        if np.any(np.abs(lens[live] - 1.0) > 1e-10):
            raise ValueError("effect Bloch directions must be unit vectors")
        ident = np.array([2.0, 0.0, 0.0, 0.0])
        total = np.concatenate([[np.sum(self.w)], self.w @ self.e])
        if np.max(np.abs(total - ident)) > EFFECT_SUM_TOL:
            raise ValueError("effects do not sum to the identity")
        if np.max(np.abs(np.sum(self.z, axis=0))) > OBS_SUM_TOL:
            raise ValueError("observables do not sum to zero")
        norm = np.sqrt(np.sum(self.z ** 2) / 2.0)
        if abs(norm - 1.0) > 1e-10:
            raise ValueError(f"observable total norm {norm} != 1")


@dataclass(frozen=True)
class AnnealSchedule:
    t_initial: float = 0.1
    cooling: float = 0.95
    steps_per_temperature: int = 200
    n_temperatures: int = 20
    step_size: float = 0.15
    restarts: int = 5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.cooling < 1.0:
            raise ValueError("cooling factor must lie in (0, 1)")
        if self.steps_per_temperature < 1:
            raise ValueError("need at least one step per temperature")


def _check_minimal_requirement(weights: np.ndarray, vertices: np.ndarray) -> None:
    u = np.asarray(weights, dtype=float)
    if abs(float(np.sum(u)) - 1.0) > WEIGHT_RESIDUAL_TOL:
        raise WeightResidualError("ensemble weights must sum to 1")
    if float(np.linalg.norm(u @ vertices)) > WEIGHT_RESIDUAL_TOL:
        raise WeightResidualError("ensemble barycenter must vanish")


def inverse_fraction(canonical, poly: SpherePolytope, weights: np.ndarray,
                     cand: PovmCandidate) -> float:
    """Inverse fraction function of a candidate measurement against an
    ensemble supported on the polytope vertices.

    numerator = sum_i Tr[(rho - I/2 x rho_B)(E_i x Z_i)]
              = (1/4) sum_i w_i e_i . (a z_i0 + diag(s) zeta_i)
    denominator = sum_v u_v max_i Tr(Z_i sigma_v) - (1/4) sum_i w_i z_i0
    with sigma_v = (I + t_v . sigma)/2. A vanishing numerator returns 0
    regardless of the denominator."""
    a, s = _canonical_pair(canonical)
    u = np.asarray(weights, dtype=float)
    _check_minimal_requirement(u, poly.vertices)
    grads = a[None, :] * cand.z[:, :1] + s[None, :] * cand.z[:, 1:]
    num = 0.25 * float(np.sum(cand.w[:, None] * cand.e * grads))
    # per-vertex best observable response
    resp = 0.5 * (cand.z[:, 0][None, :] + poly.vertices @ cand.z[:, 1:].T)
    den = float(u @ np.max(resp, axis=1)) - 0.25 * float(cand.w @ cand.z[:, 0])
    if num <= FEAS_TOL * max(1.0, abs(den)):
        return 0.0
    if den <= 0.0:
        return np.inf
    return num / den


def exact_r2_inverse(canonical, weights: np.ndarray, normals: FacetNormalSet,
                     vertices: np.ndarray) -> float:
    """Reciprocal of the exact two-outcome principal radius: the projective
    baseline the annealer is compared against."""
    return 1.0 / principal_radius(canonical, weights, normals, vertices)


def random_ensemble(poly: SpherePolytope, seed: int, max_retries: int = 10) -> np.ndarray:
    """Random positive weights satisfying the minimal requirement.

    Draws symmetric Dirichlet weights, then alternates projection onto the
    affine set {sum u = 1, barycenter = 0} with clipping to u >= 0."""
    if not poly.inversion_symmetric:
        raise ValueError("random ensembles need an inversion-symmetric polytope")
    constraints = np.vstack([np.ones(len(poly.vertices)), poly.vertices.T])
    target = np.array([1.0, 0.0, 0.0, 0.0])
    pinv = np.linalg.pinv(constraints)
    for attempt in range(max_retries):
        rng = np.random.default_rng(np.random.PCG64([seed, attempt]))
        u = rng.dirichlet(np.ones(len(poly.vertices)))
        for _ in range(200):
            u = u - pinv @ (constraints @ u - target)
            if np.min(u) >= 0 and np.max(np.abs(constraints @ u - target)) <= 1e-12:
                return u
            u = np.clip(u, 0.0, None)
        resid = np.max(np.abs(constraints @ u - target))
        if np.min(u) >= -1e-14 and resid <= 1e-10:
            return np.clip(u, 0.0, None)
    raise RuntimeError(f"ensemble projection failed after {max_retries} retries")


def _renormalize_effects(raw_w: np.ndarray, raw_e: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Restore sum_i M_i = I by the symmetric sandwich S M_i S, S = (sum M)^(-1/2).

    Everything happens in Bloch algebra: the sum is (W I + v.sigma)/2, its
    inverse square root is c I + d n.sigma, and the sandwich of a rank-1
    scaled effect stays rank-1 scaled, so the Bloch form is exact."""
    big_w = float(np.sum(raw_w))
    v = raw_w @ raw_e
    nv = float(np.linalg.norm(v))
    lo = (big_w - nv) / 2.0
    if lo <= 1e-12:
        raise FloatingPointError("degenerate effect sum")
    hi = (big_w + nv) / 2.0
    n_hat = v / nv if nv > 1e-300 else np.array([0.0, 0.0, 1.0])
    c = 0.5 * (1.0 / np.sqrt(hi) + 1.0 / np.sqrt(lo))
    d = 0.5 * (1.0 / np.sqrt(hi) - 1.0 / np.sqrt(lo))
    m = raw_w[:, None] * raw_e
    dot = m @ n_hat
    w = (c * c + d * d) * raw_w + 2.0 * c * d * dot
    vec = ((c * c - d * d) * m + (2.0 * c * d * raw_w + 2.0 * d * d * dot)[:, None]
           * n_hat[None, :])
    e = np.empty_like(vec)
    live = w > 1e-14
    e[live] = vec[live] / w[live, None]
    e[~live] = np.array([0.0, 0.0, 1.0])
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    return w, e


def _normalize_observables(z: np.ndarray) -> np.ndarray:
    z = z - np.mean(z, axis=0, keepdims=True)
    norm = np.sqrt(np.sum(z ** 2) / 2.0)
    if norm < 1e-300:
        raise FloatingPointError("vanishing observable")
    return z / norm


def _random_candidate(rng: np.random.Generator, n: int = 4,
                      live: int | None = None) -> PovmCandidate:
    """Random candidate; only the first `live` outcomes carry weight."""
    m = n if live is None else live
    e = rng.normal(size=(n, 3))
    e /= np.linalg.norm(e, axis=1, keepdims=True)
    raw_w = np.zeros(n)
    raw_w[:m] = 2.0 / m
    w, e = _renormalize_effects(raw_w, e)
    z = rng.normal(size=(n, 4))
    z[m:] = 0.0
    if m == 2:
        half = 0.5 * (z[0] - z[1])
        z[0], z[1] = half, -half
    return PovmCandidate(w=w, e=e, z=_normalize_observables(z))


def seeded_candidate(canonical, weights: np.ndarray, normals: FacetNormalSet,
                     vertices: np.ndarray, n: int = 4) -> PovmCandidate:
    """Best two-outcome slice point, embedded as an n-outcome candidate.

    Picks the plane normal achieving the two-outcome supremum, sets
    Z_1 = -Z_2 = C and E_1 the projector onto the aligned Bloch direction;
    remaining outcomes are empty."""
    a, s = _canonical_pair(canonical)
    u = np.asarray(weights, dtype=float)
    den = np.linalg.norm(np.outer(normals.c0, a) + normals.c * s, axis=1)
    num = np.abs(normals.c0[:, None] + normals.c @ vertices.T) @ u
    keep = den > 1e-12
    ratios = np.where(keep, den / np.where(num > 1e-300, num, np.inf), -np.inf)
    k = int(np.argmax(ratios))
    c0, c = float(normals.c0[k]), normals.c[k]
    grad = c0 * a + s * c
    q = grad / np.linalg.norm(grad)
    w = np.zeros(n)
    e = np.tile(np.array([0.0, 0.0, 1.0]), (n, 1))
    w[0] = w[1] = 1.0
    e[0], e[1] = q, -q
    z = np.zeros((n, 4))
    z[0] = np.concatenate([[c0], c])
    z[1] = -z[0]
    return PovmCandidate(w=w, e=e, z=_normalize_observables(z))


def _propose(cand: PovmCandidate, rng: np.random.Generator,
             step: float, n_outcomes: int | None = None) -> PovmCandidate:
    """Perturb effect Bloch data and observables, then restore the invariants.

    n_outcomes=2 restricts moves to the first two outcomes (the projective
    slice), used by the sanity run."""
    m = cand.n if n_outcomes is None else n_outcomes
    raw_w = cand.w.copy()
    raw_e = cand.e.copy()
    raw_w[:m] = np.clip(raw_w[:m] + step * rng.normal(size=m), 1e-6, None)
    raw_e[:m] = raw_e[:m] + step * rng.normal(size=(m, 3))
    raw_e /= np.linalg.norm(raw_e, axis=1, keepdims=True)
    w, e = _renormalize_effects(raw_w, raw_e)
    z = cand.z.copy()
    z[:m, :] += step * rng.normal(size=(m, 4))
    if n_outcomes is not None:
        z[n_outcomes:] = 0.0
        half = 0.5 * (z[0] - z[1])
        z[0], z[1] = half, -half
    return PovmCandidate(w=w, e=e, z=_normalize_observables(z))


def anneal_r4(canonical, poly: SpherePolytope, weights: np.ndarray,
              schedule: AnnealSchedule = AnnealSchedule(),
              start: PovmCandidate | None = None,
              n_outcomes: int | None = None, debug: bool = False,
              polish_rounds: int = 14, polish_steps: int = 100) -> float:
    """Upper bound on the 4-outcome principal radius by simulated annealing.

    Maximizes the inverse fraction over rank-1 candidates; returns the
    reciprocal of the best value found over all restarts. Each restart runs
    the Metropolis schedule and then a greedy polish with geometrically
    shrinking steps, which is what pins the final digits. Passing a start
    candidate seeds every restart, so the result can never fall below the
    start's value. With debug=True every visited candidate is re-validated.
    Restart chains are independent and run sequentially; the reduction takes
    the best value."""
    a, s = _canonical_pair(canonical)
    u = np.asarray(weights, dtype=float)
    _check_minimal_requirement(u, poly.vertices)
    verts = poly.vertices

    def objective(c: PovmCandidate) -> float:
        if debug:
            c.validate()
        grads = a[None, :] * c.z[:, :1] + s[None, :] * c.z[:, 1:]
        num = 0.25 * float(np.sum(c.w[:, None] * c.e * grads))
        resp = 0.5 * (c.z[:, 0][None, :] + verts @ c.z[:, 1:].T)
        den = float(u @ np.max(resp, axis=1)) - 0.25 * float(c.w @ c.z[:, 0])
        if num <= FEAS_TOL * max(1.0, abs(den)):
            return 0.0
        return np.inf if den <= 0.0 else num / den

    best_value = -np.inf
    for restart in range(schedule.restarts):
        rng = np.random.default_rng(np.random.PCG64([schedule.seed, restart]))
        cand = (start if start is not None
                else _random_candidate(rng, live=n_outcomes))
        value = objective(cand)
        best_value = max(best_value, value)
        temp = schedule.t_initial
        for _ in range(schedule.n_temperatures):
            for _ in range(schedule.steps_per_temperature):
                try:
                    prop = _propose(cand, rng, schedule.step_size, n_outcomes)
                except FloatingPointError:
                    continue
                pv = objective(prop)
                if pv >= value or rng.random() < np.exp((pv - value) / temp):
                    cand, value = prop, pv
                    best_value = max(best_value, value)
            temp *= schedule.cooling
        step = schedule.step_size * 0.3
        for _ in range(polish_rounds):
            for _ in range(polish_steps):
                try:
                    prop = _propose(cand, rng, step, n_outcomes)
                except FloatingPointError:
                    continue
                pv = objective(prop)
                if pv > value:
                    cand, value = prop, pv
                    best_value = max(best_value, value)
            step *= 0.5
    if best_value <= 0.0:
        return np.inf
    return 1.0 / best_value


def gap_report(pairs: int, poly: SpherePolytope, normals: FacetNormalSet,
               seed: int, schedule: AnnealSchedule = AnnealSchedule()) -> str:
    """CSV comparing the annealed 4-outcome radius against the projective
    baseline over seeded random (state, ensemble) pairs."""
    from . import canonical as canonical_mod
    from . import qstate

    rng = np.random.default_rng(np.random.PCG64(seed))
    lines = ["state_seed,ensemble_seed,r2,r4_annealed,rel_gap"]
    done = 0
    while done < pairs:
        state_seed = int(rng.integers(2**31))
        ensemble_seed = int(rng.integers(2**31))
        rho = qstate.random_state(state_seed)
        cls = canonical_mod.classify(rho)
        if cls.tag != "Normal" or cls.min_singular < 1e-6:
            continue
        can = canonical_mod.canonicalize(rho)
        u = random_ensemble(poly, ensemble_seed)
        pair = (can.a, can.s)
        r2 = 1.0 / exact_r2_inverse(pair, u, normals, poly.vertices)
        sched = replace(schedule, seed=ensemble_seed)
        r4 = anneal_r4(pair, poly, u, sched)
        gap = abs(r4 - r2) / r2
        lines.append(f"{state_seed},{ensemble_seed},{r2:.12g},{r4:.12g},{gap:.12g}")
        done += 1
    return "\n".join(lines) + "\n"
