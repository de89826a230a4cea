"""Boundary tracing between steerable and unsteerable states: bisection along
noise rays, random 2D cross-sections with per-point classification, symmetric
sections located by the scaling law, and the one-way window of the theta
family.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import canonical as canonical_mod
from . import lp_engine, polytope, qstate, radius

DEFAULT_TOL = 1e-3
MAX_BISECT = 30
PPT_TOL = 1e-10


class BisectionError(RuntimeError):
    """A bracket behaved non-monotonically, which signals LP noise."""


@dataclass(frozen=True)
class RayCrossing:
    alpha_star: float | None  # midpoint estimate; None if the ray never crosses
    bracket: tuple[float, float] | None  # [certified unsteerable, certified steerable]
    direction: str
    iterations: int


def _mix_toward_center(rho: qstate.DensityMatrix, alpha: float) -> qstate.DensityMatrix:
    m = alpha * rho.matrix + (1.0 - alpha) * np.eye(4, dtype=complex) / 4.0
    return qstate.DensityMatrix(m)


def bisect_ray(direction_state: qstate.DensityMatrix, direction: str = "AtoB",
               tol: float = DEFAULT_TOL, polytope_name: str = "icosa-92",
               gap_tol: float = 0.0) -> RayCrossing:
    """Locate the steerability crossing on alpha*rho + (1-alpha)*I/4.

    The critical radius decreases monotonically in alpha (level sets are
    convex and contain I/4), so each certification predicate flips exactly
    once. Two interleaved bisections return a certified bracket: below its
    lower end the state is certifiably unsteerable, above its upper end
    certifiably steerable; the midpoint is the reported crossing.
    """

    memo: dict[float, radius.RadiusBounds] = {}

    def bounds_at(alpha: float) -> radius.RadiusBounds:
        if alpha not in memo:
            memo[alpha] = radius.critical_radius_bounds(
                _mix_toward_center(direction_state, alpha), polytope_name,
                direction=direction, gap_tol=gap_tol,
            )
        return memo[alpha]

    if not bounds_at(1.0).R_out < 1.0:
        return RayCrossing(alpha_star=None, bracket=None, direction=direction,
                           iterations=len(memo))
    if not bounds_at(0.0).R_in >= 1.0:
        raise BisectionError(
            f"ray start not certified unsteerable: R_in = {bounds_at(0.0).R_in}"
        )

    def bisect(predicate) -> tuple[float, float]:
        """Shrink [lo, hi] where predicate fails at lo and holds at hi."""
        lo, hi = 0.0, 1.0
        for _ in range(MAX_BISECT):
            if hi - lo <= tol:
                break
            mid = 0.5 * (lo + hi)
            if predicate(bounds_at(mid)):
                hi = mid
            else:
                lo = mid
        return lo, hi

    _, hi_st = bisect(lambda b: b.R_out < 1.0)
    lo_un, _ = bisect(lambda b: not b.R_in >= 1.0)
    if lo_un > hi_st:
        raise BisectionError(
            f"certified unsteerable at alpha={lo_un} above certified "
            f"steerable at alpha={hi_st}"
        )
    return RayCrossing(
        alpha_star=0.5 * (lo_un + hi_st), bracket=(lo_un, hi_st),
        direction=direction, iterations=len(memo),
    )


# ---------------------------------------------------------------------------
# Random cross-sections.

@dataclass(frozen=True)
class SectionSpec:
    seed: int
    rays: int = 200
    polytope: str = "icosa-92"
    samples_per_ray: int = 5
    tol: float = DEFAULT_TOL
    gap_tol: float = 0.0

    def __post_init__(self):
        if self.rays < 8:
            raise ValueError("a section needs at least 8 rays")


@dataclass(frozen=True)
class ClassifiedPoint:
    ray_index: int
    x: float
    y: float
    klass: str
    R_ab: tuple[float, float]
    R_ba: tuple[float, float]
    ppt_min: float


@dataclass(frozen=True)
class SectionResult:
    spec: SectionSpec
    points: list[ClassifiedPoint]
    boundaries: dict[str, list[tuple[float, float]]]
    csv_text: str
    sidecar_json: str


def _plane_state(delta1: np.ndarray, delta2: np.ndarray, x: float,
                 y: float) -> np.ndarray:
    return np.eye(4, dtype=complex) / 4.0 + x * delta1 + y * delta2


def _max_proper(delta: np.ndarray) -> float:
    """Largest t with I/4 + t*delta positive semidefinite (delta traceless)."""
    evals = np.linalg.eigvalsh(delta)
    neg = evals[evals < -1e-15]
    if len(neg) == 0:
        return np.inf
    return float(0.25 / np.max(-neg))


def _classify(ppt_min: float, ab: radius.RadiusBounds,
              ba: radius.RadiusBounds) -> str:
    if ppt_min >= -PPT_TOL:
        return "Separable"
    ab_state = ("S" if ab.R_out < 1.0 else "U" if ab.R_in >= 1.0 else "?")
    ba_state = ("S" if ba.R_out < 1.0 else "U" if ba.R_in >= 1.0 else "?")
    table = {
        ("S", "S"): "TwoWay",
        ("S", "U"): "OneWayAB",
        ("U", "S"): "OneWayBA",
        ("U", "U"): "EntangledUnsteerable",
    }
    return table.get((ab_state, ba_state), "Uncertain")


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.12g}"


def cross_section(spec: SectionSpec) -> SectionResult:
    """Classify a random 2D plane through I/4 ray by ray.

    The plane is spanned by two seeded random states; each ray is sampled at
    evenly spaced radii up to the proper-state boundary and every sample is
    classified from its PPT value and both steering directions. Rays are
    processed in index order so the emitted CSV is deterministic."""
    rng = np.random.default_rng(np.random.PCG64(spec.seed))
    anchor1 = qstate.random_state(int(rng.integers(2**63)))
    anchor2 = qstate.random_state(int(rng.integers(2**63)))
    delta1 = anchor1.matrix - np.eye(4) / 4.0
    delta2 = anchor2.matrix - np.eye(4) / 4.0
    points: list[ClassifiedPoint] = []
    boundaries: dict[str, list[tuple[float, float]]] = {
        "ppt": [], "AtoB": [], "BtoA": [],
    }
    for k in range(spec.rays):
        phi = 2.0 * np.pi * k / spec.rays
        cx, sx = np.cos(phi), np.sin(phi)
        delta = cx * delta1 + sx * delta2
        t_max = _max_proper(delta)
        edge = qstate.DensityMatrix(_plane_state(delta1, delta2, t_max * cx, t_max * sx))
        for direction in ("AtoB", "BtoA"):
            crossing = bisect_ray(edge, direction, spec.tol, spec.polytope,
                                  spec.gap_tol)
            if crossing.alpha_star is not None:
                r = crossing.alpha_star * t_max
                boundaries[direction].append((r * cx, r * sx))
        # separability boundary along the ray by bisection on the PPT value
        lo, hi = 0.0, 1.0
        if qstate.ppt_min_eigenvalue(edge) < -PPT_TOL:
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                m = _mix_toward_center(edge, mid)
                if qstate.ppt_min_eigenvalue(m) < -PPT_TOL:
                    hi = mid
                else:
                    lo = mid
            r = 0.5 * (lo + hi) * t_max
            boundaries["ppt"].append((r * cx, r * sx))
        for j in range(1, spec.samples_per_ray + 1):
            t = t_max * j / spec.samples_per_ray
            rho = qstate.DensityMatrix(_plane_state(delta1, delta2, t * cx, t * sx))
            ab = radius.critical_radius_bounds(rho, spec.polytope, "AtoB",
                                               spec.gap_tol)
            ba = radius.critical_radius_bounds(rho, spec.polytope, "BtoA",
                                               spec.gap_tol)
            ppt = qstate.ppt_min_eigenvalue(rho)
            points.append(ClassifiedPoint(
                ray_index=k, x=t * cx, y=t * sx,
                klass=_classify(ppt, ab, ba),
                R_ab=(ab.R_in, ab.R_out), R_ba=(ba.R_in, ba.R_out),
                ppt_min=ppt,
            ))
    header = "ray_index,x,y,class,R_ab_in,R_ab_out,R_ba_in,R_ba_out,ppt_min"
    lines = [header]
    for p in points:
        lines.append(",".join([
            str(p.ray_index), _fmt(p.x), _fmt(p.y), p.klass,
            _fmt(p.R_ab[0]), _fmt(p.R_ab[1]), _fmt(p.R_ba[0]), _fmt(p.R_ba[1]),
            _fmt(p.ppt_min),
        ]))
    csv_text = "\n".join(lines) + "\n"
    sidecar = json.dumps({
        "seed": spec.seed, "rays": spec.rays, "polytope": spec.polytope,
        "samples_per_ray": spec.samples_per_ray, "tol": spec.tol,
        "gap_tol": spec.gap_tol, "ppt_tol": PPT_TOL,
        "version": _package_version(),
    }, sort_keys=True)
    return SectionResult(spec=spec, points=points, boundaries=boundaries,
                         csv_text=csv_text, sidecar_json=sidecar)


def _package_version() -> str:
    from importlib.metadata import version

    try:
        return version("qsteer")
    except Exception:
        return "unknown"


# ---------------------------------------------------------------------------
# Symmetric sections via the scaling law.

@dataclass(frozen=True)
class SymmetricSection:
    angles: np.ndarray
    ab_inner: np.ndarray  # boundary radius per angle from R_in (upper curve)
    ab_outer: np.ndarray  # from R_out (lower curve)
    ba_inner: np.ndarray
    ba_outer: np.ndarray
    improper: np.ndarray  # flags: boundary point lies outside the proper set


def _axis_swapped_canonical(a: np.ndarray, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Canonical data of the swapped state for a canonical (a, diag(s))."""
    theta = qstate.BlochTensor(a=np.zeros(3), b=a.copy(), T=np.diag(s).T.copy())
    rho = qstate.density_from_bloch(theta, improper=True)
    a1, t1 = canonical_mod.filtered_bloch(rho)
    left, sing, _ = np.linalg.svd(t1)
    return left.T @ a1, sing


def symmetric_section(a, s, samples: int = 64,
                      polytope_name: str = "icosa-92") -> SymmetricSection:
    """Boundary curves on the plane of states (x*a, y*diag(s)).

    One LP per angle on the unit circle suffices: along a ray through the
    origin of this plane the critical radius scales exactly, so the radius
    value itself locates the boundary. Steering from B to A scales in y
    alone, and is evaluated through the swapped state's canonical data."""
    a = np.asarray(a, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.linalg.norm(a) < 1e-12 or np.min(np.abs(s)) < 1e-12:
        raise ValueError("section axes must be non-degenerate")
    poly, normals, outer, outer_normals = radius._load_with_normals(polytope_name)
    angles = np.linspace(0.0, 2.0 * np.pi, samples, endpoint=False)
    ab_in = np.empty(samples)
    ab_out = np.empty(samples)
    ba_in = np.empty(samples)
    ba_out = np.empty(samples)
    improper = np.zeros(samples, dtype=bool)
    for i, phi in enumerate(angles):
        x, y = np.cos(phi), np.sin(phi)
        ax, sx = np.abs(x) * a, np.abs(y) * s
        if abs(y) < 1e-9:
            ab_in[i] = ab_out[i] = ba_in[i] = ba_out[i] = np.nan
            continue
        kappa = float(np.max(np.abs(sx)))
        lp_in = lp_engine.build_lp((ax / kappa, np.abs(sx) / kappa), poly, normals)
        lp_out = lp_engine.build_lp((ax / kappa, np.abs(sx) / kappa), outer, outer_normals)
        sol_in = lp_engine.solve(lp_in)
        sol_out = lp_engine.solve(lp_out)
        r_in, r_out = sol_in.value / kappa, sol_out.value / kappa
        # A to B: radius at distance t from the origin is R/t, so R itself
        # is the boundary distance along the ray
        ab_in[i] = r_in
        ab_out[i] = r_out
        # B to A: scaling acts on y only; solve for the swapped canonical
        a_sw, s_sw = _axis_swapped_canonical(np.abs(x) * a, np.abs(y) * s)
        kappa = float(np.max(s_sw))
        sol_in2 = lp_engine.solve(lp_engine.build_lp((a_sw / kappa, s_sw / kappa), poly, normals))
        sol_out2 = lp_engine.solve(lp_engine.build_lp((a_sw / kappa, s_sw / kappa), outer, outer_normals))
        ba_in[i] = sol_in2.value / kappa
        ba_out[i] = sol_out2.value / kappa
        check = qstate.density_from_bloch(qstate.BlochTensor(
            a=ab_in[i] * x * a, b=np.zeros(3), T=np.diag(ab_in[i] * y * s)))
        improper[i] = check.improper
    return SymmetricSection(angles=angles, ab_inner=ab_in, ab_outer=ab_out,
                            ba_inner=ba_in, ba_outer=ba_out, improper=improper)


# ---------------------------------------------------------------------------
# The theta family's one-way window.

@dataclass(frozen=True)
class ThetaWindow:
    theta: float
    alpha_ba: float  # exact B-to-A threshold
    alpha_ab_lo: float  # certified unsteerable (A to B) at and below this
    alpha_ab_hi: float  # certified steerable (A to B) at and above this


def _theta_axial_canonical(theta: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Canonical (a, s) of the theta state with the symmetry axis kept on z."""
    rho = qstate.theta_state(theta, alpha)
    a1, t1 = canonical_mod.filtered_bloch(rho)
    if np.max(np.abs(t1 - np.diag(np.diag(t1)))) > 1e-10:
        raise ValueError("theta-state correlation should be diagonal")
    s = np.abs(np.diag(t1))
    return np.array([0.0, 0.0, a1[2]]), np.array([s[0], s[1], s[2]])


class _AxialContext:
    """Shared axial polytope data and growing plane pools."""

    def __init__(self, p: int = 25, q: int = 52):
        self.poly = polytope.axial_polytope(p, q)
        self.orbits = polytope.axial_orbits(self.poly)
        self.pool = polytope.hull_facet_normals(self.poly)
        self.outer = polytope.scale(self.poly, 1.0 / self.poly.r_in)
        self.outer_orbits = polytope.axial_orbits(self.outer)
        self.outer_pool = polytope.scale_normals(self.pool, 1.0 / self.poly.r_in)

    def certified_lower(self, a: np.ndarray, s: np.ndarray) -> float:
        sol, self.pool = lp_engine.solve_axial((a, s), self.poly, self.orbits,
                                               self.pool)
        return sol.value

    def upper_estimate(self, a: np.ndarray, s: np.ndarray) -> float:
        """Certified upper bound: restricted optimum on the outer polytope."""
        sol, self.outer_pool = lp_engine.solve_axial(
            (a, s), self.outer, self.outer_orbits, self.outer_pool,
            max_rounds=3, gap_tol=1e-2,
        )
        return sol.restricted_value


def theta_scan(theta_grid, p: int = 25, q: int = 52,
               tol: float = 2e-3) -> list[ThetaWindow]:
    """One-way steering window per theta.

    From B to A the noise term shares Bob's marginal with the pure state, so
    the scaling law pins the threshold at exactly 1/2. From A to B the state
    is axially symmetric and the large axial polytope gives a certified
    bracket: below alpha_ab_lo a full-plane-set scan certifies a local model,
    above alpha_ab_hi the outer polytope certifies steering."""
    ctx = _AxialContext(p, q)
    out = []
    for theta in np.atleast_1d(np.asarray(theta_grid, dtype=float)):
        if not 0.0 < theta <= np.pi / 4 + 1e-12:
            raise ValueError("theta must lie in (0, pi/4]")

        def r_lower(alpha: float) -> float:
            return ctx.certified_lower(*_theta_axial_canonical(theta, alpha))

        def r_upper(alpha: float) -> float:
            return ctx.upper_estimate(*_theta_axial_canonical(theta, alpha))

        # bisection on the certified-unsteerable predicate
        lo, hi = 0.5, 1.0
        if r_lower(1.0 - 1e-9) >= 1.0:
            out.append(ThetaWindow(float(theta), 0.5, 1.0, math.inf))
            continue
        while hi - lo > tol:
            mid = 0.5 * (lo + hi)
            if r_lower(mid) >= 1.0:
                lo = mid
            else:
                hi = mid
        ab_lo = lo
        # walk the certified-steerable end down from above
        if not r_upper(1.0 - 1e-9) < 1.0:
            out.append(ThetaWindow(float(theta), 0.5, ab_lo, math.inf))
            continue
        ab_hi = 1.0
        step_lo, step_hi = hi, 1.0
        while step_hi - step_lo > tol:
            mid = 0.5 * (step_lo + step_hi)
            if r_upper(mid) < 1.0:
                ab_hi = mid
                step_hi = mid
            else:
                step_lo = mid
        out.append(ThetaWindow(float(theta), 0.5, ab_lo, ab_hi))
    return out
