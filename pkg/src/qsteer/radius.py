"""Certified critical-radius bounds with steerability verdicts, plus the
analytic special-case formulas used to cross-check the linear programs.

The critical radius R of a two-qubit state is the largest principal radius
over local-hidden-state ensembles; the state is steerable exactly when R < 1.
Bounds come from a polytope sandwich: an inner covering of the Bloch sphere
yields a certified lower bound, its outer companion a certified upper bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.optimize import minimize

from . import canonical as canonical_mod
from . import lp_engine, polytope
from .qstate import DensityMatrix

ISOTROPY_TOL = 1e-12
AXIAL_TOL = 1e-10
CACHE_DECIMALS = 9

#: solved LP values keyed by (polytope name, side, rounded normalized state),
#: so states that are exact noise-scalings of each other reuse one solve
_LP_CACHE: dict[tuple, lp_engine.LpSolution] = {}
_NORMALS_CACHE: dict[str, tuple] = {}


@dataclass(frozen=True)
class RadiusBounds:
    R_in: float  # certified lower bound on R (inner polytope)
    R_out: float  # certified upper bound on R (outer polytope)
    verdict: str  # "Steerable", "Unsteerable", "Undecided"
    direction: str  # "AtoB", "BtoA"
    polytope: str
    certificate: dict[str, Any] | None

    def to_json(self) -> str:
        def enc(x):
            if isinstance(x, float) and math.isinf(x):
                return "inf"
            return x

        cert = self.certificate
        if cert is not None:
            cert = {k: (v.tolist() if isinstance(v, np.ndarray) else enc(v))
                    for k, v in cert.items()}
        return json.dumps(
            {
                "R_in": enc(self.R_in),
                "R_out": enc(self.R_out),
                "verdict": self.verdict,
                "direction": self.direction,
                "polytope": self.polytope,
                "certificate": cert,
            }
        )


def _verdict(r_in: float, r_out: float) -> str:
    if r_out < 1.0:
        return "Steerable"
    if r_in >= 1.0:
        return "Unsteerable"
    return "Undecided"


def _load_with_normals(polytope_name: str):
    if polytope_name not in _NORMALS_CACHE:
        poly = polytope.load_covering(polytope_name)
        normals = polytope.enumerate_facet_normals(poly)
        outer = polytope.outer_companion(poly)
        outer_normals = polytope.scale_normals(normals, 1.0 / poly.r_in)
        _NORMALS_CACHE[polytope_name] = (poly, normals, outer, outer_normals)
    return _NORMALS_CACHE[polytope_name]


def _orbits_for(poly: polytope.SpherePolytope) -> list[np.ndarray] | None:
    """Vertex orbits under the icosahedral group, or None if the vertex
    set is not invariant under it."""
    key = ("orbits", poly.name)
    if key not in _NORMALS_CACHE:
        group = polytope.icosahedral_group()
        try:
            _NORMALS_CACHE[key] = polytope.vertex_orbits(poly, group)
        except polytope.PolytopeError:
            _NORMALS_CACHE[key] = None
    return _NORMALS_CACHE[key]


def _solve_cached(a: np.ndarray, s: np.ndarray, polytope_name: str, side: str,
                  gap_tol: float) -> lp_engine.LpSolution:
    poly, normals, outer, outer_normals = _load_with_normals(polytope_name)
    target, target_normals = (poly, normals) if side == "inner" else (outer, outer_normals)
    key = (polytope_name, side, tuple(np.round(a, CACHE_DECIMALS)),
           tuple(np.round(s, CACHE_DECIMALS)), round(gap_tol, 12))
    if key in _LP_CACHE:
        return _LP_CACHE[key]
    lp = lp_engine.build_lp((a, s), target, target_normals)
    isotropic = (np.linalg.norm(a) <= ISOTROPY_TOL
                 and np.ptp(s) <= ISOTROPY_TOL
                 and polytope_name.startswith("icosa"))
    orbits = _orbits_for(poly) if isotropic else None
    if orbits is not None:
        sol = lp_engine.solve_symmetric(lp, orbits)
    else:
        warm = _LP_CACHE.get(("warm", polytope_name, side))
        seed = warm.active_rows if warm is not None else None
        sol = lp_engine.solve(lp, seed_rows=seed, gap_tol=gap_tol)
    if sol.status == "Optimal":
        _LP_CACHE[key] = sol
        _LP_CACHE[("warm", polytope_name, side)] = sol
    return sol


def clear_caches() -> None:
    _LP_CACHE.clear()
    _NORMALS_CACHE.clear()


def critical_radius_bounds(rho: DensityMatrix, polytope_name: str = "icosa-92",
                           direction: str = "AtoB",
                           gap_tol: float = 0.0) -> RadiusBounds:
    """Certified sandwich R_in <= R <= R_out for the chosen steering direction.

    The canonical state is normalized by its largest singular value before
    the LP solve and the value rescaled afterwards; together with the solve
    cache this makes the exact scaling law R[rho] = R[noise_mix(rho,α)]·α
    hold identically at the LP level, not merely within solver tolerance.
    """
    if direction not in ("AtoB", "BtoA"):
        raise ValueError(f"unknown direction {direction!r}")
    if direction == "BtoA":
        rho = canonical_mod.swap_parties(rho)
    cls = canonical_mod.classify(rho)
    if cls.tag == "Abnormal":
        val = canonical_mod.abnormal_radius(rho)
        return RadiusBounds(
            R_in=val, R_out=val, verdict=_verdict(val, val),
            direction=direction, polytope=polytope_name,
            certificate={"reason": "bob-marginal-pure", "value": val},
        )
    if cls.tag == "Degenerate":
        # rank-deficient canonical correlation implies separability, hence
        # R >= 1 is certified without any LP; the fully uncorrelated case
        # (I/2 (x) rho_B after filtering) has no finite plane at all
        a1, t1 = canonical_mod.filtered_bloch(rho)
        uncorrelated = (np.linalg.norm(t1) <= canonical_mod.DEGENERACY_TOL
                        and np.linalg.norm(a1) <= canonical_mod.DEGENERACY_TOL)
        r_in = math.inf if uncorrelated else 1.0
        return RadiusBounds(
            R_in=r_in, R_out=math.inf, verdict="Unsteerable",
            direction=direction, polytope=polytope_name,
            certificate={"reason": "separable"},
        )
    can = canonical_mod.canonicalize(rho)
    kappa = float(np.max(can.s))
    a = can.a / kappa
    s = can.s / kappa
    poly, normals, outer, outer_normals = _load_with_normals(polytope_name)
    sol_in = _solve_cached(a, s, polytope_name, "inner", gap_tol)
    sol_out = _solve_cached(a, s, polytope_name, "outer", gap_tol)
    for sol, side in ((sol_in, "inner"), (sol_out, "outer")):
        if sol.status not in ("Optimal",):
            raise lp_engine.WeightResidualError(
                f"{side} LP ended with status {sol.status}"
            )
    r_in = sol_in.value / kappa
    # the outer bound only needs the restricted optimum, which upper-bounds
    # the outer LP value even when row generation stopped early
    r_out = (sol_out.restricted_value if gap_tol > 0 else sol_out.value) / kappa
    verdict = _verdict(r_in, r_out)
    certificate: dict[str, Any] | None = None
    if verdict == "Unsteerable":
        certificate = {"weights": sol_in.weights, "polytope": polytope_name}
    elif verdict == "Steerable":
        k = int(sol_out.tight_normals[0]) if len(sol_out.tight_normals) else int(
            np.argmin(np.abs(outer_normals.c0))
        )
        certificate = {
            "c0": float(outer_normals.c0[k]),
            "c": outer_normals.c[k],
            "value": r_out,
        }
    return RadiusBounds(
        R_in=r_in, R_out=r_out, verdict=verdict, direction=direction,
        polytope=polytope_name, certificate=certificate,
    )


# ---------------------------------------------------------------------------
# Analytic formulas for T-states (a = 0, diagonal correlation matrix).

@dataclass(frozen=True)
class TStateQuadrature:
    N_T: float
    nodes: str


def _nt_inverse(s: np.ndarray, n_theta: int, n_phi: int) -> float:
    """Sphere integral of [n^T T^-2 n]^-2 for T = diag(s)."""
    x, w = np.polynomial.legendre.leggauss(n_theta)
    phi = (np.arange(n_phi) + 0.5) * (2.0 * np.pi / n_phi)
    sin_t = np.sqrt(1.0 - x**2)
    nx = np.outer(sin_t, np.cos(phi))
    ny = np.outer(sin_t, np.sin(phi))
    nz = np.broadcast_to(x[:, None], nx.shape)
    quad = nx**2 / s[0] ** 2 + ny**2 / s[1] ** 2 + nz**2 / s[2] ** 2
    vals = quad**-2.0
    return float((w @ vals).sum() * (2.0 * np.pi / n_phi))


def tstate_quadrature(s, n_theta: int = 256, n_phi: int = 512) -> TStateQuadrature:
    s = np.asarray(s, dtype=float)
    if np.min(np.abs(s)) <= 1e-12:
        raise ValueError("degenerate T-state (a singular value is zero)")
    inv = _nt_inverse(np.abs(s), n_theta, n_phi)
    return TStateQuadrature(
        N_T=1.0 / inv,
        nodes=f"gauss-legendre-{n_theta} x trapezoid-{n_phi}",
    )


def tstate_analytic(s, n_theta: int = 256, n_phi: int = 512) -> float:
    """R = 2*pi*N_T*|s1 s2 s3| for a T-state with correlation diag(s)."""
    s = np.asarray(s, dtype=float)
    quad = tstate_quadrature(s, n_theta, n_phi)
    return 2.0 * np.pi * quad.N_T * float(np.abs(np.prod(s)))


def axial_closed_form(s: float, t: float) -> float:
    """R for the axial T-state diag(s, s, t) in closed form.

    Written with x = sqrt(s^2/t^2 - 1); when |s| < |t| the argument turns
    imaginary and arctan(x)/x continues to the real artanh expression.
    """
    if s == 0.0 or t == 0.0:
        raise ValueError("axial closed form needs nonzero s and t")
    ratio2 = (s * s) / (t * t)
    if abs(ratio2 - 1.0) < 1e-14:
        g = 1.0
    elif ratio2 > 1.0:
        x = math.sqrt(ratio2 - 1.0)
        g = math.atan(x) / x
    else:
        x = math.sqrt(1.0 - ratio2)
        g = math.atanh(x) / x
    return (1.0 / abs(t)) / (1.0 + (1.0 + (ratio2 - 1.0)) * g)


def analytic_bounds(canonical) -> tuple[float, float]:
    """Two-sided analytic bounds: hi = 2*pi*N_T*|det T| and
    lo = hi/(1 + ||T^-1 a||) for a non-degenerate canonical state."""
    a, s = lp_engine._canonical_pair(canonical)
    if np.min(np.abs(s)) <= 1e-12:
        raise ValueError("degenerate canonical state")
    hi = tstate_analytic(s)
    lo = hi / (1.0 + float(np.linalg.norm(a / s)))
    return lo, hi


def uniform_bound(canonical, n_c0: int = 101, n_dirs: int = 1024) -> float:
    """Lower bound from the uniform spherical ensemble:
    (1/2) inf over ||c||=1, c0 in [-1,1] of (1+c0^2)/||c0 a + diag(s) c||."""
    a, s = lp_engine._canonical_pair(canonical)

    def ratio(c0, c):
        den = np.linalg.norm(c0 * a + s * c)
        return np.inf if den < 1e-300 else (1.0 + c0 * c0) / den

    # Fibonacci-spiral direction sweep crossed with a c0 grid
    i = np.arange(n_dirs)
    z = 1.0 - (2.0 * i + 1.0) / n_dirs
    phi = i * (np.pi * (3.0 - np.sqrt(5.0)))
    rho = np.sqrt(1.0 - z * z)
    dirs = np.column_stack([rho * np.cos(phi), rho * np.sin(phi), z])
    c0s = np.linspace(-1.0, 1.0, n_c0)
    dens = np.linalg.norm(c0s[:, None, None] * a + dirs * s, axis=2)
    ratios = (1.0 + c0s[:, None] ** 2) / np.maximum(dens, 1e-300)
    i0, j0 = np.unravel_index(np.argmin(ratios), ratios.shape)

    def objective(x):
        c0 = np.clip(x[0], -1.0, 1.0)
        theta, phi = x[1], x[2]
        c = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi),
                      np.cos(theta)])
        return ratio(c0, c)

    start = np.array([c0s[i0], np.arccos(np.clip(dirs[j0, 2], -1, 1)),
                      np.arctan2(dirs[j0, 1], dirs[j0, 0])])
    res = minimize(objective, start, method="Nelder-Mead",
                   options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 2000})
    return 0.5 * float(min(res.fun, ratios[i0, j0]))


def tstate_gradient(s) -> np.ndarray:
    """F_i = 2*pi d(|s1 s2 s3| N_T)/ds_i by central differences on the
    quadrature; the full gradient tensor is (1/16) sum_i F_i sigma_i x sigma_i."""
    s = np.asarray(s, dtype=float)
    if np.min(np.abs(s)) <= 1e-12:
        raise ValueError("degenerate T-state")
    out = np.empty(3)
    for i in range(3):
        h = 1e-5 * abs(s[i])
        sp = s.copy()
        sm = s.copy()
        sp[i] += h
        sm[i] -= h
        out[i] = (tstate_analytic(sp) - tstate_analytic(sm)) / (2.0 * h)
    return out
