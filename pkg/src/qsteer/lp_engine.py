"""The critical-radius linear program over ensemble weights on polytope vertices.

For a canonical state (a, diag(s)) and a polytope with vertices t_i, the LP is

    maximize t
    s.t.  sum_i u_i = 1,   sum_i u_i t_i = 0,   u >= 0,
          sum_i u_i |c0 + c.t_i|  >=  t * ||c0 a + diag(s) c||   for each plane.

Its optimum is the polytope-restricted critical radius. Constraints whose
denominator vanishes are the +inf branch of the fraction function and are
dropped as vacuous. The full O(N^3) constraint set is never handed to the
solver at once: rows are generated on demand from full violation scans.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .canonical import CanonicalState
from .polytope import FacetNormalSet, SpherePolytope

VACUOUS_DEN_TOL = 1e-12
FEAS_TOL = 1e-9
VIOLATION_TOL = 1e-9
WEIGHT_RESIDUAL_TOL = 1e-8
DEGENERATE_MIN_S = 1e-10
_T_CAP = 1e9
_SCAN_CHUNK = 200_000


class DegenerateStateError(ValueError):
    """The canonical correlation matrix lost rank; such states are separable
    and are handled by the separability shortcut, not by the LP."""


class WeightResidualError(ValueError):
    """Weights violate the minimal requirement (normalization/barycenter)."""


def _canonical_pair(canonical) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(canonical, CanonicalState):
        return canonical.a, canonical.s
    a, s = canonical
    return np.asarray(a, dtype=float).reshape(3), np.asarray(s, dtype=float).reshape(3)


@dataclass(frozen=True)
class RadiusLP:
    vertices: np.ndarray  # (N, 3)
    c0: np.ndarray  # (M,) surviving normals
    c: np.ndarray  # (M, 3)
    den: np.ndarray  # (M,) ||c0 a + diag(s) c||, all >= VACUOUS_DEN_TOL
    a: np.ndarray
    s: np.ndarray
    n_vacuous_dropped: int
    source: str

    @property
    def n_vars(self) -> int:
        return len(self.vertices) + 1  # weights plus the objective scalar t


@dataclass(frozen=True)
class LpSolution:
    value: float
    weights: np.ndarray
    tight_normals: np.ndarray
    status: str  # "Optimal", "Infeasible", "NumericalTrouble"
    iterations: int
    active_rows: np.ndarray | None = None  # warm-start seed for related solves
    restricted_value: float = np.nan  # certified upper bound on the LP optimum
    gap: float = np.nan  # restricted_value - value; 0 at full convergence


def build_lp(canonical, poly: SpherePolytope, normals: FacetNormalSet) -> RadiusLP:
    a, s = _canonical_pair(canonical)
    if np.min(s) <= DEGENERATE_MIN_S:
        raise DegenerateStateError(
            f"min singular value {np.min(s):.2e} <= {DEGENERATE_MIN_S}; "
            "degenerate states are separable (use the separability shortcut)"
        )
    den = np.linalg.norm(np.outer(normals.c0, a) + normals.c * s, axis=1)
    keep = den >= VACUOUS_DEN_TOL
    return RadiusLP(
        vertices=poly.vertices,
        c0=normals.c0[keep],
        c=normals.c[keep],
        den=den[keep],
        a=a,
        s=s,
        n_vacuous_dropped=int(np.count_nonzero(~keep)),
        source=normals.source_polytope,
    )


def _numer(lp: RadiusLP, u: np.ndarray, rows: np.ndarray | None = None) -> np.ndarray:
    """sum_i u_i |c0_k + c_k . t_i| for the requested rows, chunked.

    Only vertices carrying weight enter the sum; basic LP solutions are
    sparse, which keeps the full scan cheap even for millions of planes.
    """
    c0 = lp.c0 if rows is None else lp.c0[rows]
    c = lp.c if rows is None else lp.c[rows]
    mask = u > 0.0
    verts_t = lp.vertices[mask].T
    w = u[mask]
    out = np.empty(len(c0))
    for lo in range(0, len(c0), _SCAN_CHUNK):
        hi = lo + _SCAN_CHUNK
        out[lo:hi] = np.abs(c0[lo:hi, None] + c[lo:hi] @ verts_t) @ w
    return out


def _solve_restricted(lp: RadiusLP, rows: np.ndarray):
    n = len(lp.vertices)
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_eq = np.zeros((4, n + 1))
    a_eq[0, :n] = 1.0
    a_eq[1:4, :n] = lp.vertices.T
    b_eq = np.array([1.0, 0.0, 0.0, 0.0])
    coeffs = np.abs(lp.c0[rows, None] + lp.c[rows] @ lp.vertices.T)
    a_ub = np.column_stack([-coeffs, lp.den[rows]])
    res = linprog(
        cost,
        A_ub=a_ub,
        b_ub=np.zeros(len(rows)),
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * n + [(0, _T_CAP)],
        method="highs",
        options={
            "primal_feasibility_tolerance": FEAS_TOL,
            "dual_feasibility_tolerance": FEAS_TOL,
        },
    )
    return res


def solve(lp: RadiusLP, max_rounds: int = 60, rows_per_round: int = 1000,
          seed_rows: np.ndarray | None = None, gap_tol: float = 0.0) -> LpSolution:
    """Row generation: seed with planes at facet depth, repeatedly solve the
    restricted LP and add the most-violated constraints from a full scan.

    Terminates at the full-LP optimum because the constraint set is finite.
    A previous solution's active_rows can be passed as seed_rows to warm-start
    a nearby solve (e.g. successive bisection steps along a ray).

    The returned value is always the fully-scanned fraction minimum of the
    returned (feasible) weights, so it is a certified lower bound on the LP
    optimum even before convergence; restricted_value is a certified upper
    bound. gap_tol > 0 permits an early stop once the two agree to that
    relative tolerance (gap records the spread; it is ~0 at convergence).
    """
    abs_c0 = np.abs(lp.c0)
    if seed_rows is None:
        # Seed with the deepest planes (facets sit at depth >= r_in, planes
        # that cut the hull sit shallower); any seed works, this converges fast.
        n_seed = min(len(abs_c0), max(rows_per_round, 64))
        rows = np.sort(np.argpartition(-abs_c0, n_seed - 1)[:n_seed])
    else:
        rows = np.asarray(seed_rows, dtype=int)
        rows = rows[rows < len(lp.c0)]
        if rows.size == 0:
            rows = np.array([int(np.argmax(abs_c0))])
    active = np.zeros(len(lp.c0), dtype=bool)
    active[rows] = True
    best = None  # (lb, u, fractions) of the best feasible iterate so far
    converged = False
    for rounds in range(1, max_rounds + 1):
        act = np.nonzero(active)[0]
        res = _solve_restricted(lp, act)
        if res.status != 0:
            status = "Infeasible" if res.status == 2 else "NumericalTrouble"
            return LpSolution(
                value=np.nan, weights=np.zeros(len(lp.vertices)),
                tight_normals=np.array([], dtype=int),
                status=status, iterations=rounds,
            )
        u, t = res.x[:-1], res.x[-1]
        frac = _numer(lp, u) / lp.den
        lb = float(np.min(frac))  # the iterate is feasible, so this is r[rho,u]
        if best is None or lb > best[0]:
            best = (lb, u, frac)
        resid = (frac - t) * lp.den
        viol = np.nonzero(resid < -VIOLATION_TOL)[0]
        if viol.size == 0:
            converged = True
            break
        if t - best[0] <= gap_tol * max(abs(t), 1.0):
            break
        # Purge rows that went slack in the restricted optimum (they can
        # re-enter via the scan), keeping the restricted problem small.
        # Only once the active set is large, to avoid add/purge cycling.
        if len(act) > 4 * rows_per_round:
            slack = resid[act] > 1e-4 * np.maximum(1.0, t * lp.den[act])
            active[act[slack]] = False
        # most-violated first; ties broken by lowest normal index
        order = viol[np.lexsort((viol, resid[viol]))]
        active[order[:rows_per_round]] = True
    else:
        return LpSolution(
            value=best[0], weights=best[1], tight_normals=np.array([], dtype=int),
            status="NumericalTrouble", iterations=max_rounds,
            active_rows=np.nonzero(active)[0], restricted_value=t, gap=t - best[0],
        )
    value, u, frac = best
    tight = np.nonzero((frac - value) * lp.den < 1e-7 * np.maximum(1.0, lp.den))[0]
    return LpSolution(
        value=value, weights=u, tight_normals=tight, status="Optimal",
        iterations=rounds, active_rows=np.nonzero(active)[0],
        restricted_value=float(t), gap=float(t) - value,
    )


def solve_symmetric(lp: RadiusLP, orbits: list[np.ndarray]) -> LpSolution:
    """Exact solve with one weight per symmetry orbit of vertices.

    Valid when the state shares the symmetry that generates the orbits (the
    denominator is invariant under the group, e.g. isotropic states on the
    geodesic coverings, axially symmetric states on axial polytopes): group-
    averaging any feasible ensemble then never lowers its fraction minimum,
    so a symmetric optimum exists and the reduced LP attains the full optimum.
    All constraints are kept, which is affordable in the reduced dimension.
    """
    n_orb = len(orbits)
    coeffs = np.empty((len(lp.c0), n_orb))
    for lo in range(0, len(lp.c0), _SCAN_CHUNK):
        hi = lo + _SCAN_CHUNK
        block = np.abs(lp.c0[lo:hi, None] + lp.c[lo:hi] @ lp.vertices.T)
        for o, idx in enumerate(orbits):
            coeffs[lo:hi, o] = block[:, idx].mean(axis=1)
    cost = np.zeros(n_orb + 1)
    cost[-1] = -1.0
    a_eq = np.zeros((4, n_orb + 1))
    a_eq[0, :n_orb] = 1.0
    for o, idx in enumerate(orbits):
        a_eq[1:4, o] = lp.vertices[idx].mean(axis=0)
    res = linprog(
        cost,
        A_ub=np.column_stack([-coeffs, lp.den]),
        b_ub=np.zeros(len(lp.c0)),
        A_eq=a_eq,
        b_eq=np.array([1.0, 0.0, 0.0, 0.0]),
        bounds=[(0, None)] * n_orb + [(0, _T_CAP)],
        method="highs",
        options={
            "primal_feasibility_tolerance": FEAS_TOL,
            "dual_feasibility_tolerance": FEAS_TOL,
        },
    )
    if res.status != 0:
        status = "Infeasible" if res.status == 2 else "NumericalTrouble"
        return LpSolution(
            value=np.nan, weights=np.zeros(len(lp.vertices)),
            tight_normals=np.array([], dtype=int), status=status, iterations=1,
        )
    y, t = res.x[:-1], res.x[-1]
    u = np.zeros(len(lp.vertices))
    for o, idx in enumerate(orbits):
        u[idx] = y[o] / len(idx)
    frac = _numer(lp, u) / lp.den
    value = float(np.min(frac))
    tight = np.nonzero((frac - value) * lp.den < 1e-7 * np.maximum(1.0, lp.den))[0]
    return LpSolution(
        value=value, weights=u, tight_normals=tight, status="Optimal",
        iterations=1, restricted_value=float(t), gap=float(t) - value,
    )


def principal_radius(canonical, weights: np.ndarray, normals: FacetNormalSet,
                     vertices: np.ndarray) -> float:
    """min over planes of sum_i u_i |c0 + c.t_i| / ||c0 a + diag(s) c||.

    Vacuous-denominator planes are skipped (the +inf branch of the
    denominator-dominated convention).
    """
    a, s = _canonical_pair(canonical)
    u = np.asarray(weights, dtype=float)
    norm_resid = abs(float(np.sum(u)) - 1.0)
    if norm_resid > WEIGHT_RESIDUAL_TOL:
        raise WeightResidualError(f"normalization residual {norm_resid:.2e} > 1e-8")
    bary = float(np.linalg.norm(u @ vertices))
    if bary > WEIGHT_RESIDUAL_TOL:
        raise WeightResidualError(f"barycenter residual {bary:.2e} > 1e-8")
    den = np.linalg.norm(np.outer(normals.c0, a) + normals.c * s, axis=1)
    keep = den >= VACUOUS_DEN_TOL
    best = np.inf
    idx = np.nonzero(keep)[0]
    for lo in range(0, len(idx), _SCAN_CHUNK):
        rows = idx[lo:lo + _SCAN_CHUNK]
        num = np.abs(normals.c0[rows, None] + normals.c[rows] @ vertices.T) @ u
        best = min(best, float(np.min(num / den[rows])))
    return best


def export_lp_text(lp: RadiusLP) -> str:
    """Industry-standard textual LP: Maximize / Subject To / Bounds / End.

    Variables are t and u0..u{N-1}; coefficients carry 17 significant digits
    so the file round-trips numerically.
    """
    n = len(lp.vertices)
    lines = ["Maximize", " obj: t", "Subject To"]
    lines.append(" norm: " + " + ".join(f"u{i}" for i in range(n)) + " = 1")
    for axis, label in enumerate("xyz"):
        terms = " ".join(
            f"{'+' if lp.vertices[i, axis] >= 0 else '-'} "
            f"{abs(lp.vertices[i, axis]):.17g} u{i}"
            for i in range(n)
        )
        lines.append(f" bary_{label}: {terms} = 0")
    for k in range(len(lp.c0)):
        coeffs = np.abs(lp.c0[k] + lp.vertices @ lp.c[k])
        terms = " ".join(f"+ {coeffs[i]:.17g} u{i}" for i in range(n))
        lines.append(f" plane{k}: {terms} - {lp.den[k]:.17g} t >= 0")
    lines += ["Bounds", " t >= 0", "End", ""]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Axially symmetric states on axial polytopes.
#
# The plane set of a 2pq+2-vertex axial polytope is too large to enumerate
# (~1e9), but when both the weights and the state are invariant under the
# polytope's rotations about z, every plane is equivalent to one through a
# fixed representative vertex of some latitude ring, which cuts the scan to
# ~1e8 planes. Ring sums of |c0 + c.v| over equally spaced azimuths have a
# closed form (the cosine sum over any full set of equally spaced angles
# vanishes, so only the arc where the argument is positive contributes via a
# Dirichlet kernel), making each surviving plane O(rings) instead of O(N).

from numba import njit


@njit(cache=True, fastmath=True)
def _ring_abs_sum(a_coef, b_coef, delta, m, d):
    """sum_j |a_coef + b_coef*cos(j*d + delta)| for j = 0..m-1, b_coef >= 0."""
    if a_coef >= b_coef:
        return m * a_coef
    if -a_coef >= b_coef:
        return -m * a_coef
    cstar = np.arccos(-a_coef / b_coef)
    # indices with cos(j*d + delta) >= -a/b form the arc (-cstar, cstar)
    j1 = int(np.ceil((-cstar - delta) / d))
    j2 = int(np.floor((cstar - delta) / d))
    mplus = j2 - j1 + 1
    if mplus <= 0:
        return -a_coef * m
    if mplus >= m:
        return a_coef * m
    half = 0.5 * (j1 + j2) * d + delta
    splus = np.cos(half) * np.sin(0.5 * mplus * d) / np.sin(0.5 * d)
    return a_coef * (2 * mplus - m) + 2.0 * b_coef * splus


@njit(cache=True, fastmath=True)
def _axial_scan(verts, reps, ring_z, ring_rho, ring_w, ring_phi0, ring_m,
                w_north, w_south, a_z, s_perp, s_z, record_below,
                out_planes, out_frac):
    """Exact min of the fraction over all planes through 3 vertices with at
    least one representative, for z-symmetric weights. Planes with fraction
    below record_below are collected; when the output fills up, every other
    entry is dropped and the sampling stride doubles, so the sample stays
    spread over the whole scan instead of clustering at its start."""
    n = len(verts)
    nr = len(ring_z)
    d = np.pi / (ring_m[0] // 2) if nr > 0 else 0.0
    best = 1.0e300
    count = 0
    stride = 1
    qualifying = 0
    for ri in range(len(reps)):
        r = reps[ri]
        vr = verts[r]
        for j in range(n - 1):
            if j == r:
                continue
            e1x = verts[j, 0] - vr[0]
            e1y = verts[j, 1] - vr[1]
            e1z = verts[j, 2] - vr[2]
            for k in range(j + 1, n):
                if k == r:
                    continue
                e2x = verts[k, 0] - vr[0]
                e2y = verts[k, 1] - vr[1]
                e2z = verts[k, 2] - vr[2]
                cx = e1y * e2z - e1z * e2y
                cy = e1z * e2x - e1x * e2z
                cz = e1x * e2y - e1y * e2x
                nn = np.sqrt(cx * cx + cy * cy + cz * cz)
                if nn < 1e-12:
                    continue
                cx /= nn
                cy /= nn
                cz /= nn
                c0 = -(cx * vr[0] + cy * vr[1] + cz * vr[2])
                dx = s_perp * cx
                dy = s_perp * cy
                dz = c0 * a_z + s_z * cz
                den = np.sqrt(dx * dx + dy * dy + dz * dz)
                if den < 1e-12:
                    continue
                limit = best if best > record_below else record_below
                lim_num = limit * den
                # barycenter zero and unit mass give num >= |c0|
                if c0 >= lim_num or -c0 >= lim_num:
                    continue
                # per-ring means give num >= sum_l W_l |c0 + cz z_l|
                cheap = w_north * abs(c0 + cz) + w_south * abs(c0 - cz)
                for ell in range(nr):
                    cheap += ring_w[ell] * abs(c0 + cz * ring_z[ell])
                if cheap >= lim_num:
                    continue
                cxy = np.sqrt(cx * cx + cy * cy)
                psi = np.arctan2(cy, cx) if cxy > 0.0 else 0.0
                num = w_north * abs(c0 + cz) + w_south * abs(c0 - cz)
                for ell in range(nr):
                    if ring_w[ell] <= 0.0:
                        continue
                    a_coef = c0 + cz * ring_z[ell]
                    b_coef = ring_rho[ell] * cxy
                    ssum = _ring_abs_sum(a_coef, b_coef, ring_phi0[ell] - psi,
                                         ring_m[ell], d)
                    num += ring_w[ell] * ssum / ring_m[ell]
                    if num >= lim_num:
                        break
                if num >= lim_num:
                    continue
                frac = num / den
                if frac < best:
                    best = frac
                if frac < record_below:
                    if qualifying % stride == 0:
                        if count == len(out_frac):
                            for w in range(count // 2):
                                out_planes[w] = out_planes[2 * w]
                                out_frac[w] = out_frac[2 * w]
                            count //= 2
                            stride *= 2
                        if qualifying % stride == 0:
                            out_planes[count, 0] = c0
                            out_planes[count, 1] = cx
                            out_planes[count, 2] = cy
                            out_planes[count, 3] = cz
                            out_frac[count] = frac
                            count += 1
                    qualifying += 1
    return best, count


def _ring_data(poly, orbits, weights=None):
    """Split axial orbits into pole and ring arrays for the scan kernel."""
    verts = poly.vertices
    ring_z, ring_rho, ring_w, ring_phi0, ring_m, reps = [], [], [], [], [], []
    w_north = w_south = 0.0
    for idx in orbits:
        w_tot = float(np.sum(weights[idx])) if weights is not None else 0.0
        if len(idx) == 1:
            if verts[idx[0], 2] > 0:
                w_north = w_tot
            else:
                w_south = w_tot
            reps.append(int(idx[0]))
            continue
        v0 = verts[idx[0]]
        ring_z.append(v0[2])
        ring_rho.append(float(np.hypot(v0[0], v0[1])))
        ring_w.append(w_tot)
        ring_phi0.append(float(np.arctan2(v0[1], v0[0])))
        ring_m.append(len(idx))
        reps.append(int(idx[0]))
    return (np.array(ring_z), np.array(ring_rho), np.array(ring_w),
            np.array(ring_phi0), np.array(ring_m, dtype=np.int64),
            w_north, w_south, np.array(reps, dtype=np.int64))


def axial_scan(poly, orbits, weights, a, s, record_below: float = -np.inf,
               record_cap: int = 16384):
    """Certified fraction minimum over every plane of an axial polytope, for
    z-symmetric weights and an axially symmetric state (a along z, equal
    transverse singular values). Returns (min, an evenly sampled batch of the
    (c0,c) planes whose fraction lies below record_below)."""
    a = np.asarray(a, dtype=float)
    s = np.asarray(s, dtype=float)
    if abs(s[0] - s[1]) > 1e-10 or max(abs(a[0]), abs(a[1])) > 1e-10:
        raise ValueError("axial scan needs a along z and s[0] == s[1]")
    zr, rr, wr, p0, mr, wn, ws, reps = _ring_data(poly, orbits, weights)
    out_planes = np.empty((record_cap, 4))
    out_frac = np.empty(record_cap)
    best, count = _axial_scan(
        poly.vertices, reps, zr, rr, wr, p0, mr, wn, ws,
        float(a[2]), float(s[0]), float(s[2]), float(record_below),
        out_planes, out_frac,
    )
    return float(best), out_planes[:count]


def _append_planes(normals: FacetNormalSet, planes: np.ndarray) -> FacetNormalSet:
    from .polytope import _canonicalize_orientation

    c0, c = _canonicalize_orientation(planes[:, 0].copy(), planes[:, 1:].copy())
    all_c0 = np.concatenate([normals.c0, c0])
    all_c = np.vstack([normals.c, c])
    key = np.round(np.column_stack([all_c0, all_c]), 9)
    _, first = np.unique(key, axis=0, return_index=True)
    first = np.sort(first)
    return FacetNormalSet(
        c0=all_c0[first], c=all_c[first],
        source_polytope=normals.source_polytope,
        count_before_dedup=normals.count_before_dedup + len(c0),
    )


def solve_axial(canonical, poly: SpherePolytope, orbits: list[np.ndarray],
                pool: FacetNormalSet, max_rounds: int = 20,
                gap_tol: float = 1e-3) -> tuple[LpSolution, FacetNormalSet]:
    """Exact LP solve on a large axial polytope by alternating a pool LP over
    ring weights with full certified scans that supply missing planes.

    Returns the solution and the grown plane pool (reusable across nearby
    states, e.g. successive noise levels). The solution's value is the
    certified full-plane-set fraction minimum of its weights; its
    restricted_value is a certified upper bound on the LP optimum.
    """
    a, s = _canonical_pair(canonical)
    for rounds in range(1, max_rounds + 1):
        lp = build_lp((a, s), poly, pool)
        sol = solve_symmetric(lp, orbits)
        if sol.status != "Optimal":
            return sol, pool
        ub = sol.restricted_value
        best, planes = axial_scan(poly, orbits, sol.weights, a, s,
                                  record_below=ub - 1e-12)
        if best >= ub - gap_tol * max(1.0, abs(ub)):
            return LpSolution(
                value=best, weights=sol.weights, tight_normals=sol.tight_normals,
                status="Optimal", iterations=rounds,
                restricted_value=ub, gap=ub - best,
            ), pool
        pool = _append_planes(pool, planes)
    return LpSolution(
        value=best, weights=sol.weights, tight_normals=sol.tight_normals,
        status="NumericalTrouble", iterations=max_rounds,
        restricted_value=ub, gap=ub - best,
    ), pool
