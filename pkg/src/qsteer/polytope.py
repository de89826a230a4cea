"""Polytope approximations of the Bloch sphere and LP constraint directions.

Inner polytopes have all vertices on the unit sphere; the outer companion is
the inner polytope rescaled by 1/r_in. Constraint directions for the critical
radius LP are the planes through three polytope vertices.
"""

from __future__ import annotations

import itertools
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull

ON_SPHERE_TOL = 1e-12
COLLINEAR_TOL = 1e-12
PLANE_MEMBER_TOL = 1e-9
DEDUP_DECIMALS = 9

COVERING_NAMES = ("oct-6", "icosa-12", "icosa-42", "icosa-92", "icosa-162", "icosa-252")
_DATA_DIR_ENV = "STEERING_POLYTOPE_DIR"


class PolytopeError(ValueError):
    pass


@dataclass(frozen=True)
class SpherePolytope:
    vertices: np.ndarray  # (N, 3)
    r_in: float
    inversion_symmetric: bool
    name: str

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 3).copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def __len__(self) -> int:
        return len(self.vertices)


@dataclass(frozen=True)
class FacetNormalSet:
    """Planes c0 + c.t = 0 through >=3 vertices, ||c|| = 1, deduplicated."""

    c0: np.ndarray  # (M,)
    c: np.ndarray  # (M, 3)
    source_polytope: str
    count_before_dedup: int

    def __post_init__(self):
        c0 = np.asarray(self.c0, dtype=float).reshape(-1).copy()
        c = np.asarray(self.c, dtype=float).reshape(-1, 3).copy()
        c0.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "c0", c0)
        object.__setattr__(self, "c", c)

    def __len__(self) -> int:
        return len(self.c0)


# ---------------------------------------------------------------------------
# Construction

def _icosahedron() -> np.ndarray:
    phi = (1 + np.sqrt(5)) / 2
    v = []
    for a in (-1.0, 1.0):
        for b in (-phi, phi):
            v += [(0.0, a, b), (a, b, 0.0), (b, 0.0, a)]
    v = np.array(v)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def geodesic_vertices(frequency: int) -> np.ndarray:
    """Subdivide each icosahedron face into frequency^2 triangles and project
    to the sphere: 10 f^2 + 2 vertices."""
    base = _icosahedron()
    hull = ConvexHull(base)
    pts = {}
    for tri in hull.simplices:
        pa, pb, pc = base[tri]
        for i in range(frequency + 1):
            for j in range(frequency + 1 - i):
                k = frequency - i - j
                p = (i * pa + j * pb + k * pc) / frequency
                p = p / np.linalg.norm(p)
                pts[tuple(np.round(p, 12))] = p
    return np.array(sorted(pts.values(), key=tuple))


def symmetrize(vertices: np.ndarray) -> np.ndarray:
    """Enforce exact antipodal pairing: keep one representative per pair and
    append its exact negation."""
    verts = np.asarray(vertices, dtype=float)
    half = []
    used = np.zeros(len(verts), dtype=bool)
    for i, v in enumerate(verts):
        if used[i]:
            continue
        used[i] = True
        d = np.linalg.norm(verts + v, axis=1)
        j = int(np.argmin(d))
        if d[j] < 1e-9 and not used[j]:
            used[j] = True
        half.append(v)
    out = np.vstack([half, -np.asarray(half)])
    return out


def normalize_rows(vertices: np.ndarray) -> np.ndarray:
    v = np.asarray(vertices, dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def octahedron_vertices() -> np.ndarray:
    return np.vstack([np.eye(3), -np.eye(3)])


def build_covering(name: str) -> SpherePolytope:
    """Construct one of the bundled coverings from scratch."""
    if name == "oct-6":
        verts = octahedron_vertices()
    else:
        try:
            count = int(name.split("-")[1])
        except (IndexError, ValueError):
            raise PolytopeError(_unknown_msg(name)) from None
        freq = {12: 1, 42: 2, 92: 3, 162: 4, 252: 5}.get(count)
        if name not in COVERING_NAMES or freq is None:
            raise PolytopeError(_unknown_msg(name))
        verts = symmetrize(normalize_rows(geodesic_vertices(freq)))
    return _finish_inner(verts, name)


def _unknown_msg(name: str) -> str:
    return f"unknown polytope {name!r}; available: {', '.join(COVERING_NAMES)}"


def _finish_inner(verts: np.ndarray, name: str) -> SpherePolytope:
    radii = np.linalg.norm(verts, axis=1)
    if np.max(np.abs(radii - 1.0)) > 1e-10:
        raise PolytopeError(f"{name}: vertices not on the unit sphere")
    verts = normalize_rows(verts)
    r = inscribed_radius_of_vertices(verts)
    return SpherePolytope(
        vertices=verts,
        r_in=r,
        inversion_symmetric=_has_inversion(verts),
        name=name,
    )


def _has_inversion(verts: np.ndarray) -> bool:
    for v in verts:
        if np.min(np.linalg.norm(verts + v, axis=1)) > 1e-9:
            return False
    return True


def load_covering(name: str) -> SpherePolytope:
    """Load a bundled covering polytope; r_in is recomputed and verified.

    The directory holding the vertex files can be overridden with the
    STEERING_POLYTOPE_DIR environment variable.
    """
    if name not in COVERING_NAMES:
        raise PolytopeError(_unknown_msg(name))
    for base in filter(None, (os.environ.get(_DATA_DIR_ENV), _bundled_dir())):
        path = Path(base) / f"{name}.txt"
        if path.exists():
            verts = np.loadtxt(path, dtype=float).reshape(-1, 3)
            return _finish_inner(verts, name)
    # data file missing; fall back to direct construction
    return build_covering(name)


def _bundled_dir() -> str:
    return str(Path(__file__).parent / "data")


def write_polytope_file(poly: SpherePolytope, directory: str | Path) -> Path:
    path = Path(directory) / f"{poly.name}.txt"
    np.savetxt(path, poly.vertices, fmt="%.17g")
    return path


AXIAL_SCHEMES = ("uniform-angle", "uniform-z", "gauss-legendre")


def axial_polytope(p: int, q: int, scheme: str = "gauss-legendre") -> SpherePolytope:
    """p latitude circles x 2q azimuths plus both poles: 2pq + 2 vertices.

    Latitude placement: uniform polar angle, uniform z, or the Gauss-Legendre
    abscissae of order p (largest inscribed radius of the three).
    """
    if p < 1 or q < 3:
        raise PolytopeError(f"invalid axial parameters p={p}, q={q} (need p>=1, q>=3)")
    if scheme not in AXIAL_SCHEMES:
        raise PolytopeError(f"unknown scheme {scheme!r}; available: {', '.join(AXIAL_SCHEMES)}")
    if scheme == "uniform-angle":
        angles = (np.arange(1, p + 1) / (p + 1)) * np.pi
        zs = np.cos(angles)
    elif scheme == "uniform-z":
        zs = 1.0 - 2.0 * np.arange(1, p + 1) / (p + 1)
    else:
        zs = np.polynomial.legendre.leggauss(p)[0][::-1]
    phis = np.arange(2 * q) * (np.pi / q)
    rows = [np.array([0.0, 0.0, 1.0]), np.array([0.0, 0.0, -1.0])]
    for z in zs:
        rho = np.sqrt(max(0.0, 1.0 - z * z))
        ring = np.column_stack(
            [rho * np.cos(phis), rho * np.sin(phis), np.full(2 * q, z)]
        )
        rows.append(ring)
    verts = np.vstack([rows[0][None, :], rows[1][None, :]] + rows[2:])
    return _finish_inner(verts, f"axial-p{p}-q{q}-{scheme}")


# ---------------------------------------------------------------------------
# Geometry

def inscribed_radius_of_vertices(verts: np.ndarray) -> float:
    verts = np.asarray(verts, dtype=float)
    if len(verts) < 4:
        raise PolytopeError("need at least 4 vertices")
    try:
        hull = ConvexHull(verts)
    except Exception as exc:
        raise PolytopeError(f"degenerate vertex set: {exc}") from exc
    offsets = hull.equations[:, 3]
    if np.any(offsets > 1e-12):
        raise PolytopeError("convex hull does not contain the origin")
    return float(np.min(np.abs(offsets)))


def inscribed_radius(poly: SpherePolytope) -> float:
    """Minimum distance from the origin to a convex-hull facet plane."""
    return inscribed_radius_of_vertices(poly.vertices)


def scale(poly: SpherePolytope, eta: float) -> SpherePolytope:
    if eta <= 0:
        raise PolytopeError(f"scale factor must be positive, got {eta}")
    return SpherePolytope(
        vertices=poly.vertices * eta,
        r_in=poly.r_in * eta,
        inversion_symmetric=poly.inversion_symmetric,
        name=poly.name if eta == 1.0 else f"{poly.name}*{eta:.6g}",
    )


def outer_companion(poly: SpherePolytope) -> SpherePolytope:
    """Circumscribing polytope: the inner polytope rescaled by 1/r_in."""
    return scale(poly, 1.0 / poly.r_in)


def _canonicalize_orientation(c0: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flip sign so the first component of (c0, c) larger than 1e-9 in
    magnitude is positive; collapses (c0,c) and (-c0,-c) duplicates."""
    stacked = np.column_stack([c0, c])
    sign = np.ones(len(stacked))
    undecided = np.ones(len(stacked), dtype=bool)
    for col in range(4):
        vals = stacked[:, col]
        pick = undecided & (np.abs(vals) > 1e-9)
        sign[pick] = np.sign(vals[pick])
        undecided &= ~pick
    return c0 * sign, c * sign[:, None]


def _triples(n: int, chunk: int = 200_000):
    it = itertools.combinations(range(n), 3)
    while True:
        block = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(it, chunk)),
            dtype=np.int64,
        )
        if block.size == 0:
            return
        yield block.reshape(-1, 3)


def enumerate_facet_normals(poly: SpherePolytope) -> FacetNormalSet:
    """All C(N,3) vertex-triple planes, orientation-canonicalized and
    deduplicated (coplanar vertex subsets share one plane)."""
    verts = poly.vertices
    n = len(verts)
    if n < 4:
        raise PolytopeError("need at least 4 vertices")
    all_c0, all_c = [], []
    count = 0
    for idx in _triples(n):
        t1, t2, t3 = verts[idx[:, 0]], verts[idx[:, 1]], verts[idx[:, 2]]
        cross = np.cross(t2 - t1, t3 - t1)
        norms = np.linalg.norm(cross, axis=1)
        keep = norms >= COLLINEAR_TOL
        count += int(np.count_nonzero(keep))
        c = cross[keep] / norms[keep, None]
        c0 = -np.einsum("ij,ij->i", c, t1[keep])
        c0, c = _canonicalize_orientation(c0, c)
        all_c0.append(c0)
        all_c.append(c)
    c0 = np.concatenate(all_c0)
    c = np.concatenate(all_c)
    rounded = np.round(np.column_stack([c0, c]), DEDUP_DECIMALS)
    _, first = np.unique(rounded, axis=0, return_index=True)
    return FacetNormalSet(
        c0=c0[first], c=c[first],
        source_polytope=poly.name,
        count_before_dedup=count,
    )


def hull_facet_normals(poly: SpherePolytope) -> FacetNormalSet:
    """Only the convex-hull facet planes: the seed set for row generation."""
    hull = ConvexHull(poly.vertices)
    c = hull.equations[:, :3]
    c0 = hull.equations[:, 3]
    c0, c = _canonicalize_orientation(c0, c)
    rounded = np.round(np.column_stack([c0, c]), DEDUP_DECIMALS)
    _, first = np.unique(rounded, axis=0, return_index=True)
    return FacetNormalSet(
        c0=c0[first], c=c[first],
        source_polytope=poly.name,
        count_before_dedup=len(hull.equations),
    )


def verify_normals(poly: SpherePolytope, normals: FacetNormalSet) -> None:
    """Check every plane still contains >=3 vertices of the source polytope."""
    dist = normals.c0[:, None] + normals.c @ poly.vertices.T
    counts = np.sum(np.abs(dist) < PLANE_MEMBER_TOL, axis=1)
    bad = np.nonzero(counts < 3)[0]
    if bad.size:
        raise PolytopeError(f"{bad.size} planes contain fewer than 3 vertices")


def scale_normals(normals: FacetNormalSet, eta: float) -> FacetNormalSet:
    """Facet normals of the eta-scaled polytope: (c0, c) -> (eta c0, c)."""
    return FacetNormalSet(
        c0=normals.c0 * eta,
        c=normals.c,
        source_polytope=f"{normals.source_polytope}*{eta:.6g}",
        count_before_dedup=normals.count_before_dedup,
    )


def rotation_group_of(vertices: np.ndarray, generators: list[np.ndarray],
                      max_order: int = 256) -> list[np.ndarray]:
    """Close a set of rotation generators into a finite matrix group."""
    group = {(-1,): np.eye(3)}  # keyed by rounded entries; dummy key replaced below

    def key(m):
        return tuple(np.round(m, 9).ravel())

    group = {key(np.eye(3)): np.eye(3)}
    frontier = [np.eye(3)]
    while frontier:
        nxt = []
        for m in frontier:
            for g in generators:
                prod = g @ m
                k = key(prod)
                if k not in group:
                    group[k] = prod
                    nxt.append(prod)
        frontier = nxt
        if len(group) > max_order:
            raise PolytopeError("generator closure exceeded the expected order")
    return list(group.values())


def icosahedral_group(include_inversion: bool = True) -> list[np.ndarray]:
    """The 60 rotations of the icosahedron (120 elements with inversion),
    oriented to match the bundled geodesic coverings."""
    ico = _icosahedron()
    axis5 = ico[0] / np.linalg.norm(ico[0])
    d = ico @ ico[0]
    # an edge partner: the nearest distinct, non-antipodal vertex
    partner = int(np.argsort(-d)[1])
    axis2 = ico[0] + ico[partner]
    axis2 = axis2 / np.linalg.norm(axis2)
    gens = [_axis_rotation(axis5, 2.0 * np.pi / 5.0), _axis_rotation(axis2, np.pi)]
    group = rotation_group_of(None, gens)
    if len(group) != 60:
        raise PolytopeError(f"icosahedral closure gave {len(group)} elements, not 60")
    if include_inversion:
        group = group + [-g for g in group]
    return group


def _axis_rotation(axis: np.ndarray, angle: float) -> np.ndarray:
    x, y, z = axis
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def vertex_orbits(poly: SpherePolytope, group: list[np.ndarray],
                  match_tol: float = 1e-8) -> list[np.ndarray]:
    """Partition vertex indices into orbits of a group that permutes them."""
    from scipy.spatial import cKDTree

    tree = cKDTree(poly.vertices)
    n = len(poly.vertices)
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for g in group:
        dist, idx = tree.query(poly.vertices @ g.T)
        if np.max(dist) > match_tol:
            raise PolytopeError(
                f"group element moves a vertex off the set by {np.max(dist):.2e}"
            )
        for i, j in enumerate(idx):
            ri, rj = find(i), find(int(j))
            if ri != rj:
                parent[ri] = rj
    roots = np.array([find(i) for i in range(n)])
    return [np.nonzero(roots == r)[0] for r in np.unique(roots)]


def axial_orbits(poly: SpherePolytope) -> list[np.ndarray]:
    """Orbits of an axial polytope under its rotations about z: one per
    latitude ring, identified by the z coordinate, poles as singletons."""
    z = np.round(poly.vertices[:, 2], 9)
    return [np.nonzero(z == v)[0] for v in np.unique(z)]
