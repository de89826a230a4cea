import numpy as np
import pytest

from qsteer import polytope

# inscribed radii of the bundled coverings, pinned to 6 decimals
EXPECTED_R_IN = {
    "oct-6": 0.577350,
    "icosa-12": 0.794654,
    "icosa-42": 0.934172,
    "icosa-92": 0.971647,
    "icosa-162": 0.982247,
    "icosa-252": 0.988529,
}


@pytest.mark.parametrize("name,expected", sorted(EXPECTED_R_IN.items()))
def test_bundled_inscribed_radii(name, expected):
    poly = polytope.load_covering(name)
    assert abs(poly.r_in - expected) < 1e-6
    lens = np.linalg.norm(poly.vertices, axis=1)
    assert np.max(np.abs(lens - 1.0)) < 1e-12
    assert poly.inversion_symmetric


def test_paper_92_vertex_radius_met():
    assert polytope.load_covering("icosa-92").r_in >= 0.9716


def test_unknown_covering():
    with pytest.raises(polytope.PolytopeError):
        polytope.load_covering("cube-8")


def test_outer_companion_scaling():
    poly = polytope.load_covering("icosa-12")
    outer = polytope.outer_companion(poly)
    assert abs(outer.r_in - 1.0) < 1e-12
    assert np.allclose(outer.vertices, poly.vertices / poly.r_in)


def test_oct6_facet_count(oct6, oct6_normals):
    # octahedron: 8 hull facets plus equatorial planes, 11 after dedup
    assert len(oct6_normals.c0) == 11


def test_normals_verify(icosa12, icosa12_normals):
    polytope.verify_normals(icosa12, icosa12_normals)


def test_normals_canonical_orientation(icosa42_normals):
    n = icosa42_normals
    stacked = np.column_stack([n.c0, n.c])
    for row in stacked[:50]:
        lead = row[np.abs(row) > 1e-9][0]
        assert lead > 0


def test_scale_normals_tracks_vertices(icosa12, icosa12_normals):
    outer = polytope.outer_companion(icosa12)
    scaled = polytope.scale_normals(icosa12_normals, 1.0 / icosa12.r_in)
    polytope.verify_normals(outer, scaled)


def test_icosahedral_group_order():
    assert len(polytope.icosahedral_group(include_inversion=False)) == 60
    assert len(polytope.icosahedral_group(include_inversion=True)) == 120


def test_vertex_orbits_icosa(icosa12):
    group = polytope.icosahedral_group()
    orbits = polytope.vertex_orbits(icosa12, group)
    assert sorted(len(o) for o in orbits) == [12]
    poly92 = polytope.load_covering("icosa-92")
    orbits92 = polytope.vertex_orbits(poly92, group)
    assert sorted(len(o) for o in orbits92) == [12, 20, 60]


def test_axial_polytope_structure():
    poly = polytope.axial_polytope(3, 8)
    # 3 latitude rings of 16 points plus both poles
    assert len(poly.vertices) == 3 * 16 + 2
    assert poly.inversion_symmetric
    orbits = polytope.axial_orbits(poly)
    sizes = sorted(len(o) for o in orbits)
    assert sizes == [1, 1, 16, 16, 16]


def test_axial_polytope_25_52_radius():
    poly = polytope.axial_polytope(25, 52)
    assert len(poly.vertices) == 25 * 104 + 2
    assert poly.r_in > 0.997


def test_hull_facet_normals_match_enumeration(oct6, oct6_normals):
    hull = polytope.hull_facet_normals(oct6)
    # hull facets are a subset of the enumerated planes
    full = {tuple(np.round(np.concatenate([[c0], c]), 8))
            for c0, c in zip(oct6_normals.c0, oct6_normals.c)}
    sub = {tuple(np.round(np.concatenate([[c0], c]), 8))
           for c0, c in zip(hull.c0, hull.c)}
    assert sub <= full


def test_write_and_reload(tmp_path, monkeypatch):
    poly = polytope.build_covering("icosa-12")
    polytope.write_polytope_file(poly, tmp_path)
    monkeypatch.setenv("STEERING_POLYTOPE_DIR", str(tmp_path))
    loaded = polytope.load_covering("icosa-12")
    assert np.allclose(loaded.vertices, poly.vertices, atol=1e-15)
