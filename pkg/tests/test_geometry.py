"""Tests for domain validation, meshing, distances, and refinement."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from cornersc.errors import GeometryError, ParameterError
from cornersc.geometry import (
    ARTIFICIAL,
    PHYSICAL,
    DistanceField,
    Mesh,
    PolygonDomain,
    SectorDomain,
    distance_field,
    load_mesh,
    make_box_mesh,
    make_polygon_mesh,
    make_sector_mesh,
    refine_mesh,
    save_mesh,
    scale_mesh,
)

UNIT_SQUARE = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
EQUILATERAL = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.5 * math.sqrt(3.0)]]


@pytest.fixture(scope="module")
def square_mesh():
    return make_polygon_mesh(PolygonDomain(UNIT_SQUARE), 0.08)


@pytest.fixture(scope="module")
def half_disk_mesh():
    return make_sector_mesh(SectorDomain(math.pi, 1.0), 0.1)


# ---------------------------------------------------------------------------
# domains


def test_polygon_orientation_normalized():
    cw = PolygonDomain(list(reversed(UNIT_SQUARE)))
    assert cw.area > 0


def test_polygon_angle_sum():
    for verts in (
        UNIT_SQUARE,
        EQUILATERAL,
        [[0, 0], [2, 0], [2.3, 1.1], [1, 2.4], [-0.5, 1.0]],
    ):
        poly = PolygonDomain(verts)
        turn = np.sum(np.pi - poly.corner_angles())
        assert_allclose(turn, 2.0 * np.pi, atol=1e-10)


def test_polygon_rejects_degenerate_inputs():
    with pytest.raises(GeometryError):
        PolygonDomain([[0, 0], [1, 0]])
    with pytest.raises(GeometryError):
        PolygonDomain([[0, 0], [1, 0], [2, 0], [1, 1]])  # collinear triple
    with pytest.raises(GeometryError):
        PolygonDomain([[0, 0], [1, 1], [1, 0], [0, 1]])  # bowtie
    with pytest.raises(GeometryError):
        PolygonDomain([[0, 0], [1, 0], [np.nan, 1]])


def test_sector_rejects_bad_parameters():
    with pytest.raises(ParameterError):
        SectorDomain(0.0, 1.0)
    with pytest.raises(ParameterError):
        SectorDomain(2.5 * math.pi, 1.0)
    with pytest.raises(ParameterError):
        SectorDomain(math.pi / 2.0, 0.0)
    with pytest.raises(ParameterError):
        make_sector_mesh(SectorDomain(math.pi / 2.0, 1.0), -0.1)


# ---------------------------------------------------------------------------
# sector meshes


def test_half_disk_area(half_disk_mesh):
    assert_allclose(half_disk_mesh.area, math.pi / 2.0, atol=1e-3)


def test_sector_boundary_tags(half_disk_mesh):
    mesh = half_disk_mesh
    arc = mesh.boundary_edges[mesh.boundary_tags == ARTIFICIAL]
    straight = mesh.boundary_edges[mesh.boundary_tags == PHYSICAL]
    assert len(arc) > 0 and len(straight) > 0
    # arc nodes sit at (nearly) the truncation radius, straight-edge
    # nodes strictly inside it
    r_arc = np.linalg.norm(mesh.nodes[np.unique(arc)], axis=1)
    assert r_arc.min() > 0.99
    mids = 0.5 * (mesh.nodes[straight[:, 0]] + mesh.nodes[straight[:, 1]])
    assert np.abs(mids[:, 0]).max() < 1e-12  # half-disk: straight edges on the y-axis


def test_sector_grading_near_vertex():
    mesh = make_sector_mesh(SectorDomain(math.pi / 2.0, 8.0), 0.2, grading=0.1)
    assert 0 in mesh.corner_nodes
    assert_array_equal(mesh.nodes[mesh.corner_nodes[0]], [0.0, 0.0])
    # edges touching the vertex are at the graded scale, not at h
    p = mesh.nodes[mesh.triangles]
    touches = (mesh.triangles == mesh.corner_nodes[0]).any(axis=1)
    lens = np.linalg.norm(p[touches] - np.roll(p[touches], 1, axis=1), axis=2)
    assert lens[lens > 0].max() <= 0.2 * 0.1 * 3.0


def test_sector_triangle_count_matches_density_estimate():
    # independent count estimate: two triangles per size-field square
    alpha, R, h, grading = math.pi / 2.0, 8.0, 0.2, 0.1
    mesh = make_sector_mesh(SectorDomain(alpha, R), h, grading=grading)
    r = np.linspace(1e-6, R, 20000)
    w = h * np.clip(0.5 * r / h, grading, 1.0)
    predicted = 2.0 * np.trapezoid(alpha * r / w**2, r)
    assert 0.7 * predicted <= mesh.n_triangles <= 1.3 * predicted


def test_sector_mesh_quality(half_disk_mesh):
    assert half_disk_mesh.tri_areas().min() > 0
    assert half_disk_mesh.min_angle() >= 20.0 - 1e-9


# ---------------------------------------------------------------------------
# polygon meshes


def test_square_mesh_basics(square_mesh):
    mesh = square_mesh
    assert_allclose(mesh.area, 1.0, atol=1e-6)
    assert_allclose(sorted(mesh.corner_angles.values()), [math.pi / 2.0] * 4)
    assert np.all(mesh.boundary_tags == PHYSICAL)
    for cid, nid in mesh.corner_nodes.items():
        assert_allclose(mesh.nodes[nid], UNIT_SQUARE[cid], atol=1e-14)


def test_equilateral_triangle_mesh():
    mesh = make_polygon_mesh(PolygonDomain(EQUILATERAL), 0.1)
    assert_allclose(mesh.area, math.sqrt(3.0) / 4.0, atol=1e-6)
    assert_allclose(list(mesh.corner_angles.values()), [math.pi / 3.0] * 3, atol=1e-12)


def test_polygon_mesh_quality(square_mesh):
    assert square_mesh.tri_areas().min() > 0
    assert square_mesh.min_angle() >= 20.0 - 1e-9


def test_polygon_mesh_grading():
    mesh = make_polygon_mesh(PolygonDomain(UNIT_SQUARE), 0.2, grading=0.1)
    d = distance_field(mesh)
    p = mesh.nodes[mesh.triangles]
    lens = np.linalg.norm(p - np.roll(p, 1, axis=1), axis=2)
    near = d.to_corners[mesh.triangles].max(axis=1) < 0.05
    far = d.to_corners[mesh.triangles].min(axis=1) > 0.45
    assert lens[near].max() < lens[far].mean()


# ---------------------------------------------------------------------------
# distances


def test_distance_to_corners_center(square_mesh):
    i = np.linalg.norm(square_mesh.nodes - [0.5, 0.5], axis=1).argmin()
    d = distance_field(square_mesh)
    expected = np.linalg.norm(square_mesh.nodes[i] - UNIT_SQUARE, axis=1).min()
    assert_allclose(d.to_corners[i], expected, atol=1e-14)
    assert_allclose(expected, math.sqrt(2.0) / 2.0, atol=0.1)


def test_distance_to_boundary_on_boundary(square_mesh):
    d = distance_field(square_mesh)
    assert_allclose(d.to_boundary[square_mesh.boundary_nodes()], 0.0, atol=1e-12)


def test_distance_against_dense_boundary_sampling(square_mesh):
    mesh = square_mesh
    d = distance_field(mesh)
    rng = np.random.default_rng(3)
    interior = np.setdiff1d(np.arange(mesh.n_nodes), mesh.boundary_nodes())
    probe = rng.choice(interior, size=12, replace=False)
    t = np.linspace(0.0, 1.0, 100001)
    samples = []
    for a, b in zip(UNIT_SQUARE, UNIT_SQUARE[1:] + UNIT_SQUARE[:1]):
        samples.append(np.asarray(a) + t[:, None] * (np.asarray(b) - np.asarray(a)))
    samples = np.concatenate(samples)
    for i in probe:
        brute = np.linalg.norm(samples - mesh.nodes[i], axis=1).min()
        assert abs(d.to_boundary[i] - brute) < 1e-8


def test_distance_lipschitz_on_edges(square_mesh):
    mesh = square_mesh
    d = distance_field(mesh)
    edges = np.concatenate(
        [mesh.triangles[:, [0, 1]], mesh.triangles[:, [1, 2]], mesh.triangles[:, [2, 0]]]
    )
    lens = np.linalg.norm(mesh.nodes[edges[:, 0]] - mesh.nodes[edges[:, 1]], axis=1)
    for vals in (d.to_corners, d.to_boundary):
        jumps = np.abs(vals[edges[:, 0]] - vals[edges[:, 1]])
        assert np.all(jumps <= lens + 1e-12)


def test_distance_field_empty_targets(square_mesh):
    with pytest.raises(ParameterError):
        distance_field(square_mesh, corner_ids=[])


def test_nearest_corner_ids(square_mesh):
    d = distance_field(square_mesh)
    corner_pts = np.asarray(UNIT_SQUARE)
    brute = np.linalg.norm(
        square_mesh.nodes[:, None, :] - corner_pts[None, :, :], axis=2
    )
    ties = np.isclose(brute.min(axis=1, keepdims=True), brute).sum(axis=1) > 1
    assert_array_equal(d.nearest[~ties], brute.argmin(axis=1)[~ties])


# ---------------------------------------------------------------------------
# refinement, scaling, io


def test_refine_preserves_structure(square_mesh):
    fine = refine_mesh(square_mesh)
    assert fine.n_triangles == 4 * square_mesh.n_triangles
    assert_allclose(fine.area, square_mesh.area, rtol=1e-14)
    # coarse nodes are a prefix of the fine nodes: nested P1 spaces
    assert_array_equal(fine.nodes[: square_mesh.n_nodes], square_mesh.nodes)
    for cid, nid in square_mesh.corner_nodes.items():
        assert_array_equal(fine.nodes[fine.corner_nodes[cid]], square_mesh.nodes[nid])
    # similarity preserves the quality floor exactly
    assert_allclose(fine.min_angle(), square_mesh.min_angle(), atol=1e-9)


def test_refine_preserves_boundary_tags(half_disk_mesh):
    fine = refine_mesh(half_disk_mesh)
    for tag in (PHYSICAL, ARTIFICIAL):
        n_coarse = int((half_disk_mesh.boundary_tags == tag).sum())
        n_fine = int((fine.boundary_tags == tag).sum())
        assert n_fine == 2 * n_coarse
    fine.validate()


def test_scale_mesh_similarity(square_mesh):
    scaled = scale_mesh(square_mesh, 3.0)
    assert_allclose(scaled.area, 9.0 * square_mesh.area, rtol=1e-12)
    assert_allclose(scaled.min_angle(), square_mesh.min_angle(), atol=1e-12)
    assert scaled.corner_angles == square_mesh.corner_angles
    with pytest.raises(ParameterError):
        scale_mesh(square_mesh, 0.0)


def test_mesh_io_roundtrip(tmp_path, square_mesh):
    path = str(tmp_path / "mesh.txt")
    save_mesh(square_mesh, path)
    back = load_mesh(path)
    assert_allclose(back.nodes, square_mesh.nodes, atol=1e-15)
    assert_array_equal(back.triangles, square_mesh.triangles)
    assert_array_equal(back.boundary_edges, square_mesh.boundary_edges)
    assert_array_equal(back.boundary_tags, square_mesh.boundary_tags)
    assert back.corner_nodes == square_mesh.corner_nodes


def test_box_mesh_encloses_domain():
    poly = PolygonDomain(UNIT_SQUARE)
    box = make_box_mesh(poly, 0.25, factor=3.0)
    assert_allclose(box.area, 9.0, atol=1e-6)
    lo, hi = box.nodes.min(axis=0), box.nodes.max(axis=0)
    assert np.all(lo <= 0.0) and np.all(hi >= 1.0)
    with pytest.raises(ParameterError):
        make_box_mesh(poly, 0.25, factor=1.0)


def test_validate_rejects_flipped_triangle(square_mesh):
    broken = Mesh(
        nodes=square_mesh.nodes,
        triangles=square_mesh.triangles[:, ::-1].copy(),
        boundary_edges=square_mesh.boundary_edges,
        boundary_tags=square_mesh.boundary_tags,
        corner_nodes=square_mesh.corner_nodes,
        corner_angles=square_mesh.corner_angles,
        h=square_mesh.h,
    )
    with pytest.raises(GeometryError):
        broken.validate()


def test_locate_roundtrip(square_mesh):
    rng = np.random.default_rng(7)
    pts = rng.uniform(0.05, 0.95, size=(40, 2))
    tri, bary = square_mesh.locate(pts)
    rebuilt = np.einsum("pk,pkd->pd", bary, square_mesh.nodes[square_mesh.triangles[tri]])
    assert_allclose(rebuilt, pts, atol=1e-9)
