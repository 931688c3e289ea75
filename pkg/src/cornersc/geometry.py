"""Domains, triangulations, and distance utilities.

Two domain families are supported: finite angular sectors (opening
``alpha``, truncation radius ``radius``, vertex at the origin, bisector
along the positive x-axis) and simple polygons with positively oriented
vertex lists.  Meshes are conforming piecewise-linear triangulations
with tagged boundary edges and tagged corner nodes.

Sector meshes are structured polar grids: rings of nodes at graded
radii, angular counts that double ring-to-ring through conforming
transition strips.  The structure makes the similarity test in the
eigen module exact: scaling every node by ``1/sqrt(b)`` reproduces the
same connectivity.  Polygon meshes are unstructured: graded boundary
placement, hexagonal seed lattices per refinement level, and a few
rounds of force-based relaxation with re-triangulation.

Mesh text format v1 (``save_mesh``/``load_mesh``)::

    cornersc-mesh v1
    <n_nodes> <n_triangles> <n_boundary_edges> <n_corners>
    x y                    # one line per node
    i j k                  # one line per triangle, CCW
    i j PHYSICAL|ARTIFICIAL  # one line per boundary edge
    <corner_id> <node_index>  # one line per corner
    h <target size>

Boundary edges tagged ``PHYSICAL`` carry the natural (magnetic Neumann)
condition downstream; ``ARTIFICIAL`` marks truncation arcs where the
assembly module may impose a zero condition instead.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.spatial import Delaunay, cKDTree

from cornersc.errors import GeometryError, MeshingError, ParameterError

PHYSICAL = 0
ARTIFICIAL = 1
_TAG_NAMES = {PHYSICAL: "PHYSICAL", ARTIFICIAL: "ARTIFICIAL"}
_TAG_VALUES = {v: k for k, v in _TAG_NAMES.items()}

# Default quality floor in degrees.  Angles sitting at a corner node are
# held to min(floor, 0.45 * corner angle) instead: a thin wedge cannot
# avoid a thin triangle at its tip.
QUALITY_FLOOR_DEG = 20.0

_FAN_APEX_TARGET = 0.85  # radians per fan triangle at the sector vertex


# ---------------------------------------------------------------------------
# domains


@dataclass(frozen=True)
class SectorDomain:
    """Finite angular sector of opening ``alpha`` and radius ``radius``.

    The vertex sits at the origin and the sector is symmetric about the
    positive x-axis: points with polar angle in [-alpha/2, alpha/2].
    ``alpha = 2*pi`` means the slit plane: the two boundary rays
    coincide geometrically but remain distinct boundary pieces.
    """

    alpha: float
    radius: float

    def __post_init__(self):
        if not (0.0 < self.alpha <= 2.0 * math.pi):
            raise ParameterError(f"sector opening must lie in (0, 2*pi], got {self.alpha}")
        if not (self.radius > 0.0 and math.isfinite(self.radius)):
            raise ParameterError(f"sector radius must be positive and finite, got {self.radius}")

    @property
    def area(self) -> float:
        return 0.5 * self.alpha * self.radius**2


@dataclass(frozen=True)
class PolygonDomain:
    """Simple planar polygon with positively oriented vertices.

    Vertices are stored as an (n, 2) array.  The constructor normalizes
    orientation (reversing a negatively oriented input) and rejects
    degenerate inputs: fewer than three vertices, repeated or collinear
    consecutive triples, and self-intersecting boundaries.
    """

    vertices: NDArray[np.float64]

    def __init__(self, vertices):
        verts = np.asarray(vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[1] != 2 or verts.shape[0] < 3:
            raise GeometryError("polygon needs an (n>=3, 2) vertex array")
        if not np.all(np.isfinite(verts)):
            raise GeometryError("polygon vertices must be finite")
        if _signed_area(verts) < 0.0:
            verts = verts[::-1].copy()
        _validate_simple_polygon(verts)
        object.__setattr__(self, "vertices", verts)

    @property
    def n_corners(self) -> int:
        return len(self.vertices)

    @property
    def area(self) -> float:
        return _signed_area(self.vertices)

    @property
    def diameter(self) -> float:
        v = self.vertices
        d2 = ((v[:, None, :] - v[None, :, :]) ** 2).sum(-1)
        return math.sqrt(float(d2.max()))

    def corner_angles(self) -> NDArray[np.float64]:
        """Interior angle at each vertex, in (0, 2*pi)."""
        v = self.vertices
        prev = np.roll(v, 1, axis=0)
        nxt = np.roll(v, -1, axis=0)
        e_in = v - prev
        e_out = nxt - v
        turn = np.arctan2(
            e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0],
            (e_in * e_out).sum(1),
        )
        return np.pi - turn

    def contains(self, points: NDArray[np.float64]) -> NDArray[np.bool_]:
        return _points_in_polygon(np.atleast_2d(points), self.vertices)


def _signed_area(verts: NDArray[np.float64]) -> float:
    x, y = verts[:, 0], verts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _validate_simple_polygon(verts: NDArray[np.float64]) -> None:
    n = len(verts)
    edges = np.stack([verts, np.roll(verts, -1, axis=0)], axis=1)
    lengths = np.linalg.norm(edges[:, 1] - edges[:, 0], axis=1)
    scale = float(lengths.max())
    if scale <= 0.0 or np.any(lengths < 1e-12 * scale):
        raise GeometryError("polygon has a repeated or near-repeated vertex")
    # collinear consecutive triple: interior angle within ~1e-9 of pi or 0
    prev = np.roll(verts, 1, axis=0)
    nxt = np.roll(verts, -1, axis=0)
    e_in, e_out = verts - prev, nxt - verts
    cross = e_in[:, 0] * e_out[:, 1] - e_in[:, 1] * e_out[:, 0]
    dot = (e_in * e_out).sum(1)
    ang = np.pi - np.arctan2(cross, dot)
    if np.any(np.abs(ang - np.pi) < 1e-9) or np.any(ang < 1e-9) or np.any(ang > 2 * np.pi - 1e-9):
        raise GeometryError("polygon has a collinear or degenerate vertex triple")
    # pairwise proper intersection of non-adjacent edges
    for i in range(n):
        a0, a1 = edges[i]
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            b0, b1 = edges[j]
            if _segments_cross(a0, a1, b0, b1, 1e-12 * scale):
                raise GeometryError("polygon boundary is self-intersecting")


def _segments_cross(a0, a1, b0, b1, tol) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1, d2 = orient(b0, b1, a0), orient(b0, b1, a1)
    d3, d4 = orient(a0, a1, b0), orient(a0, a1, b1)
    if ((d1 > tol and d2 < -tol) or (d1 < -tol and d2 > tol)) and (
        (d3 > tol and d4 < -tol) or (d3 < -tol and d4 > tol)
    ):
        return True
    return False


def _points_in_polygon(points: NDArray, verts: NDArray) -> NDArray[np.bool_]:
    """Crossing-number test, vectorized over points."""
    x, y = points[:, 0], points[:, 1]
    inside = np.zeros(len(points), dtype=bool)
    x0, y0 = verts[:, 0], verts[:, 1]
    x1, y1 = np.roll(x0, -1), np.roll(y0, -1)
    for k in range(len(verts)):
        cond = (y0[k] <= y[:]) != (y1[k] <= y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xc = x0[k] + (y - y0[k]) * (x1[k] - x0[k]) / (y1[k] - y0[k])
        inside ^= cond & (x < xc)
    return inside


# ---------------------------------------------------------------------------
# mesh container


@dataclass
class Mesh:
    """Conforming triangulation with boundary and corner metadata.

    nodes          : (N, 2) float coordinates
    triangles      : (T, 3) int node indices, CCW
    boundary_edges : (E, 2) int node indices
    boundary_tags  : (E,)  uint8, PHYSICAL or ARTIFICIAL
    corner_nodes   : {corner id -> node index}
    corner_angles  : {corner id -> interior angle}
    h              : target element size the mesh was built for
    params         : generation parameters, for provenance
    """

    nodes: NDArray[np.float64]
    triangles: NDArray[np.int64]
    boundary_edges: NDArray[np.int64]
    boundary_tags: NDArray[np.uint8]
    corner_nodes: dict[int, int]
    corner_angles: dict[int, float]
    h: float
    params: dict = field(default_factory=dict)
    _tree: cKDTree | None = field(default=None, repr=False, compare=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def tri_areas(self) -> NDArray[np.float64]:
        p = self.nodes[self.triangles]
        return 0.5 * (
            (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
            - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
        )

    @property
    def area(self) -> float:
        return float(self.tri_areas().sum())

    def tri_angles(self) -> NDArray[np.float64]:
        """(T, 3) interior angles; column l is the angle at local vertex l."""
        p = self.nodes[self.triangles]
        out = np.empty((len(self.triangles), 3))
        for l in range(3):
            a = p[:, (l + 1) % 3] - p[:, l]
            b = p[:, (l + 2) % 3] - p[:, l]
            num = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
            den = (a * b).sum(1)
            out[:, l] = np.abs(np.arctan2(num, den))
        return out

    def min_angle(self) -> float:
        return float(np.degrees(self.tri_angles().min()))

    def edge_lengths(self) -> NDArray[np.float64]:
        p = self.nodes[self.triangles]
        e = np.stack(
            [p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1
        )
        return np.linalg.norm(e, axis=2)

    def boundary_nodes(self) -> NDArray[np.int64]:
        return np.unique(self.boundary_edges)

    def nodes_on_tag(self, tag: int) -> NDArray[np.int64]:
        return np.unique(self.boundary_edges[self.boundary_tags == tag])

    def signature(self) -> str:
        """Stable content hash, used for cache keys and report headers."""
        hsh = hashlib.sha256()
        hsh.update(np.round(self.nodes, 12).tobytes())
        hsh.update(np.ascontiguousarray(self.triangles).tobytes())
        hsh.update(np.ascontiguousarray(self.boundary_edges).tobytes())
        hsh.update(self.boundary_tags.tobytes())
        hsh.update(json.dumps(sorted(self.corner_nodes.items())).encode())
        return hsh.hexdigest()[:16]

    # -- point location -----------------------------------------------------

    def _centroid_tree(self) -> cKDTree:
        if self._tree is None:
            cent = self.nodes[self.triangles].mean(axis=1)
            object.__setattr__(self, "_tree", cKDTree(cent))
        return self._tree

    def locate(self, points: NDArray) -> tuple[NDArray[np.int64], NDArray[np.float64]]:
        """Containing triangle and barycentric coordinates per point.

        Points outside the mesh are assigned their nearest triangle with
        barycentric coordinates clamped to the simplex; callers that
        need strict containment should check the returned coordinates.
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        k = min(12, self.n_triangles)
        _, cand = self._centroid_tree().query(pts, k=k)
        cand = np.atleast_2d(cand)
        tri_idx = np.full(len(pts), -1, dtype=np.int64)
        bary = np.zeros((len(pts), 3))
        p = self.nodes[self.triangles]
        best_def = np.full(len(pts), np.inf)
        best_tri = np.zeros(len(pts), dtype=np.int64)
        best_bar = np.zeros((len(pts), 3))
        for c in range(cand.shape[1]):
            t = cand[:, c]
            b = _barycentric(pts, p[t])
            deficiency = np.maximum(0.0, -b).sum(axis=1)
            hit = (deficiency <= 1e-12) & (tri_idx < 0)
            tri_idx[hit] = t[hit]
            bary[hit] = b[hit]
            better = deficiency < best_def
            best_def[better] = deficiency[better]
            best_tri[better] = t[better]
            best_bar[better] = b[better]
        miss = tri_idx < 0
        if np.any(miss):
            tri_idx[miss] = best_tri[miss]
            b = np.maximum(best_bar[miss], 0.0)
            b /= b.sum(axis=1, keepdims=True)
            bary[miss] = b
        return tri_idx, bary

    def validate(self, quality_floor_deg: float = QUALITY_FLOOR_DEG) -> None:
        validate_mesh(self, quality_floor_deg)


def _barycentric(pts: NDArray, tri_pts: NDArray) -> NDArray:
    """Barycentric coordinates of pts[i] in triangle tri_pts[i]."""
    a, b, c = tri_pts[:, 0], tri_pts[:, 1], tri_pts[:, 2]
    v0, v1 = b - a, c - a
    v2 = pts - a
    den = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    l1 = (v2[:, 0] * v1[:, 1] - v2[:, 1] * v1[:, 0]) / den
    l2 = (v0[:, 0] * v2[:, 1] - v0[:, 1] * v2[:, 0]) / den
    return np.stack([1.0 - l1 - l2, l1, l2], axis=1)


def validate_mesh(mesh: Mesh, quality_floor_deg: float = QUALITY_FLOOR_DEG) -> None:
    """Check orientation, conformity, boundary consistency, quality.

    Raises GeometryError for structural defects and MeshingError when
    the quality floor is violated.  Angles located at a corner node are
    held to min(floor, 0.45 * corner angle): a thin wedge forces a thin
    triangle at its tip no matter how the mesh is built.
    """
    areas = mesh.tri_areas()
    if np.any(areas <= 0.0):
        raise GeometryError("mesh has non-positively-oriented or degenerate triangles")
    # conformity: every edge in 1 or 2 triangles; 1-triangle edges == boundary
    tris = mesh.triangles
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    if np.any(counts > 2):
        raise GeometryError("mesh has an edge shared by more than two triangles")
    hull = uniq[counts == 1]
    declared = np.sort(mesh.boundary_edges, axis=1)
    hull_set = {(int(a), int(b)) for a, b in hull}
    declared_set = {(int(a), int(b)) for a, b in declared}
    if hull_set != declared_set:
        raise GeometryError(
            f"declared boundary ({len(declared_set)} edges) does not match "
            f"triangulation boundary ({len(hull_set)} edges)"
        )
    if len(mesh.boundary_tags) != len(mesh.boundary_edges):
        raise GeometryError("boundary tag array length mismatch")
    for cid, node in mesh.corner_nodes.items():
        if not (0 <= node < mesh.n_nodes):
            raise GeometryError(f"corner {cid} points at invalid node {node}")
    # quality floor with corner exemption
    ang = np.degrees(mesh.tri_angles())
    floor = np.full_like(ang, quality_floor_deg)
    corner_floor = {
        node: min(quality_floor_deg, 0.45 * math.degrees(mesh.corner_angles.get(cid, 2 * math.pi)))
        for cid, node in mesh.corner_nodes.items()
    }
    if corner_floor:
        for l in range(3):
            col = mesh.triangles[:, l]
            for node, f in corner_floor.items():
                floor[col == node, l] = f
    bad = ang < floor - 1e-9
    if np.any(bad):
        worst = float(ang[bad].min())
        raise MeshingError(
            f"mesh quality floor violated: min non-exempt angle {worst:.2f} deg "
            f"< {quality_floor_deg} deg"
        )


# ---------------------------------------------------------------------------
# sector meshing


def make_sector_mesh(
    domain: SectorDomain,
    h: float,
    grading: float = 0.1,
    *,
    far_growth: float = 1.0,
    quality_floor_deg: float = QUALITY_FLOOR_DEG,
) -> Mesh:
    """Structured polar mesh of a sector.

    Ring widths follow ``h * clip(0.5 * r / h, grading, far_growth)``:
    geometric grading into the vertex, optional coarsening far from it
    when ``far_growth > 1`` (used for large truncated sectors where the
    sought eigenfunction is vertex-localized).  Angular counts double
    ring-to-ring through conforming transition strips.  The outermost
    ring is pushed to radius ``R * sqrt(dt/sin(dt))`` (``dt`` the outer
    angular spacing) so the polygonal mesh area equals the sector area
    exactly rather than undershooting it by the chord deficit.
    """
    if h <= 0 or not math.isfinite(h):
        raise ParameterError(f"mesh size must be positive, got {h}")
    if not (0 < grading <= 1.0):
        raise ParameterError(f"grading must lie in (0, 1], got {grading}")
    if far_growth < 1.0:
        raise ParameterError(f"far_growth must be >= 1, got {far_growth}")
    alpha, R = domain.alpha, domain.radius
    if h > 0.6 * R:
        h = 0.6 * R  # never fewer than two rings

    radii = _sector_radii(alpha, R, h, grading, far_growth)
    counts = _sector_angular_counts(alpha, radii)
    dt_outer = alpha / counts[-1]
    radii[-1] = R * math.sqrt(dt_outer / math.sin(dt_outer)) if dt_outer < math.pi else R

    nodes = [np.zeros((1, 2))]
    ring_index: list[NDArray[np.int64]] = []
    offset = 1
    for r, n in zip(radii[1:], counts):
        theta = np.linspace(-alpha / 2.0, alpha / 2.0, n + 1)
        ring = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
        nodes.append(ring)
        ring_index.append(np.arange(offset, offset + n + 1, dtype=np.int64))
        offset += n + 1
    nodes_arr = np.concatenate(nodes, axis=0)

    tris: list[tuple[int, int, int]] = []
    first = ring_index[0]
    for j in range(counts[0]):
        tris.append((0, first[j], first[j + 1]))
    for k in range(len(counts) - 1):
        inner, outer = ring_index[k], ring_index[k + 1]
        n_in, n_out = counts[k], counts[k + 1]
        if n_out == n_in:
            for j in range(n_in):
                tris.append((inner[j], outer[j], outer[j + 1]))
                tris.append((inner[j], outer[j + 1], inner[j + 1]))
        elif n_out == 2 * n_in:
            for j in range(n_in):
                tris.append((inner[j], outer[2 * j], outer[2 * j + 1]))
                tris.append((inner[j], outer[2 * j + 1], inner[j + 1]))
                tris.append((inner[j + 1], outer[2 * j + 1], outer[2 * j + 2]))
        else:  # pragma: no cover - construction guarantees the two cases
            raise MeshingError("angular count transition is not conforming")
    tris_arr = np.asarray(tris, dtype=np.int64)

    b_edges: list[tuple[int, int]] = []
    b_tags: list[int] = []
    lower_prev, upper_prev = 0, 0
    for idx in ring_index:
        b_edges.append((lower_prev, int(idx[0])))
        b_tags.append(PHYSICAL)
        b_edges.append((upper_prev, int(idx[-1])))
        b_tags.append(PHYSICAL)
        lower_prev, upper_prev = int(idx[0]), int(idx[-1])
    last = ring_index[-1]
    for j in range(counts[-1]):
        b_edges.append((int(last[j]), int(last[j + 1])))
        b_tags.append(ARTIFICIAL)

    mesh = Mesh(
        nodes=nodes_arr,
        triangles=tris_arr,
        boundary_edges=np.asarray(b_edges, dtype=np.int64),
        boundary_tags=np.asarray(b_tags, dtype=np.uint8),
        corner_nodes={0: 0},
        corner_angles={0: alpha},
        h=h,
        params={
            "kind": "sector",
            "alpha": alpha,
            "radius": R,
            "grading": grading,
            "far_growth": far_growth,
        },
    )
    validate_mesh(mesh, quality_floor_deg)
    return mesh


def _sector_radii(alpha: float, R: float, h: float, grading: float, far_growth: float) -> NDArray:
    # thin openings need a gentler radial slope and a first ring pushed
    # outward, or the strips between rings degenerate into tall slivers
    slope = min(0.5, 0.7 * alpha)
    n1 = max(1, round(alpha / _FAN_APEX_TARGET))
    r1 = grading * h * max(1.0, 0.75 * n1 / alpha)
    r1 = min(r1, 0.5 * R)
    radii = [0.0, r1]
    while radii[-1] < R:
        w = h * min(far_growth, max(grading, slope * radii[-1] / h))
        radii.append(radii[-1] + w)
    out = np.asarray(radii)
    out[1:] *= R / out[-1]
    return out


def _sector_angular_counts(alpha: float, radii: NDArray) -> list[int]:
    n = max(1, round(alpha / _FAN_APEX_TARGET))
    counts = [n]
    for k in range(2, len(radii)):
        r = radii[k]
        width = radii[k] - radii[k - 1]
        while alpha * r / n > 1.35 * width:
            n *= 2
        counts.append(n)
    return counts


def make_sector_boundary_mesh(
    domain: SectorDomain,
    h: float,
    *,
    tube: float = 5.0,
    growth: float = 0.5,
    far_cap: float = 14.0,
    quality_floor_deg: float = QUALITY_FLOOR_DEG,
) -> Mesh:
    """Sector mesh graded by distance to the straight edges.

    Keeps size h within ``tube`` of the physical boundary and grows
    linearly beyond, which makes large truncation radii affordable for
    states that live in an O(1) strip along the edges (openings near
    pi).  The truncation arc is approximated by a polyline at the local
    element size and tagged ARTIFICIAL; since the arc carries the
    essential zero condition in every consumer, the polyline geometry
    error is harmless.  For alpha = pi the vertex is flat and carries
    no corner marker.
    """
    if h <= 0 or not math.isfinite(h):
        raise ParameterError(f"mesh size must be positive, got {h}")
    alpha, R = domain.alpha, domain.radius
    if h >= domain.radius:
        raise ParameterError(f"mesh size {h} must be below the radius {R}")
    if alpha >= 2 * math.pi - 1e-12:
        raise ParameterError("slit openings are not supported by the tube mesher")
    half = alpha / 2
    p_lo = R * np.array([math.cos(-half), math.sin(-half)])
    p_hi = R * np.array([math.cos(half), math.sin(half)])
    origin = np.zeros(2)
    h_far = min(far_cap * h, 0.35 * R)

    def size_fn(pts):
        pts = np.atleast_2d(pts)
        d = np.minimum(
            _point_segment_distance(pts, origin, p_hi),
            _point_segment_distance(pts, origin, p_lo),
        )
        return np.clip(h + growth * (d - tube), h, h_far)

    # walk the arc at the local size so chords match their neighborhood
    thetas = [-half]
    while True:
        t = thetas[-1]
        p = R * np.array([math.cos(t), math.sin(t)])
        step = 0.92 * float(size_fn(p[None, :])[0]) / R
        if t + 1.45 * step >= half:
            break
        thetas.append(t + step)
    thetas.append(half)
    arc = R * np.column_stack([np.cos(thetas), np.sin(thetas)])

    flat_vertex = abs(alpha - math.pi) < 1e-9
    verts = arc if flat_vertex else np.concatenate([[origin], arc])
    poly = PolygonDomain(verts)
    mesh = make_polygon_mesh(
        poly, h, size_fn=size_fn, relax_iters=8, quality_floor_deg=quality_floor_deg
    )

    mids = 0.5 * (mesh.nodes[mesh.boundary_edges[:, 0]] + mesh.nodes[mesh.boundary_edges[:, 1]])
    on_straight = np.minimum(
        _point_segment_distance(mids, origin, p_hi),
        _point_segment_distance(mids, origin, p_lo),
    ) <= 1e-7 * R
    mesh.boundary_tags = np.where(on_straight, PHYSICAL, ARTIFICIAL).astype(np.uint8)
    if flat_vertex:
        # the two straight half-edges form one flat boundary line
        mesh.corner_nodes = {}
        mesh.corner_angles = {}
    else:
        mesh.corner_nodes = {0: mesh.corner_nodes[0]}
        mesh.corner_angles = {0: alpha}
    mesh.params = {"kind": "sector-tube", "alpha": alpha, "R": R, "tube": tube}
    validate_mesh(mesh, quality_floor_deg)
    return mesh


# ---------------------------------------------------------------------------
# polygon meshing


def make_polygon_mesh(
    poly: PolygonDomain,
    h: float,
    grading: float = 0.1,
    *,
    far_factor: float = 1.0,
    core_radius: float = 0.0,
    slope: float = 0.5,
    size_fn=None,
    relax_iters: int = 22,
    quality_floor_deg: float = QUALITY_FLOOR_DEG,
) -> Mesh:
    """Unstructured graded mesh of a polygon.

    The default size field is ``h * clip(slope * (d - core_radius) / h,
    grading, far_factor)`` with ``d`` the distance to the nearest
    vertex: elements of size ``h * grading`` in a core around each
    corner, growing linearly outward, capped at ``h * far_factor``.
    ``size_fn(points) -> sizes`` overrides the field entirely.

    Construction is deterministic: graded boundary placement, a
    hexagonal seed lattice per dyadic size level, then force-based
    relaxation of interior nodes with periodic re-triangulation.
    """
    if h <= 0 or not math.isfinite(h):
        raise ParameterError(f"mesh size must be positive, got {h}")
    if not (0 < grading <= 1.0):
        raise ParameterError(f"grading must lie in (0, 1], got {grading}")
    verts = poly.vertices
    if size_fn is None:
        hmin, hmax = grading * h, far_factor * h

        def size_fn(pts):
            d = np.min(
                np.linalg.norm(pts[:, None, :] - verts[None, :, :], axis=2), axis=1
            )
            return np.clip(slope * (d - core_radius), hmin, hmax)

    bnodes, corner_idx = _polygon_boundary_nodes(verts, size_fn)
    btree = _boundary_sample_tree(bnodes, size_fn)
    seeds = _interior_seeds(poly, bnodes, btree, size_fn)
    pts = np.concatenate([bnodes, seeds], axis=0)
    n_fixed = len(bnodes)
    pts = _relax(pts, n_fixed, poly, btree, size_fn, relax_iters)
    pts, simplices = _quality_repair(
        pts, n_fixed, poly, btree, size_fn, corner_idx, quality_floor_deg
    )

    used = np.unique(simplices)
    if len(used) != len(pts):
        remap = -np.ones(len(pts), dtype=np.int64)
        remap[used] = np.arange(len(used))
        pts = pts[used]
        simplices = remap[simplices]
        corner_idx = [int(remap[i]) for i in corner_idx]
        if any(i < 0 for i in corner_idx):
            raise MeshingError("a polygon vertex node was dropped during meshing")

    edges = np.concatenate(
        [simplices[:, [0, 1]], simplices[:, [1, 2]], simplices[:, [2, 0]]]
    )
    key = np.sort(edges, axis=1)
    uniq, counts = np.unique(key, axis=0, return_counts=True)
    b_edges = uniq[counts == 1]

    angles = poly.corner_angles()
    mesh = Mesh(
        nodes=pts,
        triangles=simplices,
        boundary_edges=b_edges.astype(np.int64),
        boundary_tags=np.full(len(b_edges), PHYSICAL, dtype=np.uint8),
        corner_nodes={s: corner_idx[s] for s in range(len(verts))},
        corner_angles={s: float(angles[s]) for s in range(len(verts))},
        h=h,
        params={
            "kind": "polygon",
            "n_vertices": len(verts),
            "grading": grading,
            "far_factor": far_factor,
            "core_radius": core_radius,
            "slope": slope,
        },
    )
    validate_mesh(mesh, quality_floor_deg)
    _check_boundary_chain(mesh, verts)
    return mesh


def _polygon_boundary_nodes(verts, size_fn):
    """Graded node placement along each edge; returns nodes and the
    index of each polygon vertex within the returned array."""
    chains = []
    n = len(verts)
    for s in range(n):
        a, b = verts[s], verts[(s + 1) % n]
        L = float(np.linalg.norm(b - a))
        t_fine = np.linspace(0.0, 1.0, 512)
        pts_fine = a[None, :] * (1 - t_fine[:, None]) + b[None, :] * t_fine[:, None]
        dens = 1.0 / size_fn(pts_fine)
        cum = np.concatenate([[0.0], np.cumsum((dens[1:] + dens[:-1]) / 2.0 * np.diff(t_fine) * L)])
        n_int = max(1, int(round(cum[-1])))
        targets = np.linspace(0.0, cum[-1], n_int + 1)
        t_nodes = np.interp(targets, cum, t_fine)
        chain = a[None, :] * (1 - t_nodes[:, None]) + b[None, :] * t_nodes[:, None]
        chains.append(chain[:-1])  # endpoint owned by the next edge
    corner_idx = []
    offset = 0
    for chain in chains:
        corner_idx.append(offset)
        offset += len(chain)
    return np.concatenate(chains, axis=0), corner_idx


def _boundary_sample_tree(bnodes, size_fn) -> cKDTree:
    """KDTree over a densified boundary so nearest-sample distance
    approximates true distance-to-boundary (node spacing alone
    overestimates clearance between nodes)."""
    nxt = np.roll(bnodes, -1, axis=0)
    seg = np.linalg.norm(nxt - bnodes, axis=1)
    s_loc = size_fn(bnodes)
    n_sub = np.clip(np.ceil(seg / (0.3 * s_loc)).astype(int), 1, 12)
    samples = [bnodes]
    for k in range(1, int(n_sub.max()) + 1):
        mask = n_sub > k
        if not np.any(mask):
            break
        t = k / (n_sub[mask] + 0.0)
        samples.append(bnodes[mask] + t[:, None] * (nxt[mask] - bnodes[mask]))
    return cKDTree(np.concatenate(samples, axis=0))


def _interior_seeds(poly, bnodes, btree, size_fn):
    verts = poly.vertices
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    sizes_b = size_fn(bnodes)
    max_level_size = float(size_fn(np.atleast_2d(verts.mean(axis=0))).max())
    levels = []
    q = float(np.max(size_fn(np.random.RandomState(0).uniform(lo, hi, (256, 2)))))
    q = max(q, max_level_size)
    smin = float(min(sizes_b.min(), size_fn(verts).min()))
    while q > 0.45 * smin:
        levels.append(q)
        q /= 2.0
    kept: list[NDArray] = []
    kept_tree: cKDTree | None = None
    for q in levels:
        pts = _hex_lattice(lo, hi, q)
        if len(pts) == 0:
            continue
        s = size_fn(pts)
        band = (s >= 0.75 * q) & (s < 1.55 * q)
        pts, s = pts[band], s[band]
        if len(pts) == 0:
            continue
        inside = _points_in_polygon(pts, verts)
        pts, s = pts[inside], s[inside]
        if len(pts) == 0:
            continue
        d_b, _ = btree.query(pts)
        clear = d_b >= 0.55 * s
        pts, s = pts[clear], s[clear]
        if len(pts) == 0:
            continue
        if kept_tree is not None:
            d_k, _ = kept_tree.query(pts)
            fresh = d_k >= 0.62 * s
            pts = pts[fresh]
        if len(pts):
            kept.append(pts)
            kept_tree = cKDTree(np.concatenate(kept, axis=0))
    if not kept:
        return np.zeros((0, 2))
    return np.concatenate(kept, axis=0)


def _hex_lattice(lo, hi, q):
    margin = 0.5 * q
    xs = np.arange(lo[0] - margin, hi[0] + margin, q)
    ys = np.arange(lo[1] - margin, hi[1] + margin, q * math.sqrt(3.0) / 2.0)
    if len(xs) == 0 or len(ys) == 0:
        return np.zeros((0, 2))
    X, Y = np.meshgrid(xs, ys)
    X[1::2] += q / 2.0
    return np.column_stack([X.ravel(), Y.ravel()])


def _mesh_edges(pts):
    tri = Delaunay(pts)
    edges = np.concatenate(
        [tri.simplices[:, [0, 1]], tri.simplices[:, [1, 2]], tri.simplices[:, [2, 0]]]
    )
    lo = edges.min(axis=1).astype(np.int64)
    hi = edges.max(axis=1).astype(np.int64)
    # dedupe via packed scalar keys; unique on 1D ints beats unique(axis=0)
    key = np.unique(lo * len(pts) + hi)
    return np.column_stack([key // len(pts), key % len(pts)])


def _drop_crowded(pts, n_fixed, size_fn):
    """Remove non-fixed points sitting on edges much shorter than the
    local target size; repulsion alone cannot fix overseeded clusters."""
    edges = _mesh_edges(pts)
    L = np.linalg.norm(pts[edges[:, 1]] - pts[edges[:, 0]], axis=1)
    mid = 0.5 * (pts[edges[:, 0]] + pts[edges[:, 1]])
    short = L < 0.6 * size_fn(mid)
    doomed = set()
    for i, j in edges[short]:
        i, j = int(i), int(j)
        if i in doomed or j in doomed:
            continue
        victim = max(i, j)  # later index; boundary nodes come first
        if victim >= n_fixed:
            doomed.add(victim)
    if not doomed:
        return pts
    keep = np.ones(len(pts), dtype=bool)
    keep[list(doomed)] = False
    return pts[keep]


def _fill_holes(pts, n_fixed, poly, btree, size_fn):
    """Insert midpoints of edges much longer than the local target size;
    repulsion spreads points but never creates them."""
    edges = _mesh_edges(pts)
    L = np.linalg.norm(pts[edges[:, 1]] - pts[edges[:, 0]], axis=1)
    mid = 0.5 * (pts[edges[:, 0]] + pts[edges[:, 1]])
    cand = mid[L > 1.7 * size_fn(mid)]
    if len(cand) == 0:
        return pts
    inside = _points_in_polygon(cand, poly.vertices)
    cand = cand[inside]
    if len(cand) == 0:
        return pts
    d_b, _ = btree.query(cand)
    cand = cand[d_b >= 0.55 * size_fn(cand)]
    if len(cand) == 0:
        return pts
    return np.concatenate([pts, cand], axis=0)


def _relax(pts, n_fixed, poly, btree, size_fn, iters):
    verts = poly.vertices
    pts = pts.copy()
    for it in range(iters):
        if it % 3 == 0:
            pts = _drop_crowded(pts, n_fixed, size_fn)
            if it > 0:
                pts = _fill_holes(pts, n_fixed, poly, btree, size_fn)
        edges = _mesh_edges(pts)
        vec = pts[edges[:, 1]] - pts[edges[:, 0]]
        L = np.linalg.norm(vec, axis=1)
        mid = 0.5 * (pts[edges[:, 0]] + pts[edges[:, 1]])
        L0 = 1.18 * size_fn(mid)
        L0 *= math.sqrt(float(np.sum(L**2) / np.sum(L0**2)))
        f = np.maximum(0.0, L0 - L) / np.maximum(L, 1e-300)
        push = vec * f[:, None]
        force = np.zeros_like(pts)
        np.add.at(force, edges[:, 0], -push)
        np.add.at(force, edges[:, 1], push)
        step = 0.2 * force[n_fixed:]
        norm = np.linalg.norm(step, axis=1)
        cap = 0.35 * size_fn(pts[n_fixed:])
        over = norm > cap
        step[over] *= (cap[over] / norm[over])[:, None]
        moved = pts[n_fixed:] + step
        ok = _points_in_polygon(moved, verts)
        d_b, _ = btree.query(moved)
        ok &= d_b >= 0.5 * size_fn(moved)
        upd = pts[n_fixed:]
        upd[ok] = moved[ok]
        pts[n_fixed:] = upd
    return _drop_crowded(pts, n_fixed, size_fn)


def _clip_triangulation(pts, verts):
    """Delaunay, then keep triangles whose centroid lies in the polygon."""
    simplices = Delaunay(pts).simplices
    cent = pts[simplices].mean(axis=1)
    simplices = simplices[_points_in_polygon(cent, verts)]
    simplices = _orient_ccw(pts, simplices)
    return _drop_slivers(pts, simplices)


def _tri_min_angles_deg(pts, simplices, exempt_floor):
    """Per-triangle worst angle in degrees, with angles at exempt nodes
    replaced by 180 so they never count.  exempt_floor maps node index
    to the reduced floor allowed there."""
    p = pts[simplices]
    out = np.empty((len(simplices), 3))
    for l in range(3):
        a = p[:, (l + 1) % 3] - p[:, l]
        b = p[:, (l + 2) % 3] - p[:, l]
        num = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
        den = (a * b).sum(1)
        out[:, l] = np.degrees(np.abs(np.arctan2(num, den)))
    slack = np.zeros_like(out)
    for node, f in exempt_floor.items():
        slack[simplices == node] = f
    return out, slack


def _quality_repair(pts, n_fixed, poly, btree, size_fn, corner_idx, floor_deg, rounds=60):
    """Insert circumcenters of below-floor triangles until the floor holds.

    No relaxation afterwards: a Delaunay circumcenter is at least its
    circumradius away from every existing point, so insertion is safe by
    construction and provably removes the offending triangle.  A
    circumcenter that falls outside the domain or hugs the fixed
    boundary is replaced by deleting a movable node of the bad triangle
    instead.
    """
    verts = poly.vertices
    angles = poly.corner_angles()
    exempt = {
        corner_idx[s]: max(0.0, floor_deg - min(floor_deg, 0.45 * math.degrees(angles[s])))
        for s in range(len(verts))
    }
    for _ in range(rounds):
        simplices = _clip_triangulation(pts, verts)
        ang, slack = _tri_min_angles_deg(pts, simplices, exempt)
        bad = (ang < floor_deg - slack - 1e-9).any(axis=1)
        if not bad.any():
            return pts, simplices
        bad_tris = simplices[bad]
        cc = _circumcenters(pts, bad_tris)
        ok = _points_in_polygon(cc, verts)
        d_b, _ = btree.query(cc)
        ok &= d_b >= 0.3 * size_fn(cc)
        accepted: list[NDArray] = []
        doomed: set[int] = set()
        for t, c, acc in zip(bad_tris, cc, ok):
            if acc and all(np.linalg.norm(c - a) >= 0.45 * size_fn(c[None, :])[0] for a in accepted):
                accepted.append(c)
                continue
            p = pts[t]
            lens = [np.linalg.norm(p[(i + 1) % 3] - p[i]) for i in range(3)]
            i = int(np.argmin(lens))
            pair = sorted((int(t[i]), int(t[(i + 1) % 3])))
            for node in reversed(pair):
                if node >= n_fixed and node not in doomed:
                    doomed.add(node)
                    break
        if accepted:
            pts = np.concatenate([pts, np.asarray(accepted)], axis=0)
        if doomed:
            keep = np.ones(len(pts), dtype=bool)
            keep[list(doomed)] = False
            pts = pts[keep]
        if not accepted and not doomed:
            break  # nothing else this loop can do
    return pts, _clip_triangulation(pts, verts)


def _circumcenters(pts, simplices):
    a, b, c = (pts[simplices[:, i]] for i in range(3))
    ab, ac = b - a, c - a
    d = 2.0 * (ab[:, 0] * ac[:, 1] - ab[:, 1] * ac[:, 0])
    nab = (ab**2).sum(1)
    nac = (ac**2).sum(1)
    ux = (ac[:, 1] * nab - ab[:, 1] * nac) / d
    uy = (ab[:, 0] * nac - ac[:, 0] * nab) / d
    return a + np.column_stack([ux, uy])


def _orient_ccw(pts, simplices):
    p = pts[simplices]
    area2 = (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (
        p[:, 2, 0] - p[:, 0, 0]
    ) * (p[:, 1, 1] - p[:, 0, 1])
    flip = area2 < 0
    out = simplices.copy()
    out[flip] = out[flip][:, [0, 2, 1]]
    return out


def _drop_slivers(pts, simplices):
    p = pts[simplices]
    area2 = np.abs(
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )
    e = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 1], p[:, 0] - p[:, 2]], axis=1)
    lmax = np.linalg.norm(e, axis=2).max(axis=1)
    return simplices[area2 > 1e-10 * lmax**2]


def _check_boundary_chain(mesh: Mesh, verts) -> None:
    """Every boundary edge must lie on a polygon edge, within roundoff."""
    mids = 0.5 * (mesh.nodes[mesh.boundary_edges[:, 0]] + mesh.nodes[mesh.boundary_edges[:, 1]])
    n = len(verts)
    scale = float(np.linalg.norm(verts.max(0) - verts.min(0)))
    dmin = np.full(len(mids), np.inf)
    for s in range(n):
        a, b = verts[s], verts[(s + 1) % n]
        dmin = np.minimum(dmin, _point_segment_distance(mids, a, b))
    if np.any(dmin > 1e-7 * scale):
        raise MeshingError("triangulation boundary strays from the polygon boundary")


def _point_segment_distance(pts, a, b):
    ab = b - a
    t = np.clip(((pts - a) @ ab) / float(ab @ ab), 0.0, 1.0)
    proj = a[None, :] + t[:, None] * ab[None, :]
    return np.linalg.norm(pts - proj, axis=1)


# ---------------------------------------------------------------------------
# box mesh for the induced-field computation


def make_box_mesh(domain_poly: PolygonDomain, h: float, *, factor: float = 3.0) -> Mesh:
    """Square box mesh enclosing the polygon, for vector potentials.

    The box is centered on the polygon's bounding box, with side
    ``factor`` times the larger bounding-box side.  Elements are of
    size about ``h`` inside the polygon's bounding box and coarsen
    linearly with distance from it.
    """
    if factor < 1.5:
        raise ParameterError(f"box factor must be >= 1.5, got {factor}")
    verts = domain_poly.vertices
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    c = 0.5 * (lo + hi)
    side = factor * float(max(hi - lo))
    half = side / 2.0
    box = PolygonDomain(
        np.array([
            [c[0] - half, c[1] - half],
            [c[0] + half, c[1] - half],
            [c[0] + half, c[1] + half],
            [c[0] - half, c[1] + half],
        ])
    )

    def size_fn(pts):
        dx = np.maximum(np.maximum(lo[0] - pts[:, 0], pts[:, 0] - hi[0]), 0.0)
        dy = np.maximum(np.maximum(lo[1] - pts[:, 1], pts[:, 1] - hi[1]), 0.0)
        d = np.hypot(dx, dy)
        return np.clip(h * (1.0 + 0.7 * d / max(h, 1e-12) * 0.12), h, 4.0 * h)

    mesh = make_polygon_mesh(box, h, grading=1.0, size_fn=size_fn)
    mesh.params["kind"] = "box"
    mesh.params["factor"] = factor
    return mesh


# ---------------------------------------------------------------------------
# distance fields


@dataclass(frozen=True)
class DistanceField:
    """Per-node distances used by localization diagnostics.

    to_corners  : distance to the nearest tagged corner
    to_boundary : distance to the physical boundary
    nearest     : corner id realizing to_corners
    """

    to_corners: NDArray[np.float64]
    to_boundary: NDArray[np.float64]
    nearest: NDArray[np.int64]


def distance_field(mesh: Mesh, corner_ids=None) -> DistanceField:
    """Exact distances from every node to corners and physical boundary."""
    if corner_ids is None:
        corner_ids = sorted(mesh.corner_nodes)
    if len(corner_ids) == 0:
        raise ParameterError("distance_field needs at least one corner")
    cpts = np.array([mesh.nodes[mesh.corner_nodes[c]] for c in corner_ids])
    d = np.linalg.norm(mesh.nodes[:, None, :] - cpts[None, :, :], axis=2)
    nearest_pos = d.argmin(axis=1)
    to_corners = d[np.arange(mesh.n_nodes), nearest_pos]
    nearest = np.array([corner_ids[i] for i in nearest_pos], dtype=np.int64)

    to_boundary = _boundary_distance_points(mesh, mesh.nodes)
    return DistanceField(to_corners=to_corners, to_boundary=to_boundary, nearest=nearest)


def _boundary_distance_points(mesh: Mesh, points: NDArray) -> NDArray[np.float64]:
    """Exact distance from arbitrary points to the physical boundary."""
    phys = mesh.boundary_edges[mesh.boundary_tags == PHYSICAL]
    if len(phys) == 0:
        raise GeometryError("mesh has no physical boundary edges")
    points = np.atleast_2d(points)
    out = np.full(len(points), np.inf)
    a = mesh.nodes[phys[:, 0]]
    b = mesh.nodes[phys[:, 1]]
    ab = b - a
    den = (ab * ab).sum(1)
    chunk = max(1, int(2e7) // max(1, len(phys)))
    for start in range(0, len(points), chunk):
        pts = points[start : start + chunk]
        v = pts[:, None, :] - a[None, :, :]
        t = np.clip((v * ab[None, :, :]).sum(2) / den[None, :], 0.0, 1.0)
        proj = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        out[start : start + chunk] = np.linalg.norm(pts[:, None, :] - proj, axis=2).min(axis=1)
    return out


def scale_mesh(mesh: Mesh, factor: float) -> Mesh:
    """Similar copy of a mesh with all coordinates multiplied by factor.

    Topology, tags and corner angles are unchanged, so the scaled mesh
    is exactly similar to the original (used for scale-invariance
    checks at varying field strength)."""
    if not math.isfinite(factor) or factor <= 0:
        raise ParameterError(f"scale factor must be positive, got {factor}")
    return Mesh(
        nodes=mesh.nodes * factor,
        triangles=mesh.triangles.copy(),
        boundary_edges=mesh.boundary_edges.copy(),
        boundary_tags=mesh.boundary_tags.copy(),
        corner_nodes=dict(mesh.corner_nodes),
        corner_angles=dict(mesh.corner_angles),
        h=mesh.h * factor,
        params={**mesh.params, "scaled_by": factor},
    )


def refine_mesh(mesh: Mesh) -> Mesh:
    """Uniform quadrisection: every triangle split at its edge midpoints.

    The refined P1 space contains the coarse one and every child
    triangle is similar to its parent (the three corner children at
    half scale, the central one reflected), so quality is preserved
    exactly and the coarse/fine pair forms a structurally consistent
    family for ratio-4 Richardson extrapolation of eigenvalues.
    """
    pts = mesh.nodes
    tris = mesh.triangles
    n = len(pts)
    edges = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    lo = edges.min(axis=1).astype(np.int64)
    hi = edges.max(axis=1).astype(np.int64)
    key = lo * n + hi
    uniq, inv = np.unique(key, return_inverse=True)
    mid_xy = 0.5 * (pts[uniq // n] + pts[uniq % n])
    nodes = np.vstack([pts, mid_xy])
    mid = (n + inv).reshape(3, -1).T  # per-tri midpoint ids: (01, 12, 20)

    a, b, c = tris[:, 0], tris[:, 1], tris[:, 2]
    mab, mbc, mca = mid[:, 0], mid[:, 1], mid[:, 2]
    children = np.concatenate(
        [
            np.column_stack([a, mab, mca]),
            np.column_stack([mab, b, mbc]),
            np.column_stack([mca, mbc, c]),
            np.column_stack([mab, mbc, mca]),
        ]
    )

    be = mesh.boundary_edges
    be_lo = be.min(axis=1).astype(np.int64)
    be_hi = be.max(axis=1).astype(np.int64)
    be_mid = n + np.searchsorted(uniq, be_lo * n + be_hi)
    new_edges = np.concatenate(
        [np.column_stack([be[:, 0], be_mid]), np.column_stack([be_mid, be[:, 1]])]
    )
    new_tags = np.concatenate([mesh.boundary_tags, mesh.boundary_tags])

    return Mesh(
        nodes=nodes,
        triangles=children.astype(np.int64),
        boundary_edges=new_edges.astype(np.int64),
        boundary_tags=new_tags,
        corner_nodes=dict(mesh.corner_nodes),
        corner_angles=dict(mesh.corner_angles),
        h=mesh.h * 0.5,
        params={**mesh.params, "refined": mesh.params.get("refined", 0) + 1},
    )


# ---------------------------------------------------------------------------
# interpolation between meshes


def interpolation_matrix(mesh: Mesh, points: NDArray):
    """Sparse (len(points), n_nodes) P1 interpolation operator."""
    from scipy.sparse import csr_matrix

    pts = np.atleast_2d(points)
    tri_idx, bary = mesh.locate(pts)
    rows = np.repeat(np.arange(len(pts)), 3)
    cols = mesh.triangles[tri_idx].ravel()
    vals = bary.ravel()
    return csr_matrix((vals, (rows, cols)), shape=(len(pts), mesh.n_nodes))


# ---------------------------------------------------------------------------
# serialization


def save_mesh(mesh: Mesh, path: str) -> None:
    """Write mesh text format v1 (see module docstring)."""
    lines = ["cornersc-mesh v1"]
    lines.append(
        f"{mesh.n_nodes} {mesh.n_triangles} {len(mesh.boundary_edges)} {len(mesh.corner_nodes)}"
    )
    for x, y in mesh.nodes:
        lines.append(f"{x:.17g} {y:.17g}")
    for i, j, k in mesh.triangles:
        lines.append(f"{i} {j} {k}")
    for (i, j), t in zip(mesh.boundary_edges, mesh.boundary_tags):
        lines.append(f"{i} {j} {_TAG_NAMES[int(t)]}")
    for cid in sorted(mesh.corner_nodes):
        ang = mesh.corner_angles.get(cid, float("nan"))
        lines.append(f"{cid} {mesh.corner_nodes[cid]} {ang:.17g}")
    lines.append(f"h {mesh.h:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_mesh(path: str) -> Mesh:
    """Read mesh text format v1 and validate the result."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "cornersc-mesh v1":
        raise GeometryError(f"{path}: not a cornersc-mesh v1 file")
    try:
        nn, nt, ne, nc = (int(tok) for tok in lines[1].split())
        pos = 2
        nodes = np.array(
            [[float(t) for t in ln.split()] for ln in lines[pos : pos + nn]]
        )
        pos += nn
        tris = np.array(
            [[int(t) for t in ln.split()] for ln in lines[pos : pos + nt]], dtype=np.int64
        )
        pos += nt
        b_edges, b_tags = [], []
        for ln in lines[pos : pos + ne]:
            i, j, name = ln.split()
            b_edges.append((int(i), int(j)))
            b_tags.append(_TAG_VALUES[name])
        pos += ne
        corner_nodes, corner_angles = {}, {}
        for ln in lines[pos : pos + nc]:
            toks = ln.split()
            corner_nodes[int(toks[0])] = int(toks[1])
            corner_angles[int(toks[0])] = float(toks[2])
        pos += nc
        h = float(lines[pos].split()[1])
    except (ValueError, IndexError, KeyError) as exc:
        raise GeometryError(f"{path}: malformed mesh file ({exc})") from exc
    if nodes.shape != (nn, 2) or tris.shape != (nt, 3):
        raise GeometryError(f"{path}: array shapes disagree with header")
    if nt and (tris.min() < 0 or tris.max() >= nn):
        raise GeometryError(f"{path}: triangle node index out of range")
    mesh = Mesh(
        nodes=nodes,
        triangles=tris,
        boundary_edges=np.asarray(b_edges, dtype=np.int64),
        boundary_tags=np.asarray(b_tags, dtype=np.uint8),
        corner_nodes=corner_nodes,
        corner_angles=corner_angles,
        h=h,
    )
    validate_mesh(mesh)
    return mesh
