"""Finite element assembly for magnetic quadratic forms.

Everything is piecewise-linear (P1) on triangles.  For a vector
potential A and field strength b, the sesquilinear form

    a(u, v) = integral of  grad(u).grad(conj v)
              + i b [conj(v) A.grad(u) - u A.grad(conj v)]
              + b^2 |A|^2 u conj(v)

is the weak form of (-i grad - b A)^2 with natural (magnetic Neumann)
boundary conditions.  With P1 elements and the standard linear gauge
every integrand is polynomial of degree at most four, so the six-point
degree-four triangle rule assembles all matrices exactly; the same rule
integrates |psi|^4 of a P1 function exactly, which the nonlinear
energies rely on.

The quadrature operator ``quad_ops`` exposes the evaluation map E from
nodal values to quadrature-point values together with the global weight
vector, so downstream code computes nonlinear integrals as sparse
matrix-vector products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import csr_matrix

from cornersc.errors import ParameterError
from cornersc.geometry import ARTIFICIAL, Mesh

NATURAL = "natural"
ESSENTIAL_ZERO = "essential-zero"

# Degree-4 rule on the reference triangle (6 points), exact for all
# polynomials of total degree <= 4; weights sum to 1.
_QA = 0.445948490915965
_QB = 0.091576213509771
_QWA = 0.223381589678011
_QWB = 0.109951743655322
QUAD_BARY = np.array(
    [
        [1 - 2 * _QA, _QA, _QA],
        [_QA, 1 - 2 * _QA, _QA],
        [_QA, _QA, 1 - 2 * _QA],
        [1 - 2 * _QB, _QB, _QB],
        [_QB, 1 - 2 * _QB, _QB],
        [_QB, _QB, 1 - 2 * _QB],
    ]
)
QUAD_W = np.array([_QWA, _QWA, _QWA, _QWB, _QWB, _QWB])


def standard_gauge(points: NDArray) -> NDArray:
    """The linear vector potential with unit curl: (-y/2, x/2)."""
    pts = np.atleast_2d(points)
    return 0.5 * np.column_stack([-pts[:, 1], pts[:, 0]])


@dataclass(frozen=True)
class GaugeField:
    """Vector potential, either the standard linear gauge or an
    explicit nodal P1 field on a mesh.

    ``quad_values`` may carry precomputed per-quadrature-point values
    (shape (T, 6, 2)); they take precedence and are how the coupled
    minimizer feeds a box-mesh potential into domain assembly without
    an intermediate nodal projection.
    """

    kind: str
    nodal: NDArray | None = None
    quad_values: NDArray | None = None

    @staticmethod
    def standard() -> "GaugeField":
        return GaugeField(kind="standard")

    @staticmethod
    def from_nodal(values: NDArray) -> "GaugeField":
        values = np.asarray(values, dtype=float)
        if values.ndim != 2 or values.shape[1] != 2:
            raise ParameterError("nodal gauge values must have shape (n_nodes, 2)")
        return GaugeField(kind="explicit", nodal=values)

    @staticmethod
    def from_quad(values: NDArray) -> "GaugeField":
        return GaugeField(kind="explicit-quad", quad_values=np.asarray(values, dtype=float))

    def at_quad(self, mesh: Mesh) -> NDArray:
        """(T, 6, 2) potential values at the quadrature points."""
        if self.quad_values is not None:
            if self.quad_values.shape != (mesh.n_triangles, 6, 2):
                raise ParameterError("quadrature gauge values do not match the mesh")
            return self.quad_values
        tri_pts = mesh.nodes[mesh.triangles]  # (T,3,2)
        xq = np.einsum("qi,tij->tqj", QUAD_BARY, tri_pts)
        if self.kind == "standard":
            return 0.5 * np.stack([-xq[..., 1], xq[..., 0]], axis=-1)
        if self.nodal is None:
            raise ParameterError("explicit gauge has no nodal values")
        if len(self.nodal) != mesh.n_nodes:
            raise ParameterError("nodal gauge values do not match the mesh")
        vals = self.nodal[mesh.triangles]  # (T,3,2)
        return np.einsum("qi,tij->tqj", QUAD_BARY, vals)


def _p1_geometry(mesh: Mesh):
    """Per-triangle areas and constant shape gradients (T,3,2)."""
    p = mesh.nodes[mesh.triangles]
    v1 = p[:, 1] - p[:, 0]
    v2 = p[:, 2] - p[:, 0]
    det = v1[:, 0] * v2[:, 1] - v1[:, 1] * v2[:, 0]
    area = 0.5 * det
    g = np.empty((len(p), 3, 2))
    g[:, 1, 0] = v2[:, 1] / det
    g[:, 1, 1] = -v2[:, 0] / det
    g[:, 2, 0] = -v1[:, 1] / det
    g[:, 2, 1] = v1[:, 0] / det
    g[:, 0] = -g[:, 1] - g[:, 2]
    return area, g


@dataclass
class QuadOps:
    """Quadrature evaluation data for nonlinear integrals.

    E    : sparse (6T, N) map from nodal values to quadrature values
    w    : (6T,) global weights (reference weight times triangle area)
    x    : (6T, 2) quadrature point coordinates
    """

    E: csr_matrix
    w: NDArray[np.float64]
    x: NDArray[np.float64]


def quad_ops(mesh: Mesh) -> QuadOps:
    area, _ = _p1_geometry(mesh)
    T = mesh.n_triangles
    rows = np.repeat(np.arange(6 * T), 3)
    cols = np.repeat(mesh.triangles, 6, axis=0).reshape(T * 6, 3).ravel()
    vals = np.tile(QUAD_BARY, (T, 1)).ravel()
    E = csr_matrix((vals, (rows, cols)), shape=(6 * T, mesh.n_nodes))
    w = (area[:, None] * QUAD_W[None, :]).ravel()
    tri_pts = mesh.nodes[mesh.triangles]
    x = np.einsum("qi,tij->tqj", QUAD_BARY, tri_pts).reshape(6 * T, 2)
    return QuadOps(E=E, w=w, x=x)


@dataclass
class MagneticSystem:
    """Assembled generalized eigenvalue/energy problem.

    K holds the magnetic form at strength b, M the mass form, both on
    the active degrees of freedom.  ``active`` indexes active nodes in
    the full mesh; with the natural arc condition every node is active,
    with the zero condition the artificial-boundary nodes are removed.
    """

    K: csr_matrix
    M: csr_matrix
    b: float
    active: NDArray[np.int64]
    n_full: int
    arc_condition: str
    mesh_signature: str
    gauge_kind: str

    @property
    def n_active(self) -> int:
        return len(self.active)

    def expand(self, vec: NDArray) -> NDArray:
        """Zero-pad an active-DOF vector back to all mesh nodes."""
        vec = np.asarray(vec)
        if vec.ndim == 1:
            out = np.zeros(self.n_full, dtype=vec.dtype)
            out[self.active] = vec
            return out
        out = np.zeros((self.n_full, vec.shape[1]), dtype=vec.dtype)
        out[self.active] = vec
        return out

    def restrict(self, vec_full: NDArray) -> NDArray:
        return np.asarray(vec_full)[self.active]

    def to_coo(self):
        """(K, M) as COO matrices for external tooling."""
        return self.K.tocoo(), self.M.tocoo()


def assemble(
    mesh: Mesh,
    b: float,
    gauge: GaugeField | None = None,
    arc_condition: str = NATURAL,
) -> MagneticSystem:
    """Assemble the magnetic form K(b) and the mass form M.

    ``arc_condition`` controls the truncation arc of sector meshes:
    NATURAL keeps the magnetic Neumann condition everywhere,
    ESSENTIAL_ZERO eliminates the artificial-boundary nodes (the
    truncated problem then bounds the untruncated one from above, and
    no spurious states attach to the artificial junctions).
    """
    if not math.isfinite(b) or b < 0:
        raise ParameterError(f"field strength must be finite and nonnegative, got {b}")
    if arc_condition not in (NATURAL, ESSENTIAL_ZERO):
        raise ParameterError(f"unknown arc condition {arc_condition!r}")
    if gauge is None:
        gauge = GaugeField.standard()

    area, g = _p1_geometry(mesh)
    tris = mesh.triangles
    T = mesh.n_triangles
    aq = gauge.at_quad(mesh)  # (T,6,2)

    s_loc = np.einsum("tid,tjd,t->tij", g, g, area)
    wq = area[:, None] * QUAD_W[None, :]  # (T,6)
    # d_loc[i,j] = sum_q w_q phi_i(x_q) (A(x_q) . grad phi_j)
    ag = np.einsum("tqd,tjd->tqj", aq, g)
    d_loc = np.einsum("tq,qi,tqj->tij", wq, QUAD_BARY, ag)
    a2 = (aq**2).sum(-1)  # (T,6)
    v_loc = np.einsum("tq,tq,qi,qj->tij", wq, a2, QUAD_BARY, QUAD_BARY)
    m_loc = np.einsum("tq,qi,qj->tij", wq, QUAD_BARY, QUAD_BARY)

    k_loc = s_loc + 1j * b * (d_loc - d_loc.transpose(0, 2, 1)) + b * b * v_loc

    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = mesh.n_nodes
    K = csr_matrix((k_loc.ravel(), (rows, cols)), shape=(n, n))
    M = csr_matrix((m_loc.ravel(), (rows, cols)), shape=(n, n))

    if arc_condition == ESSENTIAL_ZERO:
        constrained = mesh.nodes_on_tag(ARTIFICIAL)
        mask = np.ones(n, dtype=bool)
        mask[constrained] = False
        active = np.nonzero(mask)[0].astype(np.int64)
        K = K[active][:, active].tocsr()
        M = M[active][:, active].tocsr()
    else:
        active = np.arange(n, dtype=np.int64)

    return MagneticSystem(
        K=K,
        M=M,
        b=float(b),
        active=active,
        n_full=n,
        arc_condition=arc_condition,
        mesh_signature=mesh.signature(),
        gauge_kind=gauge.kind,
    )


def l4_norm(mesh: Mesh, psi: NDArray, ops: QuadOps | None = None) -> float:
    """L4 norm of the P1 interpolant of nodal values, exactly integrated."""
    if ops is None:
        ops = quad_ops(mesh)
    pq = ops.E @ np.asarray(psi)
    return float(np.sum(ops.w * np.abs(pq) ** 4)) ** 0.25


def curl_nodal(mesh: Mesh, values: NDArray) -> NDArray:
    """Per-triangle curl of a nodal P1 vector field."""
    _, g = _p1_geometry(mesh)
    vt = values[mesh.triangles]  # (T,3,2)
    return np.einsum("ti,ti->t", g[:, :, 0], vt[:, :, 1]) - np.einsum(
        "ti,ti->t", g[:, :, 1], vt[:, :, 0]
    )


def div_nodal(mesh: Mesh, values: NDArray) -> NDArray:
    """Per-triangle divergence of a nodal P1 vector field."""
    _, g = _p1_geometry(mesh)
    vt = values[mesh.triangles]
    return np.einsum("ti,ti->t", g[:, :, 0], vt[:, :, 0]) + np.einsum(
        "ti,ti->t", g[:, :, 1], vt[:, :, 1]
    )


def scalar_stiffness_mass(mesh: Mesh):
    """Plain (non-magnetic) stiffness and mass matrices."""
    area, g = _p1_geometry(mesh)
    tris = mesh.triangles
    s_loc = np.einsum("tid,tjd,t->tij", g, g, area)
    wq = area[:, None] * QUAD_W[None, :]
    m_loc = np.einsum("tq,qi,qj->tij", wq, QUAD_BARY, QUAD_BARY)
    rows = np.repeat(tris, 3, axis=1).ravel()
    cols = np.tile(tris, (1, 3)).ravel()
    n = mesh.n_nodes
    S = csr_matrix((s_loc.ravel(), (rows, cols)), shape=(n, n))
    M = csr_matrix((m_loc.ravel(), (rows, cols)), shape=(n, n))
    return S, M


# ---------------------------------------------------------------------------
# nonlinear energy


@dataclass
class GLState:
    """Order parameter plus vector potential at given material and field.

    ``psi`` holds complex nodal values; ``potential`` is the unit-field
    vector potential profile A (curl A = 1 for the applied field), so
    the physical momentum is p = -i grad - kappa*H*A.  The normal state
    is psi = 0 with the canonical profile.
    """

    psi: NDArray
    potential: GaugeField
    kappa: float
    field_H: float

    @property
    def b_eff(self) -> float:
        return self.kappa * self.field_H


def gl_energy(
    state: GLState,
    mesh: Mesh,
    *,
    system: MagneticSystem | None = None,
    ops: QuadOps | None = None,
    box_mesh: Mesh | None = None,
    box_potential: NDArray | None = None,
) -> float:
    """Ginzburg-Landau energy of a state on its mesh.

    E = |p psi|^2 - kappa^2 |psi|^2 + (kappa^2/2) |psi|^4, integrated
    over the mesh, plus the field energy kappa^2 H^2 |curl A - 1|^2
    over the box when a box mesh and nodal potential are supplied (the
    term vanishes identically for frozen-field states).  ``system``
    and ``ops`` allow reuse of the assembled forms across calls; the
    system must be the natural-condition assembly of this mesh at
    b = kappa*H with the state's potential.
    """
    kappa = state.kappa
    if system is None:
        system = assemble(mesh, state.b_eff, gauge=state.potential, arc_condition=NATURAL)
    elif abs(system.b - state.b_eff) > 1e-12 * max(1.0, state.b_eff):
        raise ParameterError(
            f"assembled field {system.b} does not match state b={state.b_eff}"
        )
    if ops is None:
        ops = quad_ops(mesh)
    psi = np.asarray(state.psi)
    kin = float(np.real(np.vdot(psi, system.K @ psi)))
    l2sq = float(np.real(np.vdot(psi, system.M @ psi)))
    pq = ops.E @ psi
    l4q = float(np.sum(ops.w * np.abs(pq) ** 4))
    energy = kin - kappa**2 * l2sq + 0.5 * kappa**2 * l4q
    if box_mesh is not None and box_potential is not None:
        curl = curl_nodal(box_mesh, np.asarray(box_potential, dtype=float))
        energy += kappa**2 * state.field_H**2 * float(
            np.sum(box_mesh.tri_areas() * (curl - 1.0) ** 2)
        )
    return energy


def gl_gradient(
    state: GLState,
    mesh: Mesh,
    *,
    system: MagneticSystem | None = None,
    ops: QuadOps | None = None,
) -> NDArray:
    """Nodal gradient G of the energy in psi at fixed potential.

    Convention: E(psi + eps*delta) - E(psi) = 2*eps*Re<delta, G> +
    O(eps^2) with the plain coefficient inner product, i.e. G collects
    the derivative with respect to the conjugate coordinates.  The
    quartic term differentiates under the quadrature sum, so G is
    exactly consistent with gl_energy on the discrete space.
    """
    kappa = state.kappa
    if system is None:
        system = assemble(mesh, state.b_eff, gauge=state.potential, arc_condition=NATURAL)
    if ops is None:
        ops = quad_ops(mesh)
    psi = np.asarray(state.psi)
    pq = ops.E @ psi
    quart = ops.E.T @ (ops.w * np.abs(pq) ** 2 * pq)
    return system.K @ psi - kappa**2 * (system.M @ psi) + kappa**2 * quart
