"""Nonlinear energy minimization: frozen-field and self-consistent
Ginzburg-Landau states, the sector corner functional, and the onset
field.

All minimizations share one engine: preconditioned nonlinear conjugate
gradients on the discrete functional

    E(psi) = psi^H K psi - c2 psi^H M psi + (c4/2) sum_q w_q |psi_q|^4,

whose restriction to a line psi + t*d is an exact quartic polynomial in
t.  The line search therefore minimizes that polynomial in closed form
and backtracks only as a roundoff guard, so the energy decreases at
every accepted step.  The preconditioner is the shifted operator
(K + c2 M)^{-1}, which is Hermitian positive definite for any c2 >= 0
and collapses the mesh-grading spread of the spectrum; convergence is
reported in the M-weighted dual norm sqrt(G^H M^{-1} G).

The self-consistent solver alternates exact minimization over the
vector potential (a curl-curl plus divergence-penalty solve on an
enclosing box, with A - F pinned to zero on the box boundary) with
psi-descent at frozen potential.  Both half steps minimize the same
penalized functional, so that Lyapunov quantity must decrease every
sweep; growth beyond roundoff is reported as numerical instability
rather than silently accepted.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from scipy.sparse import block_diag, csr_matrix, diags
from scipy.sparse.linalg import splu

from .assembly import (
    ESSENTIAL_ZERO,
    NATURAL,
    QUAD_BARY,
    GaugeField,
    GLState,
    MagneticSystem,
    _p1_geometry,
    assemble,
    curl_nodal,
    quad_ops,
)
from .critfield import solve_hc3_linear
from .eigen import (
    WIDE_GAUGE_ALPHA,
    _THETA0_GUIDE,
    _fit_exponential,
    _poly_key,
    anchored_gauge,
    field_mesh,
    sector_gauge,
    smallest_eigenpairs,
)
from .errors import (
    AccuracyError,
    ConvergenceError,
    GeometryError,
    InstabilityError,
    NoRootError,
    ParameterError,
    SolverError,
)
from .geometry import (
    Mesh,
    PolygonDomain,
    SectorDomain,
    make_polygon_mesh,
    make_sector_boundary_mesh,
    make_sector_mesh,
    scale_mesh,
)

ZERO = "zero"
LINEAR_MODE = "linear-mode"
RANDOM = "random"
EXPLICIT = "explicit"
_INITS = (ZERO, LINEAR_MODE, RANDOM, EXPLICIT)

# A state with mass below this fraction of sqrt(area) is the normal
# state for all reporting purposes; descent from above the onset field
# decays through this level exponentially fast.
TRIVIAL_NORM_FRACTION = 1e-6

MAXP_TOL = 1e-3


@dataclass
class MinimizationOutcome:
    """Converged (or trivial) state of one psi-minimization."""

    state: GLState
    energy: float
    grad_norm: float
    iterations: int
    trivial_flag: bool
    energy_history: tuple[float, ...] = field(default=(), repr=False)
    sweeps: int = 0
    mesh: Mesh | None = field(default=None, repr=False)
    box_mesh: Mesh | None = None
    box_potential: NDArray | None = None


@dataclass
class SectorModelResult:
    """Minimizer data of the corner functional on a truncated sector."""

    alpha: float
    mu1_param: float
    mu2_param: float
    energy: float
    psi0: NDArray
    decay_rate: float
    energy_error: float = 0.0
    boundary_mass: float = 0.0
    mesh: Mesh | None = None


# ---------------------------------------------------------------------------
# descent engine


class _Quartic:
    """Cached operators of the discrete quartic functional on active DOFs."""

    def __init__(self, mesh: Mesh, system: MagneticSystem, c2: float, c4: float):
        if c4 <= 0:
            raise ParameterError(f"quartic coefficient must be positive, got {c4}")
        self.system = system
        self.c2 = float(c2)
        self.c4 = float(c4)
        ops = quad_ops(mesh)
        E = ops.E
        if system.n_active != system.n_full:
            E = E.tocsc()[:, system.active].tocsr()
        self.E = E
        self.w = ops.w
        self.xq = ops.x
        self.K = system.K.tocsr()
        self.M = system.M.tocsr()
        self.area = mesh.area
        self._m_lu = splu(self.M.tocsc().astype(np.float64))
        self._p_lu = splu((self.K + self.c2 * self.M).tocsc().astype(np.complex128))

    def precond(self, g: NDArray) -> NDArray:
        return self._p_lu.solve(g)

    def m_inv(self, g: NDArray) -> NDArray:
        return self._m_lu.solve(g.real) + 1j * self._m_lu.solve(g.imag)

    def energy_parts(self, psi: NDArray):
        Kp, Mp, pq = self.K @ psi, self.M @ psi, self.E @ psi
        return Kp, Mp, pq

    def energy_of(self, psi: NDArray, Kp, Mp, pq) -> float:
        return float(
            np.real(np.vdot(psi, Kp))
            - self.c2 * np.real(np.vdot(psi, Mp))
            + 0.5 * self.c4 * np.sum(self.w * np.abs(pq) ** 4)
        )

    def gradient(self, Kp, Mp, pq) -> NDArray:
        return Kp - self.c2 * Mp + self.c4 * (self.E.T @ (self.w * np.abs(pq) ** 2 * pq))


def _quartic_step(e1: float, e2: float, e3: float, e4: float) -> float | None:
    """Positive minimizer of e1 t + e2 t^2 + e3 t^3 + e4 t^4, if any."""
    if e4 > 0:
        roots = np.roots([4.0 * e4, 3.0 * e3, 2.0 * e2, e1])
    elif e2 > 0:
        roots = np.array([-e1 / (2.0 * e2)])
    else:
        return None
    best_t, best_v = None, 0.0
    for r in np.atleast_1d(roots):
        if abs(r.imag) > 1e-9 * (1.0 + abs(r.real)) or r.real <= 0:
            continue
        t = float(r.real)
        v = t * (e1 + t * (e2 + t * (e3 + t * e4)))
        if v < best_v:
            best_t, best_v = t, v
    return best_t


def _descend(
    q: _Quartic,
    psi0: NDArray,
    *,
    tol_rel: float,
    tol_floor: float,
    max_iter: int,
    trivial_norm: float,
):
    """Preconditioned NCG until the M-weighted gradient is small.

    Stops with status 'trivial' as soon as the M-norm of psi falls
    below trivial_norm, 'converged' when the gradient norm drops below
    max(tol_floor, tol_rel * |psi|_M), or 'budget' when max_iter runs
    out.  The energy decreases at every accepted step by construction.
    """
    psi = np.asarray(psi0, dtype=np.complex128).copy()
    Kp, Mp, pq = q.energy_parts(psi)
    energy = q.energy_of(psi, Kp, Mp, pq)
    history = [energy]
    G = q.gradient(Kp, Mp, pq)
    z = q.precond(G)
    gg = float(np.real(np.vdot(G, z)))
    d = -z
    status = "budget"
    gnorm = float("inf")
    it = 0
    while it < max_iter:
        norm = math.sqrt(max(float(np.real(np.vdot(psi, Mp))), 0.0))
        if norm <= trivial_norm:
            status = "trivial"
            break
        gnorm = math.sqrt(max(float(np.real(np.vdot(G, q.m_inv(G)))), 0.0))
        if gnorm <= max(tol_floor, tol_rel * norm):
            status = "converged"
            break
        it += 1

        dg = float(np.real(np.vdot(d, G)))
        if dg >= 0:
            d = -z
            dg = -gg
        if dg >= 0:
            status = "converged"  # gradient numerically zero
            break
        Kd, Md, dq = q.K @ d, q.M @ d, q.E @ d
        a = np.abs(pq) ** 2
        bq = np.real(np.conj(pq) * dq)
        c = np.abs(dq) ** 2
        e1 = 2.0 * (
            float(np.real(np.vdot(d, Kp)))
            - q.c2 * float(np.real(np.vdot(d, Mp)))
            + q.c4 * float(np.sum(q.w * a * bq))
        )
        e2 = (
            float(np.real(np.vdot(d, Kd)))
            - q.c2 * float(np.real(np.vdot(d, Md)))
            + q.c4 * float(np.sum(q.w * (a * c + 2.0 * bq**2)))
        )
        e3 = 2.0 * q.c4 * float(np.sum(q.w * bq * c))
        e4 = 0.5 * q.c4 * float(np.sum(q.w * c**2))
        t = _quartic_step(e1, e2, e3, e4)
        if t is None:
            status = "converged"
            break
        # roundoff guard: the polynomial minimizer must realize descent
        drop = t * (e1 + t * (e2 + t * (e3 + t * e4)))
        guard = 0
        while drop > 1e-4 * t * e1 and drop >= 0 and guard < 40:
            t *= 0.5
            drop = t * (e1 + t * (e2 + t * (e3 + t * e4)))
            guard += 1
        if drop >= 0:
            status = "converged"  # descent exhausted at roundoff floor
            break

        psi = psi + t * d
        Kp = Kp + t * Kd
        Mp = Mp + t * Md
        pq = pq + t * dq
        if it % 64 == 0:
            Kp, Mp, pq = q.energy_parts(psi)
            energy = q.energy_of(psi, Kp, Mp, pq)
        else:
            energy = energy + t * (e1 + t * (e2 + t * (e3 + t * e4)))
        history.append(energy)

        G_new = q.gradient(Kp, Mp, pq)
        z_new = q.precond(G_new)
        gg_new = float(np.real(np.vdot(G_new, z_new)))
        beta = max(0.0, float(np.real(np.vdot(G_new - G, z_new))) / gg) if gg > 0 else 0.0
        d = -z_new + beta * d
        G, z, gg = G_new, z_new, gg_new

    if status == "trivial":
        psi = np.zeros_like(psi)
        energy = 0.0
        gnorm = 0.0
        history.append(0.0)
    return psi, float(energy), float(gnorm), it, status, tuple(history)


def _linear_mode_start(q: _Quartic, solver_tol: float):
    """Optimal-amplitude ground-mode start: t*u1 with the exact 1D
    minimizer t^2 = max(0, (c2 - lambda1)/(c4 |u1|_4^4))."""
    sigma = 0.2 * q.system.b if q.system.b >= 4 else None
    res = smallest_eigenpairs(q.system, k=1, tol=solver_tol, sigma=sigma)
    lam1 = float(res.eigenvalues[0])
    u1 = res.eigenvectors[:, 0]
    uq = q.E @ u1
    l4sq = float(np.sum(q.w * np.abs(uq) ** 4))
    tsq = max(0.0, (q.c2 - lam1) / (q.c4 * l4sq)) if l4sq > 0 else 0.0
    return math.sqrt(tsq) * u1, lam1


def _initial_vector(q: _Quartic, init: str, psi0, seed: int, solver_tol: float) -> NDArray:
    n = q.system.n_active
    if init == ZERO:
        return np.zeros(n, dtype=np.complex128)
    if init == LINEAR_MODE:
        vec, _ = _linear_mode_start(q, solver_tol)
        return vec
    if init == RANDOM:
        rng = np.random.default_rng(seed)
        return 0.3 * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    if init == EXPLICIT:
        if psi0 is None:
            raise ParameterError("explicit initialization requires psi0")
        psi0 = np.asarray(psi0)
        if psi0.shape == (q.system.n_full,):
            psi0 = psi0[q.system.active]
        if psi0.shape != (n,):
            raise ParameterError(
                f"psi0 has shape {psi0.shape}, expected ({q.system.n_full},) or ({n},)"
            )
        return psi0.astype(np.complex128)
    raise ParameterError(f"unknown initialization {init!r}; choose from {_INITS}")


def minimize_frozen(
    mesh: Mesh,
    kappa: float,
    H: float,
    init: str = LINEAR_MODE,
    *,
    gauge: GaugeField | None = None,
    psi0: NDArray | None = None,
    tol: float = 1e-6,
    max_iter: int = 30000,
    seed: int = 0,
    solver_tol: float = 1e-8,
    system: MagneticSystem | None = None,
) -> MinimizationOutcome:
    """Minimize the Ginzburg-Landau energy at fixed potential.

    The potential profile defaults to the standard gauge; pass an
    anchored or interpolated profile for polygon work.  ``tol`` is the
    relative gradient target: descent stops when the M-weighted
    gradient norm falls below tol * kappa^2 * |psi|_M (with an absolute
    floor), or when the state crosses the triviality threshold
    |psi|_2 <= 1e-6 sqrt(area), in which case the exact normal state is
    returned.  Exhausting the iteration budget raises a convergence
    failure carrying the best state found.
    """
    if not (math.isfinite(kappa) and kappa > 0):
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if not (math.isfinite(H) and H > 0):
        raise ParameterError(f"field H must be positive, got {H}")
    if gauge is None:
        gauge = GaugeField.standard()
    if system is None:
        system = assemble(mesh, kappa * H, gauge=gauge, arc_condition=NATURAL)
    q = _Quartic(mesh, system, c2=kappa**2, c4=kappa**2)
    start = _initial_vector(q, init, psi0, seed, solver_tol)
    trivial_norm = TRIVIAL_NORM_FRACTION * math.sqrt(q.area)
    psi, energy, gnorm, iters, status, hist = _descend(
        q,
        start,
        tol_rel=tol * kappa**2,
        tol_floor=1e-13 * kappa**2 * math.sqrt(q.area),
        max_iter=max_iter,
        trivial_norm=trivial_norm,
    )
    state = GLState(
        psi=system.expand(psi), potential=gauge, kappa=float(kappa), field_H=float(H)
    )
    outcome = MinimizationOutcome(
        state=state,
        energy=energy,
        grad_norm=gnorm,
        iterations=iters,
        trivial_flag=(status == "trivial"),
        energy_history=hist,
        mesh=mesh,
    )
    if status == "budget":
        raise ConvergenceError(
            f"descent budget {max_iter} exhausted at gradient {gnorm:.3g}",
            diagnostics={"outcome": outcome},
        )
    peak = float(np.max(np.abs(state.psi))) if len(state.psi) else 0.0
    if peak > 1.0 + MAXP_TOL:
        warnings.warn(
            f"converged state peaks at |psi|={peak:.6f} > 1: "
            "mesh too coarse for the maximum principle",
            stacklevel=2,
        )
    return outcome


# ---------------------------------------------------------------------------
# all-corner discretization

_GL_MESH_CACHE: dict = {}


def gl_mesh(
    poly: PolygonDomain, B: float, *, h_eff: float = 0.14, h_far: float | None = None
) -> Mesh:
    """Graded polygon mesh resolving the localization zone of every
    corner at scaled resolution h_eff, cached by B within 1%.

    The nonlinear minimizer condenses at all corners whose angle admits
    a bound state, so unlike the single-eigenvalue mesh the size field
    here follows the distance to the nearest corner.
    """
    if not math.isfinite(B) or B <= 0:
        raise ParameterError(f"field strength must be positive, got {B}")
    if h_far is None:
        h_far = 0.05 * float(np.max(np.ptp(poly.vertices, axis=0)))
    key = (
        _poly_key(poly),
        round(math.log(B) / math.log(1.01)),
        round(h_eff, 6),
        round(h_far, 6),
    )
    hit = _GL_MESH_CACHE.get(key)
    if hit is not None:
        return hit
    sb = math.sqrt(max(B, 1.0))
    s_min = h_eff / sb
    r_amp = 18.0 / sb
    corners = np.array(poly.vertices, dtype=float)

    def size_fn(pts: NDArray) -> NDArray:
        p = np.atleast_2d(pts)
        d = np.min(
            np.linalg.norm(p[:, None, :] - corners[None, :, :], axis=2), axis=1
        )
        s = s_min * (1.0 + 0.55 * np.maximum(0.0, d - r_amp) * sb)
        return np.clip(s, s_min, h_far)

    mesh = make_polygon_mesh(poly, h_far, size_fn=size_fn, relax_iters=16)
    _GL_MESH_CACHE[key] = mesh
    return mesh


def balanced_gauge(poly: PolygonDomain, mesh: Mesh) -> GaugeField:
    """Unit-field gauge whose vector potential vanishes at every corner.

    The symmetric gauge about the centroid is corrected by the gradient
    of a harmonic polynomial interpolating -A_sym at the corners (point
    values of A are not constrained by the flux, only line integrals
    are).  A state localized at any corner then carries slow phase
    there, so one resolution budget h_eff covers all localization zones
    simultaneously; in a gauge pinned to a single corner the remote
    corners would need elements finer than 1/(B diam) instead of
    1/sqrt(B).  Evaluated exactly at the quadrature points.
    """
    verts = np.array(poly.vertices, dtype=float)
    n = len(verts)
    z0 = verts.mean(axis=0)
    c = verts - z0
    zc = c[:, 0] + 1j * c[:, 1]
    R = float(np.max(np.abs(zc)))
    if R <= 0:
        raise ParameterError("degenerate polygon: all vertices coincide")

    # conditions per corner: grad chi = -A_sym and Hessian chi = 0, so
    # the corrected potential matches the symmetric gauge centered at
    # that corner to second order (local phase slope 0.5 b r, the same
    # budget the single-corner pipeline is calibrated for); columns are
    # Re/Im (z/R)^k, whose derivatives follow from the complex ones
    nk = 2 * n
    grad_cols = []
    hess_cols = []
    for k in range(1, nk + 1):
        fp = k * zc ** (k - 1) / R**k
        fpp = k * (k - 1) * zc ** (k - 2) / R**k if k >= 2 else np.zeros_like(zc)
        grad_cols.append(np.column_stack([fp.real, -fp.imag]).ravel())
        grad_cols.append(np.column_stack([fp.imag, fp.real]).ravel())
        hess_cols.append(np.column_stack([fpp.real, -fpp.imag]).ravel())
        hess_cols.append(np.column_stack([fpp.imag, fpp.real]).ravel())
    design = np.vstack([np.column_stack(grad_cols), np.column_stack(hess_cols)])
    target = np.concatenate(
        [np.column_stack([0.5 * c[:, 1], -0.5 * c[:, 0]]).ravel(), np.zeros(2 * n)]
    )
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    resid = float(np.max(np.abs(design @ coef - target)))
    if resid > 1e-8 * max(1.0, float(np.max(np.abs(target)))):
        raise GeometryError(
            f"corner gauge balancing failed: interpolation residual {resid:.3g}"
        )

    tri_pts = mesh.nodes[mesh.triangles]
    xq = np.einsum("qi,tij->tqj", QUAD_BARY, tri_pts).reshape(-1, 2)
    rel = xq - z0
    zq = rel[:, 0] + 1j * rel[:, 1]
    grad = np.zeros((len(zq), 2))
    for k in range(1, nk + 1):
        fp = k * zq ** (k - 1) / R**k
        grad[:, 0] += coef[2 * (k - 1)] * fp.real + coef[2 * k - 1] * fp.imag
        grad[:, 1] += -coef[2 * (k - 1)] * fp.imag + coef[2 * k - 1] * fp.real
    a_sym = 0.5 * np.column_stack([-rel[:, 1], rel[:, 0]])
    return GaugeField.from_quad((a_sym + grad).reshape(mesh.n_triangles, 6, 2))


# ---------------------------------------------------------------------------
# self-consistent field


def square_box(poly: PolygonDomain, factor: float = 3.0) -> PolygonDomain:
    """Axis-aligned square box centered on the domain, side = factor x extent."""
    if factor < 1.5:
        raise ParameterError(f"box factor must be >= 1.5, got {factor}")
    lo = poly.vertices.min(axis=0)
    hi = poly.vertices.max(axis=0)
    c = 0.5 * (lo + hi)
    half = 0.5 * factor * float(np.max(hi - lo))
    v = np.array(
        [
            [c[0] - half, c[1] - half],
            [c[0] + half, c[1] - half],
            [c[0] + half, c[1] + half],
            [c[0] - half, c[1] + half],
        ]
    )
    return PolygonDomain(v)


def box_mesh_for(
    poly: PolygonDomain, *, factor: float = 3.0, h_box: float | None = None
) -> Mesh:
    """Mesh of the enclosing box, finer over the domain footprint.

    The induced correction A - F varies on the scale of the current
    support (the domain), so the mesh is graded: fine across the
    domain's bounding region, coarsening toward the box boundary.
    """
    box = square_box(poly, factor)
    lo = poly.vertices.min(axis=0)
    hi = poly.vertices.max(axis=0)
    c = 0.5 * (lo + hi)
    ext = float(np.max(hi - lo))
    if h_box is None:
        h_box = ext / 24.0
    h_far = ext * factor / 14.0

    def size_fn(pts: NDArray) -> NDArray:
        d = np.max(np.abs(np.atleast_2d(pts) - c), axis=1)
        s = h_box + 1.2 * np.maximum(0.0, d - 0.6 * ext)
        return np.clip(s, h_box, h_far)

    return make_polygon_mesh(box, h_far, size_fn=size_fn, relax_iters=12)


def _vector_curl_div(mesh: Mesh):
    """Per-triangle curl and div of a stacked nodal field [ax; ay]."""
    area, g = _p1_geometry(mesh)
    T, n = mesh.n_triangles, mesh.n_nodes
    rows = np.repeat(np.arange(T), 3)
    cols_x = mesh.triangles.ravel()
    cols_y = cols_x + n
    gx = g[:, :, 0].ravel()
    gy = g[:, :, 1].ravel()
    C = csr_matrix(
        (np.concatenate([-gy, gx]), (np.tile(rows, 2), np.concatenate([cols_x, cols_y]))),
        shape=(T, 2 * n),
    )
    D = csr_matrix(
        (np.concatenate([gx, gy]), (np.tile(rows, 2), np.concatenate([cols_x, cols_y]))),
        shape=(T, 2 * n),
    )
    return C, D, area


def _interp_matrix(box_mesh: Mesh, points: NDArray, diam: float) -> csr_matrix:
    tri, bary = box_mesh.locate(points)
    verts = box_mesh.nodes[box_mesh.triangles[tri]]
    recon = np.einsum("pi,pij->pj", bary, verts)
    gap = float(np.max(np.linalg.norm(recon - points, axis=1)))
    if gap > 1e-9 * diam:
        raise ParameterError(
            f"box mesh does not contain the domain (interpolation gap {gap:.3g})"
        )
    npts = len(points)
    rows = np.repeat(np.arange(npts), 3)
    cols = box_mesh.triangles[tri].ravel()
    return csr_matrix((bary.ravel(), (rows, cols)), shape=(npts, box_mesh.n_nodes))


def _anchor_point(poly: PolygonDomain) -> NDArray:
    angles = poly.corner_angles()
    return poly.vertices[int(np.argmin(angles))]


def _symmetric_profile(points: NDArray, center: NDArray) -> NDArray:
    x = points - center
    return 0.5 * np.column_stack([-x[:, 1], x[:, 0]])


def minimize_coupled(
    mesh: Mesh,
    box_mesh: Mesh,
    kappa: float,
    H: float,
    init: str = LINEAR_MODE,
    *,
    poly: PolygonDomain | None = None,
    tol: float = 1e-7,
    psi_tol: float = 1e-6,
    max_sweeps: int = 80,
    max_iter: int = 30000,
    seed: int = 0,
    solver_tol: float = 1e-8,
) -> MinimizationOutcome:
    """Alternating minimization of the full energy in (psi, A).

    The potential is written A = F + a with F the symmetric unit-field
    profile about the sharpest domain corner and a pinned to zero on
    the box boundary (the induced correction dies off away from the
    sample).  The A-step minimizes the field energy in the curl-curl +
    divergence-penalty form (penalty weight 1, emulating a
    divergence-free gauge without constraints); the psi-step descends
    at frozen potential.  Both steps decrease the penalized total
    energy, so a sweep that increases it signals numerical instability.
    Sweeps stop when the penalized energy decrease falls below
    tol * kappa^2.  The reported energy is the physical one (field term
    included, penalty excluded).
    """
    if not (math.isfinite(kappa) and kappa > 0 and math.isfinite(H) and H > 0):
        raise ParameterError("kappa and H must be positive")
    if poly is None:
        # anchor on the sharpest mesh corner when no polygon is supplied
        if not mesh.corner_angles:
            raise ParameterError("mesh has no corner metadata; pass poly")
        node = min(mesh.corner_angles, key=lambda k: mesh.corner_angles[k])
        center = mesh.nodes[mesh.corner_nodes[node]]
    else:
        center = _anchor_point(poly)

    b = kappa * H
    ops = quad_ops(mesh)
    diam = float(np.max(mesh.nodes.max(axis=0) - mesh.nodes.min(axis=0)))
    P = _interp_matrix(box_mesh, ops.x, diam)
    T = mesh.n_triangles
    F_quad = _symmetric_profile(ops.x, center)
    F_box = _symmetric_profile(box_mesh.nodes, center)

    C, D, tri_area = _vector_curl_div(box_mesh)
    W = diags(tri_area)
    L = (C.T @ W @ C + D.T @ W @ D).tocsr()

    n_box = box_mesh.n_nodes
    bnodes = box_mesh.boundary_nodes()
    interior = np.ones(2 * n_box, dtype=bool)
    interior[bnodes] = False
    interior[bnodes + n_box] = False
    act = np.nonzero(interior)[0]

    area, g = _p1_geometry(mesh)

    def current(psi: NDArray) -> NDArray:
        """Re(conj(psi) p_{kappa H F} psi) at quadrature points."""
        grad = np.einsum("ti,tid->td", psi[mesh.triangles], g)
        grad_q = np.repeat(grad, 6, axis=0)
        pq = ops.E @ psi
        j = np.imag(np.conj(pq)[:, None] * grad_q) - b * F_quad * np.abs(pq)[:, None] ** 2
        return j

    def a_step(psi: NDArray) -> NDArray:
        pq = ops.E @ psi
        wpsi = ops.w * np.abs(pq) ** 2
        Mq = (P.T @ diags(wpsi) @ P).tocsr()
        S = (b**2 * (L + block_diag([Mq, Mq]))).tocsc()
        j = current(psi)
        rhs = b * np.concatenate([P.T @ (ops.w * j[:, 0]), P.T @ (ops.w * j[:, 1])])
        S_act = S[act][:, act]
        try:
            lu = splu(S_act)
            sol = lu.solve(rhs[act])
        except Exception as exc:
            raise SolverError(f"potential solve failed: {exc}") from exc
        if not np.all(np.isfinite(sol)):
            raise SolverError("potential solve returned non-finite values")
        a = np.zeros(2 * n_box)
        a[act] = sol
        return a.reshape(2, n_box).T  # (n_box, 2)

    def gauge_of(a_nodal: NDArray) -> GaugeField:
        a_quad = np.column_stack([P @ a_nodal[:, 0], P @ a_nodal[:, 1]])
        return GaugeField.from_quad((F_quad + a_quad).reshape(T, 6, 2))

    def penalty(a_nodal: NDArray) -> float:
        stacked = np.concatenate([a_nodal[:, 0], a_nodal[:, 1]])
        dv = D @ stacked
        return kappa**2 * H**2 * float(np.sum(tri_area * dv**2))

    a_nodal = np.zeros((n_box, 2))
    out = minimize_frozen(
        mesh, kappa, H, init,
        gauge=gauge_of(a_nodal), tol=psi_tol, max_iter=max_iter,
        seed=seed, solver_tol=solver_tol,
    )
    psi = out.state.psi
    total_iters = out.iterations

    def physical_energy(a_nodal: NDArray, outcome: MinimizationOutcome) -> float:
        curl = curl_nodal(box_mesh, F_box + a_nodal)
        fld = kappa**2 * H**2 * float(np.sum(tri_area * (curl - 1.0) ** 2))
        return outcome.energy + fld

    lyap = physical_energy(a_nodal, out) + penalty(a_nodal)
    sweep_hist = [lyap]
    sweeps = 0
    slack = 1e-9 * max(1.0, abs(lyap)) + 1e-12 * kappa**2
    while sweeps < max_sweeps:
        sweeps += 1
        a_nodal = a_step(psi)
        gauge = gauge_of(a_nodal)
        out = minimize_frozen(
            mesh, kappa, H, EXPLICIT,
            gauge=gauge, psi0=psi, tol=psi_tol, max_iter=max_iter,
            seed=seed, solver_tol=solver_tol,
        )
        psi = out.state.psi
        total_iters += out.iterations
        new_lyap = physical_energy(a_nodal, out) + penalty(a_nodal)
        sweep_hist.append(new_lyap)
        drop = lyap - new_lyap
        if drop < -slack:
            raise InstabilityError(
                f"penalized energy rose by {-drop:.3g} in sweep {sweeps}"
            )
        lyap = new_lyap
        if out.trivial_flag or drop <= tol * kappa**2:
            break
    else:
        raise ConvergenceError(
            f"alternating sweeps budget {max_sweeps} exhausted",
            diagnostics={"lyapunov": sweep_hist},
        )

    if out.trivial_flag:
        a_nodal = np.zeros((n_box, 2))

    state = GLState(
        psi=psi, potential=gauge_of(a_nodal), kappa=float(kappa), field_H=float(H)
    )
    return MinimizationOutcome(
        state=state,
        energy=physical_energy(a_nodal, out),
        grad_norm=out.grad_norm,
        iterations=total_iters,
        trivial_flag=out.trivial_flag,
        energy_history=out.energy_history,
        sweeps=sweeps,
        mesh=mesh,
        box_mesh=box_mesh,
        box_potential=F_box + a_nodal,
    )


def mode_gap(mesh: Mesh, frozen: MinimizationOutcome, coupled: MinimizationOutcome,
             *, constant: float = 1.0) -> dict:
    """Frozen-vs-coupled energy gap against the induced-field bound.

    The induced correction enters the energy at order |psi|_2^2
    kappa^2/H^2, so the two minima must agree to that order; the
    returned mapping reports the gap, the bound with the supplied
    constant, and whether the gap sits inside it.
    """
    ops = quad_ops(mesh)
    pq = ops.E @ coupled.state.psi
    mass = float(np.sum(ops.w * np.abs(pq) ** 2))
    kappa, H = coupled.state.kappa, coupled.state.field_H
    gap = abs(frozen.energy - coupled.energy)
    bound = constant * mass * kappa**2 / H**2
    return {"gap": gap, "bound": bound, "within": bool(gap <= bound), "mass": mass}


def field_deviation(box_mesh: Mesh, box_potential: NDArray, center: NDArray) -> dict:
    """First-order norms of the induced correction a = A - F on the box.

    Returns the W^{1,2}-type norm of a, the L2 norm of curl A - 1, and
    their ratio; the ratio plays the role of the domain constant in the
    field-deviation estimate and should be stable under box refinement.
    """
    a = np.asarray(box_potential, dtype=float) - _symmetric_profile(
        box_mesh.nodes, np.asarray(center, dtype=float)
    )
    C, D, tri_area = _vector_curl_div(box_mesh)
    stacked = np.concatenate([a[:, 0], a[:, 1]])
    curl = C @ stacked
    div = D @ stacked
    curl_l2 = math.sqrt(float(np.sum(tri_area * curl**2)))
    grad_sq = float(np.sum(tri_area * (curl**2 + div**2)))
    ops = quad_ops(box_mesh)
    aq = np.column_stack([ops.E @ a[:, 0], ops.E @ a[:, 1]])
    l2_sq = float(np.sum(ops.w * np.sum(aq**2, axis=1)))
    w12 = math.sqrt(l2_sq + grad_sq)
    ratio = w12 / curl_l2 if curl_l2 > 0 else math.inf
    return {"w12": w12, "curl_l2": curl_l2, "ratio": ratio}


# ---------------------------------------------------------------------------
# sector corner functional


def sector_model(
    alpha: float,
    mu1_param: float,
    mu2_param: float,
    R: float | None = None,
    tol: float = 1e-3,
    *,
    h: float = 0.12,
    lam_scale: float = 1.0,
    grad_tol: float = 1e-8,
    seed: int = 0,
    solver_tol: float = 1e-8,
    boundary_mass_tol: float = 1e-4,
    max_iter: int = 30000,
) -> SectorModelResult:
    """Ground energy of the corner functional on a truncated sector.

    The functional kinetic part is the unit-field sector form with the
    truncation arc pinned to zero, so every truncated energy bounds the
    untruncated one from above and the three-radius sequence
    (R, R+4, R+8) extrapolates along the exponential truncation decay.
    ``lam_scale`` runs the similarity-scaled variant (mesh dilated by
    the factor, field and coefficients divided by its square), whose
    discrete energy agrees exactly with the unscaled one.
    """
    if not (0 < mu1_param < _THETA0_GUIDE):
        raise ParameterError(
            f"mu1_param must sit in (0, {_THETA0_GUIDE:.4f}), got {mu1_param}"
        )
    if mu2_param <= 0:
        raise ParameterError(f"mu2_param must be positive, got {mu2_param}")
    if not (0 < alpha < 2 * math.pi):
        raise ParameterError(f"opening angle must be in (0, 2*pi), got {alpha}")
    if lam_scale <= 0:
        raise ParameterError(f"scale must be positive, got {lam_scale}")
    if R is None:
        # size the truncation from the slow mode: decay rate ~ sqrt of
        # the gap to the half-plane energy
        gap = max(_THETA0_GUIDE - mu1_param, 0.02)
        R = min(max(12.0, 4.5 / math.sqrt(gap)), 30.0)
    if R < 6.0:
        raise ParameterError(f"truncation radius too small: {R}")

    radii = (R, R + 4.0, R + 8.0)
    s = float(lam_scale)
    b = s**-2
    c2 = mu1_param / s**2
    c4 = mu2_param / s**2

    energies = []
    last = None  # (mesh, system, q, psi_active, outcome fields)
    for Ri in radii:
        if alpha >= WIDE_GAUGE_ALPHA:
            mesh = make_sector_boundary_mesh(SectorDomain(alpha=alpha, radius=Ri), h)
        else:
            mesh = make_sector_mesh(SectorDomain(alpha=alpha, radius=Ri), h)
        if s != 1.0:
            mesh = scale_mesh(mesh, s)
        system = assemble(mesh, b, gauge=sector_gauge(mesh, alpha), arc_condition=ESSENTIAL_ZERO)
        q = _Quartic(mesh, system, c2=c2, c4=c4)
        start, lam1 = _linear_mode_start(q, solver_tol)
        trivial_norm = TRIVIAL_NORM_FRACTION * math.sqrt(q.area)
        if not np.any(start):
            # c2 at or below the discrete ground energy: confirm the
            # trivial answer by descending from noise once
            rng = np.random.default_rng(seed)
            noise = 0.1 * (
                rng.standard_normal(system.n_active)
                + 1j * rng.standard_normal(system.n_active)
            )
            psi, energy, gnorm, iters, status, hist = _descend(
                q, noise, tol_rel=grad_tol * max(c2, 1.0), tol_floor=1e-15,
                max_iter=max_iter, trivial_norm=trivial_norm,
            )
            if status == "budget":
                raise ConvergenceError(
                    "trivial-confirmation descent exhausted its budget",
                    diagnostics={"grad_norm": gnorm},
                )
            return SectorModelResult(
                alpha=float(alpha),
                mu1_param=float(mu1_param),
                mu2_param=float(mu2_param),
                energy=0.0,
                psi0=system.expand(np.zeros(system.n_active, dtype=np.complex128)),
                decay_rate=math.nan,
                energy_error=0.0,
                boundary_mass=0.0,
                mesh=mesh,
            )
        psi, energy, gnorm, iters, status, hist = _descend(
            q, start, tol_rel=grad_tol * max(c2, 1.0), tol_floor=1e-15,
            max_iter=max_iter, trivial_norm=trivial_norm,
        )
        if status == "budget":
            raise ConvergenceError(
                f"sector descent exhausted {max_iter} iterations at R={Ri}",
                diagnostics={"grad_norm": gnorm},
            )
        energies.append(energy)
        last = (mesh, system, q, psi, gnorm)

    extr, err = _fit_exponential(radii, energies)
    mesh, system, q, psi, gnorm = last
    psi_full = system.expand(psi)

    # truncation health: mass within 2 (scaled) units of the arc
    r_q = np.linalg.norm(q.xq, axis=1)
    dens = q.w * np.abs(quad_ops(mesh).E @ psi_full) ** 2
    total = float(np.sum(dens))
    near_arc = float(np.sum(dens[r_q > s * (radii[-1] - 2.0)]))
    boundary_mass = near_arc / total if total > 0 else 0.0
    if boundary_mass > boundary_mass_tol:
        raise AccuracyError(
            f"truncation too tight: {boundary_mass:.2e} of the mass sits "
            f"within 2 units of the arc (R={radii[-1]})"
        )

    amp = np.abs(psi_full)
    peak = float(np.max(amp))
    r_nodes = np.linalg.norm(mesh.nodes, axis=1)
    band = (
        (r_nodes > 0.25 * s * radii[-1])
        & (r_nodes < 0.8 * s * radii[-1])
        & (amp > 1e-12 * peak)
    )
    if np.sum(band) >= 10:
        slope = np.polyfit(r_nodes[band], np.log(amp[band]), 1)[0]
        decay = -slope
    else:
        decay = math.nan

    rel = abs(extr) if abs(extr) > 0 else 1.0
    if err > max(tol * rel, 1e-12):
        warnings.warn(
            f"sector energy extrapolation error {err:.2e} exceeds target "
            f"{tol * rel:.2e}; increase R or refine",
            stacklevel=2,
        )
    return SectorModelResult(
        alpha=float(alpha),
        mu1_param=float(mu1_param),
        mu2_param=float(mu2_param),
        energy=float(extr),
        psi0=psi_full,
        decay_rate=float(decay),
        energy_error=float(err),
        boundary_mass=float(boundary_mass),
        mesh=mesh,
    )


# ---------------------------------------------------------------------------
# nonlinear onset


def _onset_probe(
    poly: PolygonDomain,
    kappa: float,
    H: float,
    *,
    h_eff: float,
    seed: int,
    psi_tol: float,
    max_iter: int,
) -> bool:
    """True when descent from both the ground mode and noise lands on
    the normal state at this field."""
    mesh = gl_mesh(poly, kappa * H, h_eff=h_eff)
    gauge = balanced_gauge(poly, mesh)
    lin = minimize_frozen(
        mesh, kappa, H, LINEAR_MODE, gauge=gauge, tol=psi_tol,
        max_iter=max_iter, seed=seed,
    )
    if not lin.trivial_flag:
        return False
    rnd = minimize_frozen(
        mesh, kappa, H, RANDOM, gauge=gauge, tol=psi_tol,
        max_iter=max_iter, seed=seed,
    )
    return rnd.trivial_flag


def detect_onset(
    poly: PolygonDomain,
    kappa: float,
    tol_H: float | None = None,
    *,
    h_eff: float = 0.14,
    seed: int = 0,
    psi_tol: float = 1e-6,
    max_iter: int = 30000,
    grid_check: int = 0,
    hc3_tol: float = 1e-3,
) -> float:
    """Onset field of nonlinear superconductivity, by bisection.

    The probe declares a field normal when descent from both the
    optimal ground-mode start and a random start lands on the trivial
    state.  The initial bracket is seeded around the linear critical
    field (and widened until the probe straddles), so the linear value
    steers only where bisection starts, never what it returns.  With
    ``grid_check`` >= 2, extra probes on a uniform grid across the
    initial bracket must be consistent with the final bracket; a
    contradiction flags the predicate as non-monotone and bisection
    restarts once on the tightest consistent bracket at half the
    tolerance before giving up.
    """
    # the seed only centers the bracket, so the cheap non-extrapolated
    # eigenvalue path is accurate enough here
    lin = solve_hc3_linear(poly, kappa, hc3_tol, h_eff=h_eff, richardson=False)
    H_ref = lin.H_lin
    if tol_H is None:
        tol_H = 0.01 * H_ref
    if tol_H <= 0:
        raise ParameterError(f"bracket tolerance must be positive, got {tol_H}")

    probes: dict[float, bool] = {}

    def probe(H: float) -> bool:
        if H not in probes:
            probes[H] = _onset_probe(
                poly, kappa, H, h_eff=h_eff, seed=seed,
                psi_tol=psi_tol, max_iter=max_iter,
            )
        return probes[H]

    lo, hi = 0.85 * H_ref, 1.15 * H_ref
    grow = 0
    while probe(lo) and grow < 5:
        hi = lo
        lo *= 0.85
        grow += 1
    if probe(lo):
        raise NoRootError(f"no superconducting field found down to H={lo:.6g}")
    grow = 0
    while not probe(hi) and grow < 5:
        lo = hi
        hi *= 1.15
        grow += 1
    if not probe(hi):
        raise NoRootError(f"no normal field found up to H={hi:.6g}")
    lo0, hi0 = lo, hi

    def bisect(lo: float, hi: float, width: float) -> tuple[float, float]:
        while hi - lo > width:
            mid = 0.5 * (lo + hi)
            if probe(mid):
                hi = mid
            else:
                lo = mid
        return lo, hi

    lo, hi = bisect(lo, hi, tol_H)

    if grid_check >= 2:
        for H in np.linspace(lo0, hi0, grid_check + 2)[1:-1]:
            probe(float(H))
        items = sorted(probes.items())
        highest_sc = max((H for H, t in items if not t), default=lo0)
        lowest_normal = min((H for H, t in items if t), default=hi0)
        if highest_sc > lowest_normal:
            warnings.warn(
                f"onset predicate non-monotone: superconducting at {highest_sc:.6g} "
                f"above normal at {lowest_normal:.6g}; restarting finer",
                stacklevel=2,
            )
            sc_below = [H for H, t in items if not t and H < lowest_normal]
            lo = max(sc_below) if sc_below else lo0
            probes.clear()
            probes[lo] = False
            probes[lowest_normal] = True
            lo, hi = bisect(lo, lowest_normal, 0.5 * tol_H)
            items = sorted(probes.items())
            highest_sc = max((H for H, t in items if not t), default=lo)
            lowest_normal = min((H for H, t in items if t), default=hi)
            if highest_sc > lowest_normal:
                raise InstabilityError(
                    "onset predicate remains non-monotone after restart"
                )

    return 0.5 * (lo + hi)
