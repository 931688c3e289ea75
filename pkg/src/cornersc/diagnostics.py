"""Localization and sanity diagnostics for computed minimizers.

Agmon-type reports compare an exponentially weighted mass against the
mass near a distinguished set (a subset of corners, or the whole
boundary).  A state that decays away from the set at the advertised
exponential rate keeps the ratio bounded as kappa grows, so the reports
are designed to be compared across kappa rather than certified one at a
time; ``kappa_trend`` implements that comparison as a regression test
on the ratio sequence.  The constants entering the weight (rate epsilon
and near-zone radius M) are not pinned by the theory, so ``agmon_sweep``
tabulates a small (epsilon, M) grid and leaves the boundedness frontier
to the caller.

Mass profiles, the corner-energy comparison, and the four a-priori
minimizer inequalities round out the checklist: a computed state should
be superconducting where the corner spectrum says it can be, carry the
energy the corner models predict, and respect the bounds every true
minimizer satisfies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .assembly import _p1_geometry, curl_nodal, l4_norm, quad_ops
from .errors import ParameterError, UndefinedRatioError
from .eigen import CornerSpectrum
from .geometry import Mesh, _boundary_distance_points
from .glmin import MinimizationOutcome, SectorModelResult

__all__ = [
    "AgmonReport",
    "CornerMassProfile",
    "EnergyReport",
    "SanityReport",
    "TrendReport",
    "agmon_boundary",
    "agmon_corner",
    "agmon_sweep",
    "corner_mass_profile",
    "energy_vs_corner_sum",
    "kappa_trend",
    "minimizer_sanity",
]

# relative amplitude floor below which nodal values are treated as
# floating-point debris and excluded from decay-rate fits
_DECAY_FLOOR = 1e-12


@dataclass
class AgmonReport:
    """Weighted-mass diagnostics of one state against one distance field.

    ``weighted_mass`` integrates e^{epsilon * s} (|psi|^2 + b^{-1}|p psi|^2)
    with s = sqrt(b) * distance and b = kappa * H; ``near_mass`` integrates
    |psi|^2 over the zone s <= M.  ``fitted_rate`` is the decay rate of
    |psi| against s (positive when the magnitude falls off with distance;
    the negated slope of the log-amplitude regression).
    """

    epsilon: float
    M: float
    weighted_mass: float
    near_mass: float
    ratio: float
    fitted_rate: float


@dataclass
class CornerMassProfile:
    """Fraction of the total mass in a small disk around each corner."""

    corner_ids: tuple[int, ...]
    fractions: NDArray[np.float64]
    radii: NDArray[np.float64]
    in_sigma_prime: NDArray[np.bool_]
    off_corner_mass: float
    mu: float
    M: float
    trivial_flag: bool


@dataclass
class EnergyReport:
    """Minimizer energy against the sum of corner-model energies."""

    gl_energy: float
    corner_sum: float
    mu: float
    rel_gap: float
    degenerate: bool = False


@dataclass
class SanityReport:
    """The four a-priori inequalities every minimizer must satisfy.

    For frozen-field states the applied potential has unit curl by
    construction, so the curl inequality passes vacuously; coupled
    states are checked on their enclosing-box potential.
    """

    max_psi: float
    l2_norm: float
    l4_sq: float
    p_norm: float
    curl_l2_dev: float
    curl_vacuous: bool
    max_ok: bool
    quad_ok: bool
    curl_ok: bool
    four_two_ok: bool
    tol: float

    @property
    def all_ok(self) -> bool:
        return self.max_ok and self.quad_ok and self.curl_ok and self.four_two_ok


@dataclass
class TrendReport:
    """Least-squares slope of a diagnostic quantity against kappa."""

    slope: float
    stderr: float
    n_points: int
    significant_growth: bool


# ---------------------------------------------------------------------------
# weighted-mass reports


def _require_state(outcome: MinimizationOutcome) -> Mesh:
    if outcome.mesh is None:
        raise ParameterError("outcome carries no mesh; rerun the minimizer that stores one")
    state = outcome.state
    if not math.isfinite(state.b_eff) or state.b_eff <= 0:
        raise ParameterError(f"state has non-positive field strength b={state.b_eff}")
    return outcome.mesh


def _sigma_points(mesh: Mesh, sigma_prime) -> NDArray[np.float64]:
    """Corner subset as explicit points: ids into the mesh corner table,
    or an (m, 2) coordinate array."""
    arr = np.asarray(sigma_prime)
    if arr.ndim == 2 and arr.shape[1] == 2:
        if len(arr) == 0:
            raise ParameterError("sigma_prime is empty")
        return arr.astype(float)
    if arr.ndim != 1 or len(arr) == 0:
        raise ParameterError("sigma_prime must be corner ids or an (m, 2) point array")
    pts = []
    for i in arr:
        node = mesh.corner_nodes.get(int(i))
        if node is None:
            raise ParameterError(f"corner id {int(i)} is not registered on the mesh")
        pts.append(mesh.nodes[node])
    return np.array(pts, dtype=float)


def _momentum_density(mesh: Mesh, outcome: MinimizationOutcome, pq: NDArray) -> NDArray:
    """|(-i grad - b A) psi|^2 at the quadrature points, as a flat array."""
    state = outcome.state
    b = state.b_eff
    psi = np.asarray(state.psi)
    _, g = _p1_geometry(mesh)
    gradpsi = np.einsum("tj,tjk->tk", psi[mesh.triangles], g)  # (T,2), constant per element
    aq = state.potential.at_quad(mesh)  # (T,6,2)
    pt = pq.reshape(mesh.n_triangles, 6)
    vx = -1j * gradpsi[:, None, 0] - b * aq[:, :, 0] * pt
    vy = -1j * gradpsi[:, None, 1] - b * aq[:, :, 1] * pt
    return (np.abs(vx) ** 2 + np.abs(vy) ** 2).ravel()


def _decay_rate(s_nodes: NDArray, amp: NDArray) -> float:
    """Decay rate of amp against the scaled distance, by log regression."""
    peak = float(amp.max())
    if peak <= 0.0:
        return 0.0
    keep = amp > _DECAY_FLOOR * peak
    s = s_nodes[keep]
    if len(s) < 2 or float(np.ptp(s)) <= 0.0:
        return 0.0
    slope = np.polyfit(s, np.log(amp[keep]), 1)[0]
    return float(-slope)


def _agmon_report(
    outcome: MinimizationOutcome,
    dist_points,
    epsilon: float,
    M: float,
) -> AgmonReport:
    if not math.isfinite(epsilon) or epsilon < 0:
        raise ParameterError(f"weight rate must be nonnegative, got {epsilon}")
    if not math.isfinite(M) or M <= 0:
        raise ParameterError(f"near-zone radius multiplier must be positive, got {M}")
    mesh = _require_state(outcome)
    state = outcome.state
    b = state.b_eff
    psi = np.asarray(state.psi)
    if outcome.trivial_flag or not np.any(psi):
        raise UndefinedRatioError("trivial state: the near-zone mass is zero")

    ops = quad_ops(mesh)
    pq = ops.E @ psi
    absq = np.abs(pq) ** 2
    s_q = math.sqrt(b) * dist_points(ops.x)
    near = float(np.sum(ops.w * absq * (s_q <= M)))
    if near <= 0.0:
        raise UndefinedRatioError(f"no mass within scaled distance M={M} of the target set")

    pabs2 = _momentum_density(mesh, outcome, pq)
    weighted = float(np.sum(ops.w * np.exp(epsilon * s_q) * (absq + pabs2 / b)))

    s_nodes = math.sqrt(b) * dist_points(mesh.nodes)
    rate = _decay_rate(s_nodes, np.abs(psi))
    return AgmonReport(
        epsilon=float(epsilon),
        M=float(M),
        weighted_mass=weighted,
        near_mass=near,
        ratio=weighted / near,
        fitted_rate=rate,
    )


def agmon_corner(
    outcome: MinimizationOutcome,
    sigma_prime,
    epsilon: float,
    M: float,
) -> AgmonReport:
    """Weighted-mass report against the distance to a corner subset.

    ``sigma_prime`` selects the corners expected to bind at the state's
    parameters, either as ids into the mesh corner table or as explicit
    points.  The report is meaningful in the corner regime, i.e. with
    the applied field at or above the linear critical window for the mu
    that selected the subset.
    """
    mesh = _require_state(outcome)
    pts = _sigma_points(mesh, sigma_prime)

    def dist(points: NDArray) -> NDArray:
        d2 = ((points[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        return np.sqrt(d2.min(axis=1))

    return _agmon_report(outcome, dist, epsilon, M)


def agmon_boundary(outcome: MinimizationOutcome, epsilon: float, M: float) -> AgmonReport:
    """Weighted-mass report against the distance to the boundary.

    Requires H > kappa: below that the state need not be boundary
    localized and the weighted integral has no reason to stay bounded.
    """
    mesh = _require_state(outcome)
    state = outcome.state
    if state.field_H <= state.kappa:
        raise ParameterError(
            f"boundary report needs H > kappa, got H={state.field_H}, kappa={state.kappa}"
        )
    return _agmon_report(outcome, lambda p: _boundary_distance_points(mesh, p), epsilon, M)


def agmon_sweep(
    outcome: MinimizationOutcome,
    epsilons,
    Ms,
    *,
    sigma_prime=None,
) -> list[AgmonReport]:
    """Reports over the (epsilon, M) grid, corner-based when sigma_prime
    is given and boundary-based otherwise."""
    reports = []
    for eps in epsilons:
        for M in Ms:
            if sigma_prime is None:
                reports.append(agmon_boundary(outcome, eps, M))
            else:
                reports.append(agmon_corner(outcome, sigma_prime, eps, M))
    return reports


# ---------------------------------------------------------------------------
# mass distribution and energy comparison


def corner_mass_profile(
    outcome: MinimizationOutcome,
    spectrum: CornerSpectrum,
    mu: float,
    *,
    M: float = 10.0,
) -> CornerMassProfile:
    """Fraction of the squared mass within M/kappa of each corner.

    Disk radii are clipped below 0.45 of the smallest corner separation,
    so the zones are disjoint and the fractions sum to at most one; the
    remainder is reported as off-corner mass.  A trivial state yields
    all-zero fractions with the triviality flag set.
    """
    if not math.isfinite(mu) or mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    if not math.isfinite(M) or M <= 0:
        raise ParameterError(f"zone multiplier M must be positive, got {M}")
    mesh = _require_state(outcome)
    ids = sorted(mesh.corner_nodes)
    missing = [i for i in ids if i not in spectrum.corner_mu1]
    if missing:
        raise ParameterError(f"spectrum lacks corner ids {missing}")
    pts = mesh.nodes[[mesh.corner_nodes[i] for i in ids]]
    kappa = outcome.state.kappa

    radius = np.full(len(ids), M / kappa)
    if len(ids) > 1:
        d2 = ((pts[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        np.fill_diagonal(d2, np.inf)
        radius = np.minimum(radius, 0.45 * np.sqrt(d2.min(axis=1)))

    in_sigma = np.array([spectrum.corner_mu1[i][0] <= mu for i in ids])
    psi = np.asarray(outcome.state.psi)
    trivial = outcome.trivial_flag or not np.any(psi)
    if trivial:
        return CornerMassProfile(
            corner_ids=tuple(ids),
            fractions=np.zeros(len(ids)),
            radii=radius,
            in_sigma_prime=in_sigma,
            off_corner_mass=0.0,
            mu=float(mu),
            M=float(M),
            trivial_flag=True,
        )

    ops = quad_ops(mesh)
    dens = ops.w * np.abs(ops.E @ psi) ** 2
    total = float(dens.sum())
    fractions = np.empty(len(ids))
    for j, (pt, r) in enumerate(zip(pts, radius)):
        inside = ((ops.x - pt) ** 2).sum(-1) <= r * r
        fractions[j] = float(dens[inside].sum()) / total
    return CornerMassProfile(
        corner_ids=tuple(ids),
        fractions=fractions,
        radii=radius,
        in_sigma_prime=in_sigma,
        off_corner_mass=max(0.0, 1.0 - float(fractions.sum())),
        mu=float(mu),
        M=float(M),
        trivial_flag=False,
    )


def energy_vs_corner_sum(
    outcome: MinimizationOutcome,
    sector_results: list[SectorModelResult],
    mu: float,
) -> EnergyReport:
    """Minimizer energy against the sum of per-corner model energies.

    Every corner angle of the state's mesh must be covered by a sector
    result computed at parameters (mu, mu); corner energies are summed
    with multiplicity.  When no corner binds at mu the comparison is
    degenerate: the corner sum vanishes and the reported gap is the raw
    magnitude of the computed energy.
    """
    if not math.isfinite(mu) or mu <= 0:
        raise ParameterError(f"mu must be positive, got {mu}")
    mesh = _require_state(outcome)

    def matching(angle: float) -> SectorModelResult:
        for r in sector_results:
            if abs(r.alpha - angle) <= 1e-8:
                return r
        raise ParameterError(f"no sector result for corner angle {angle:.6f}")

    corner_sum = 0.0
    for i in sorted(mesh.corner_angles):
        r = matching(mesh.corner_angles[i])
        for p in (r.mu1_param, r.mu2_param):
            if abs(p - mu) > 1e-9 * max(1.0, abs(mu)):
                raise ParameterError(
                    f"sector result for angle {r.alpha:.6f} was run at "
                    f"parameters ({r.mu1_param}, {r.mu2_param}), not ({mu}, {mu})"
                )
        if r.energy > 1e-12:
            raise ParameterError(
                f"sector energy {r.energy} is positive; the zero state bounds "
                "every corner minimum by 0"
            )
        corner_sum += min(r.energy, 0.0)

    gl = float(outcome.energy)
    if abs(corner_sum) < 1e-12:
        return EnergyReport(gl_energy=gl, corner_sum=corner_sum, mu=float(mu),
                            rel_gap=abs(gl), degenerate=True)
    return EnergyReport(
        gl_energy=gl,
        corner_sum=corner_sum,
        mu=float(mu),
        rel_gap=abs(gl - corner_sum) / abs(corner_sum),
        degenerate=False,
    )


# ---------------------------------------------------------------------------
# a-priori inequalities and kappa trends


def minimizer_sanity(outcome: MinimizationOutcome, *, tol: float = 1e-3) -> SanityReport:
    """Evaluate the four inequalities satisfied by every true minimizer:
    max |psi| <= 1, |p psi|_2 <= kappa |psi|_2, H |curl A - 1|_2 <= |psi|_2,
    and |psi|_4^2 <= |psi|_2, each with relative slack tol."""
    if not math.isfinite(tol) or tol < 0:
        raise ParameterError(f"tolerance must be nonnegative, got {tol}")
    mesh = _require_state(outcome)
    state = outcome.state
    psi = np.asarray(state.psi)
    kappa = state.kappa

    ops = quad_ops(mesh)
    pq = ops.E @ psi
    l2 = math.sqrt(float(np.sum(ops.w * np.abs(pq) ** 2)))
    l4_sq = l4_norm(mesh, psi, ops) ** 2
    p_norm = math.sqrt(float(np.sum(ops.w * _momentum_density(mesh, outcome, pq))))
    max_psi = float(np.abs(psi).max()) if len(psi) else 0.0

    if outcome.box_mesh is not None and outcome.box_potential is not None:
        area, _ = _p1_geometry(outcome.box_mesh)
        curl = curl_nodal(outcome.box_mesh, np.asarray(outcome.box_potential))
        curl_dev = math.sqrt(float(np.sum(area * (curl - 1.0) ** 2)))
        curl_vacuous = False
    else:
        # frozen-field states: the applied potential has unit curl by
        # construction, so the inequality holds identically
        curl_dev = 0.0
        curl_vacuous = True

    slack = 1e-12
    return SanityReport(
        max_psi=max_psi,
        l2_norm=l2,
        l4_sq=l4_sq,
        p_norm=p_norm,
        curl_l2_dev=curl_dev,
        curl_vacuous=curl_vacuous,
        max_ok=max_psi <= 1.0 + tol,
        quad_ok=p_norm <= kappa * l2 * (1.0 + tol) + slack,
        curl_ok=curl_vacuous or state.field_H * curl_dev <= l2 * (1.0 + tol) + slack,
        four_two_ok=l4_sq <= l2 * (1.0 + tol) + slack,
        tol=float(tol),
    )


def kappa_trend(kappas, values) -> TrendReport:
    """Regression slope of a diagnostic against kappa, with the one-sided
    significance call used for boundedness checks: growth is flagged only
    when the slope exceeds twice its standard error."""
    k = np.asarray(kappas, dtype=float)
    v = np.asarray(values, dtype=float)
    if k.shape != v.shape or k.ndim != 1:
        raise ParameterError("kappas and values must be matching 1d sequences")
    if len(np.unique(k)) < 4:
        raise ParameterError(f"trend test needs >= 4 distinct kappa values, got {len(np.unique(k))}")
    if not (np.all(np.isfinite(k)) and np.all(np.isfinite(v))):
        raise ParameterError("trend inputs must be finite")
    n = len(k)
    kc = k - k.mean()
    sxx = float(np.sum(kc * kc))
    slope = float(np.sum(kc * v) / sxx)
    resid = v - v.mean() - slope * kc
    if n > 2:
        stderr = math.sqrt(float(np.sum(resid**2)) / (n - 2) / sxx)
    else:
        stderr = 0.0
    growth = slope > 2.0 * stderr if stderr > 0 else slope > 0
    return TrendReport(slope=slope, stderr=stderr, n_points=n, significant_growth=bool(growth))
