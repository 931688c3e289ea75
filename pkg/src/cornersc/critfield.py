"""Critical-field solver: root of lambda1(kappa H) = kappa^2 and the
large-kappa expansion of the critical field.

The map H -> lambda1(kappa H) - kappa^2 is strictly increasing (the
ground energy grows with field strength), so the critical field is the
unique sign change.  Each evaluation delegates to the polygon eigenvalue
pipeline with a mesh graded for the current field strength; meshes are
cached by field-strength bucket, so nearby root-finder probes reuse
them.  Root finding is bisection to a narrow bracket followed by
guarded secant polishing, because eigenvalue evaluations are expensive
and carry small mesh-dependent jitter between cache buckets.

The expansion fit normalizes by the corner-model energy: with
y = H * lambda1_model / kappa - 1, the coefficients of y against
kappa^{-1}..kappa^{-J} are fitted by least squares.  The leading term
kappa / lambda1_model is fixed by construction, never fitted.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import AccuracyError, ConditioningError, NoRootError, ParameterError
from .eigen import CornerSpectrum, corner_spectrum, lambda1_polygon
from .geometry import PolygonDomain, refine_mesh

# Below this kappa the ground state is not yet corner-dominated (the
# empirical slope of lambda1 at the root field exceeds the midpoint
# between the corner and half-plane energies), so the expansion in
# 1/kappa is not meaningful.  Calibrated on the unit square; override
# per domain via the kappa0 argument.
KAPPA0_DEFAULT = 4.0

_MAX_EVALS = 48


@dataclass
class CriticalFieldResult:
    """Root of the linear critical-field equation at one kappa."""

    kappa: float
    H_lin: float
    residual: float  # lambda1(kappa * H_lin) - kappa^2 at the root
    bracket: tuple[float, float]
    lambda1_model: float  # smallest corner-model energy, used for brackets
    theta0_model: float  # half-plane energy used for the lower bracket
    lambda1_at_root: float
    evaluations: int = 0
    monotone: bool = True
    samples: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    @property
    def normalized_gap(self) -> float:
        """H_lin * lambda1_model / kappa - 1, the expansion variable."""
        return self.H_lin * self.lambda1_model / self.kappa - 1.0


@dataclass
class ExpansionFit:
    """Least-squares coefficients of the critical-field expansion."""

    lambda1: float
    etas: tuple[float, ...]
    fit_residual: float  # max relative misfit of H * lambda1 / kappa

    def predict(self, kappa: float) -> float:
        acc = 1.0
        for j, eta in enumerate(self.etas, start=1):
            acc += eta * kappa ** (-j)
        return kappa / self.lambda1 * acc


def _check_monotone(samples: list[tuple[float, float]], slack: float) -> bool:
    """True when the sampled map is nondecreasing up to noise slack."""
    if len(samples) < 3:
        return True
    srt = sorted(samples)
    vals = np.array([v for _, v in srt])
    return bool(np.all(np.diff(vals) >= -slack))


def solve_hc3_linear(
    poly: PolygonDomain,
    kappa: float,
    tol: float = 1e-3,
    *,
    kappa0: float = KAPPA0_DEFAULT,
    spectrum: CornerSpectrum | None = None,
    h_eff: float = 0.14,
    solver_tol: float = 1e-8,
    max_evals: int = _MAX_EVALS,
    richardson: bool = True,
) -> CriticalFieldResult:
    """Critical field H with lambda1(kappa H) = kappa^2, by root finding.

    ``tol`` bounds the accepted residual relative to kappa^2.  The
    search interval is [0.5 kappa/theta0, 2 kappa/lambda1_model]; the
    lower end sits deep in the superconducting range (ground energy
    well below kappa^2) and the upper end deep in the normal range, so
    a missing sign change indicates a broken spectral model rather than
    a tuning problem.  ``spectrum`` may be passed to share the
    corner-model computation across kappa values.

    With ``richardson`` the root of the single-mesh eigenvalue curve is
    polished by Newton steps whose residuals use mesh-converged
    eigenvalues: the mesh is quadrisected twice and the finest nested
    pair is extrapolated at ratio 4.  The nested family shares one mesh
    realization, so the discretization bias cancels cleanly; this
    matters because the inverse-kappa expansion coefficients are small
    compared to the raw per-mesh bias.
    """
    if not math.isfinite(kappa) or kappa <= 0:
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if not math.isfinite(tol) or tol <= 0:
        raise ParameterError(f"residual tolerance must be positive, got {tol}")
    if kappa < kappa0:
        raise ParameterError(
            f"kappa={kappa} below the corner-regime threshold kappa0={kappa0}"
        )
    if spectrum is None:
        spectrum = corner_spectrum(poly)
    lam_model = float(spectrum.lambdas[0])
    theta = float(spectrum.theta0)

    samples: list[tuple[float, float]] = []

    def f(H: float, levels: int = 0) -> float:
        res, _, mesh = lambda1_polygon(
            poly, kappa * H, h_eff=h_eff, solver_tol=solver_tol, return_system=True
        )
        lam = float(res.eigenvalues[0])
        # eigenvalues of the nested quadrisection family decrease toward
        # the continuum value; the finest pair is deep enough in the
        # quadratic regime for ratio-4 extrapolation to be trusted
        prev = lam
        for _ in range(levels):
            mesh = refine_mesh(mesh)
            prev = lam
            lam = float(
                lambda1_polygon(
                    poly, kappa * H, solver_tol=solver_tol, mesh=mesh
                ).eigenvalues[0]
            )
        if levels:
            lam = (4.0 * lam - prev) / 3.0
        val = lam - kappa**2
        samples.append((H, val))
        return val

    lo = 0.5 * kappa / theta
    hi = 2.0 * kappa / lam_model
    flo = f(lo)
    fhi = f(hi)
    if not (flo < 0.0 < fhi):
        raise NoRootError(
            "no sign change of lambda1(kappa H) - kappa^2 on "
            f"[{lo:.6g}, {hi:.6g}]: f(lo)={flo:.6g}, f(hi)={fhi:.6g}"
        )

    stop = tol * kappa**2
    # the single-mesh search only needs to land close enough for the
    # Newton polish below, whose evaluations carry the real accuracy
    stop_cheap = max(stop, 1e-3 * kappa**2) if richardson else stop
    root = None
    fres = None

    # bisection narrows the bracket robustly before secant touches it
    while len(samples) < max_evals and (hi - lo) > 0.05 * hi:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm < 0.0:
            lo, flo = mid, fm
        else:
            hi, fhi = mid, fm
        if abs(fm) <= stop_cheap:
            root, fres = mid, fm
            break

    if root is None:
        H0, f0, H1, f1 = lo, flo, hi, fhi
        while len(samples) < max_evals:
            if f1 != f0:
                Hn = H1 - f1 * (H1 - H0) / (f1 - f0)
            else:
                Hn = 0.5 * (lo + hi)
            if not (lo < Hn < hi) or not math.isfinite(Hn):
                Hn = 0.5 * (lo + hi)
            fn = f(Hn)
            if fn < 0.0:
                lo, flo = Hn, fn
            else:
                hi, fhi = Hn, fn
            if abs(fn) <= stop_cheap:
                root, fres = Hn, fn
                break
            if (hi - lo) <= 1e-12 * hi:
                raise AccuracyError(
                    "root bracket collapsed before the residual tolerance "
                    f"was met: |f|={abs(fn):.3g} > {stop_cheap:.3g}; eigenvalue "
                    "jitter between mesh buckets exceeds the requested tol"
                )
            H0, f0, H1, f1 = H1, f1, Hn, fn

    if root is None:
        best = min(samples, key=lambda s: abs(s[1]))
        raise AccuracyError(
            f"evaluation budget {max_evals} exhausted at |f|="
            f"{abs(best[1]):.3g} > {stop_cheap:.3g} (kappa={kappa})"
        )

    slack = max(100.0 * solver_tol * kappa**2, 0.05 * stop_cheap)
    monotone = _check_monotone(samples, slack)

    if richardson:
        # Newton correction of the single-mesh root using extrapolated
        # eigenvalues; the slope comes from the cheap bracket, where the
        # mesh bias cancels to first order in the difference
        slope = (fhi - flo) / (hi - lo)
        if not (slope > 0 and math.isfinite(slope)):
            raise AccuracyError(
                f"degenerate slope {slope:.3g} at the critical-field root "
                f"(kappa={kappa})"
            )
        H = root
        root = None
        for _ in range(6):
            if len(samples) >= max_evals + 8:
                break
            val = f(H, levels=2)
            if abs(val) <= stop:
                root, fres = H, val
                break
            step = -val / slope
            if abs(step) > 0.2 * H or not math.isfinite(step):
                raise AccuracyError(
                    "extrapolated eigenvalue is inconsistent with the "
                    f"single-mesh bracket at kappa={kappa}: correction "
                    f"{step:.3g} from H={H:.6g}"
                )
            H += step
        if root is None:
            best = min(samples, key=lambda s: abs(s[1]))
            raise AccuracyError(
                f"Newton polish stalled at |f|={abs(best[1]):.3g} > "
                f"{stop:.3g} (kappa={kappa})"
            )
    if not monotone:
        warnings.warn(
            f"lambda1(kappa H) - kappa^2 not monotone across sampled H at "
            f"kappa={kappa}; root may sit on a mesh-cache seam",
            stacklevel=2,
        )

    return CriticalFieldResult(
        kappa=float(kappa),
        H_lin=float(root),
        residual=float(fres),
        bracket=(float(lo), float(hi)),
        lambda1_model=lam_model,
        theta0_model=theta,
        lambda1_at_root=float(fres + kappa**2),
        evaluations=len(samples),
        monotone=monotone,
        samples=tuple(samples),
    )


def solve_many(
    poly: PolygonDomain,
    kappas,
    tol: float = 1e-3,
    *,
    jobs: int = 1,
    **kwargs,
) -> list[CriticalFieldResult]:
    """solve_hc3_linear over several kappa, sharing the corner model.

    Independent kappa points may run concurrently (``jobs`` threads);
    each root solve stays sequential in its eigenvalue evaluations.
    """
    kappas = [float(k) for k in kappas]
    if not kappas:
        raise ParameterError("kappa list must be nonempty")
    spectrum = kwargs.pop("spectrum", None) or corner_spectrum(poly)
    if jobs <= 1 or len(kappas) == 1:
        return [
            solve_hc3_linear(poly, k, tol, spectrum=spectrum, **kwargs)
            for k in kappas
        ]
    with ThreadPoolExecutor(max_workers=min(jobs, len(kappas))) as pool:
        futs = [
            pool.submit(solve_hc3_linear, poly, k, tol, spectrum=spectrum, **kwargs)
            for k in kappas
        ]
        return [f.result() for f in futs]


def fit_expansion(
    results: list[CriticalFieldResult],
    J: int,
    *,
    lambda1: float | None = None,
) -> ExpansionFit:
    """Fit H * lambda1 / kappa - 1 against kappa^{-1}..kappa^{-J}.

    Requires at least J+2 distinct kappa values.  A kappa range
    narrower than a factor 4, or a numerically rank-deficient design,
    raises a conditioning error: inverse-power columns collapse on
    narrow ranges and the coefficients become meaningless.  J = 0
    returns no coefficients and reports the raw deviation from
    kappa / lambda1.
    """
    if J < 0:
        raise ParameterError(f"fit order must be >= 0, got {J}")
    if not results:
        raise ParameterError("need at least one critical-field result")
    if lambda1 is None:
        lams = {round(r.lambda1_model, 12) for r in results}
        if len(lams) != 1:
            raise ParameterError(
                "results carry different corner-model energies; pass lambda1"
            )
        lambda1 = results[0].lambda1_model
    if not math.isfinite(lambda1) or lambda1 <= 0:
        raise ParameterError(f"lambda1 must be positive, got {lambda1}")

    kap = np.array(sorted({round(r.kappa, 12) for r in results}))
    if len(kap) < J + 2:
        raise ParameterError(
            f"need at least J+2={J + 2} distinct kappa values, got {len(kap)}"
        )
    by_kappa = {round(r.kappa, 12): r for r in results}
    H = np.array([by_kappa[k].H_lin for k in kap])
    y = H * lambda1 / kap - 1.0

    if kap[-1] / kap[0] < 3.999:
        raise ConditioningError(
            f"kappa range {kap[0]:.4g}..{kap[-1]:.4g} spans a factor "
            f"{kap[-1] / kap[0]:.3g} < 4; inverse-power design is too narrow"
        )
    if J == 0:
        return ExpansionFit(
            lambda1=float(lambda1),
            etas=(),
            fit_residual=float(np.max(np.abs(y) / (1.0 + np.abs(y)))),
        )

    X = np.column_stack([kap ** (-j) for j in range(1, J + 1)])
    coef, _, rank, sv = np.linalg.lstsq(X, y, rcond=None)
    if rank < J or sv[0] / sv[-1] > 1e10:
        raise ConditioningError(
            f"expansion design has condition {sv[0] / sv[-1]:.3g} "
            f"(rank {rank} of {J}); widen the kappa range"
        )
    resid = np.abs(X @ coef - y)
    return ExpansionFit(
        lambda1=float(lambda1),
        etas=tuple(float(c) for c in coef),
        fit_residual=float(np.max(resid / (1.0 + np.abs(y)))),
    )
