import time

from cornersc.geometry import PolygonDomain
from cornersc.eigen import corner_spectrum
from cornersc.critfield import solve_hc3_linear, fit_expansion

sq = PolygonDomain([(0, 0), (1, 0), (1, 1), (0, 1)])
t0 = time.time()
spec = corner_spectrum(sq)
print(f"spectrum: lam1={spec.lambdas[0]:.7f} theta0={spec.theta0:.7f} ({time.time()-t0:.0f}s)")

results = []
for kappa in (6.0, 8.0, 12.0, 17.0, 24.0):
    t0 = time.time()
    r = solve_hc3_linear(sq, kappa, spectrum=spec)
    dt = time.time() - t0
    results.append(r)
    print(
        f"kappa={kappa:5.1f}: H_lin={r.H_lin:.6f} resid={r.residual:+.4g} "
        f"evals={r.evaluations} gap={r.normalized_gap:+.6f} "
        f"eta~{r.normalized_gap * kappa:+.5f} mono={r.monotone} ({dt:.0f}s)"
    )

for J in (1, 2):
    fit = fit_expansion(results, J)
    print(f"J={J}: lambda1={fit.lambda1:.6f} etas={tuple(round(e, 5) for e in fit.etas)} resid={fit.fit_residual:.2e}")

f1 = fit_expansion(results, 1)
f2 = fit_expansion(results, 2)
rel = abs(f1.etas[0] - f2.etas[0]) / abs(f1.etas[0])
print(f"eta1 J=1 vs J=2 relative change: {rel:.3f} (need <= 0.10)")
