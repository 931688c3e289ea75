import time
import numpy as np

from cornersc.geometry import PolygonDomain
from cornersc.eigen import corner_spectrum, lambda1_polygon, field_mesh, anchored_gauge
from cornersc.assembly import quad_ops, l4_norm
from cornersc.critfield import solve_hc3_linear, fit_expansion, CriticalFieldResult
from cornersc.glmin import minimize_frozen, LINEAR_MODE, RANDOM, ZERO

square = PolygonDomain(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))

t0 = time.time()
spec = corner_spectrum(square)
print(f"spectrum: lambdas={spec.lambdas}, theta0={spec.theta0:.6f}, "
      f"K={spec.K_omega}, ok={spec.assumption_ok}  [{time.time()-t0:.1f}s]")

t0 = time.time()
res = solve_hc3_linear(square, 8.0, 1e-3, spectrum=spec)
print(f"kappa=8: H_lin={res.H_lin:.6f}  resid={res.residual:.3g}  "
      f"evals={res.evaluations}  mono={res.monotone}  "
      f"HL/k={res.H_lin*res.lambda1_model/8.0:.6f}  [{time.time()-t0:.1f}s]")
print(f"  k/theta0={8/spec.theta0:.4f}  k/Lam1={8/spec.lambdas[0]:.4f}  bracket={res.bracket}")

H = res.H_lin
kappa = 8.0

# frozen minimization below the critical field
t0 = time.time()
mesh = field_mesh(square, kappa * 0.9 * H)
print(f"mesh at B={kappa*0.9*H:.1f}: {mesh.n_nodes} nodes  [{time.time()-t0:.1f}s]")
gauge = anchored_gauge(square, mesh)

t0 = time.time()
ev, system, _ = lambda1_polygon(square, kappa * 0.9 * H, mesh=mesh, return_system=True)
lam1 = ev.eigenvalues[0]
u1 = system.expand(ev.eigenvectors[:, 0])
l4 = l4_norm(mesh, u1)
bound = -((kappa**2 - lam1) ** 2) / (2 * kappa**2 * l4**4)
print(f"lam1={lam1:.4f} vs k^2={kappa**2}  trial bound={bound:.6f}  [{time.time()-t0:.1f}s]")

t0 = time.time()
out = minimize_frozen(mesh, kappa, 0.9 * H, LINEAR_MODE, gauge=gauge)
dh = np.diff(np.array(out.energy_history))
print(f"LINEAR 0.9H: E={out.energy:.6f}  gn={out.grad_norm:.3g}  its={out.iterations}  "
      f"trivial={out.trivial_flag}  monotone={bool(np.all(dh <= 1e-11))}  "
      f"maxpsi={np.abs(out.state.psi).max():.4f}  [{time.time()-t0:.1f}s]")
print(f"  energy <= bound+tol: {out.energy <= bound + 1e-6}")

t0 = time.time()
out2 = minimize_frozen(mesh, kappa, 0.9 * H, RANDOM, gauge=gauge, seed=3)
print(f"RANDOM 0.9H: E={out2.energy:.6f}  its={out2.iterations}  "
      f"trivial={out2.trivial_flag}  [{time.time()-t0:.1f}s]")

# above the critical field -> normal state
t0 = time.time()
mesh2 = field_mesh(square, kappa * 1.5 * H)
gauge2 = anchored_gauge(square, mesh2)
out3 = minimize_frozen(mesh2, kappa, 1.5 * H, LINEAR_MODE, gauge=gauge2)
print(f"LINEAR 1.5H: E={out3.energy:.3g}  trivial={out3.trivial_flag}  "
      f"its={out3.iterations}  [{time.time()-t0:.1f}s]")
t0 = time.time()
out4 = minimize_frozen(mesh2, kappa, 1.5 * H, RANDOM, gauge=gauge2, seed=3)
print(f"RANDOM 1.5H: E={out4.energy:.3g}  trivial={out4.trivial_flag}  "
      f"its={out4.iterations}  [{time.time()-t0:.1f}s]")

# just above: the slow-decay regime that prices onset bisection
t0 = time.time()
mesh3 = field_mesh(square, kappa * 1.02 * H)
gauge3 = anchored_gauge(square, mesh3)
out5 = minimize_frozen(mesh3, kappa, 1.02 * H, RANDOM, gauge=gauge3, seed=3)
print(f"RANDOM 1.02H: E={out5.energy:.3g}  trivial={out5.trivial_flag}  "
      f"its={out5.iterations}  [{time.time()-t0:.1f}s]")

# synthetic expansion-fit oracle
rng = [6.0, 9.0, 13.0, 18.0, 24.0]
lam = 0.5112
fake = [
    CriticalFieldResult(
        kappa=k, H_lin=k / lam * (1 + 2.0 / k - 3.0 / k**2), residual=0.0,
        bracket=(0.0, 0.0), lambda1_model=lam, theta0_model=0.59,
        lambda1_at_root=k**2,
    )
    for k in rng
]
fit = fit_expansion(fake, 2)
print(f"synthetic fit: etas={fit.etas}  resid={fit.fit_residual:.3g}")
assert abs(fit.etas[0] - 2.0) < 1e-6 and abs(fit.etas[1] + 3.0) < 1e-6
print("synthetic oracle ok")
