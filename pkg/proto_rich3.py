import math
import time

import numpy as np

from cornersc.geometry import PolygonDomain, make_polygon_mesh, refine_mesh
from cornersc.assembly import assemble, NATURAL
from cornersc.eigen import anchored_gauge, smallest_eigenpairs, lambda1_polygon

sq = PolygonDomain([(0, 0), (1, 0), (1, 1), (0, 1)])
B = 125.0


def solve(mesh, k=1, tol=1e-8):
    system = assemble(mesh, B, gauge=anchored_gauge(sq, mesh), arc_condition=NATURAL)
    return smallest_eigenpairs(system, k=k, tol=tol, sigma=0.2 * B)


# 1) solver tightness on the graded level-1 mesh: k=4 spectrum + tol sweep
res0, _, mesh = lambda1_polygon(sq, B, h_eff=0.14, return_system=True)
m1 = refine_mesh(mesh)
r = solve(m1, k=4, tol=1e-8)
print("graded level-1, k=4:", np.array2string(r.eigenvalues, precision=8), "res", r.residuals)
r12 = solve(m1, k=1, tol=1e-12)
print(f"tol 1e-8 vs 1e-12: {r.eigenvalues[0]:.10f} vs {r12.eigenvalues[0]:.10f}")

# 2) uniform-mesh family: clean O(h^2)?
t0 = time.time()
mu = make_polygon_mesh(sq, 0.02, grading=1.0, relax_iters=8)
print(f"uniform h=0.02: {mu.n_nodes} nodes ({time.time()-t0:.0f}s)")
lams = []
m = mu
for lev in range(3):
    t0 = time.time()
    lam = float(solve(m).eigenvalues[0])
    lams.append(lam)
    print(f"  level {lev}: n={m.n_nodes} lam={lam:.8f} ({time.time()-t0:.0f}s)")
    if lev < 2:
        m = refine_mesh(m)
d01, d12 = lams[0] - lams[1], lams[1] - lams[2]
print(f"uniform order p = {math.log2(d01 / d12):.3f}")
e1 = (4 * lams[1] - lams[0]) / 3
e2 = (4 * lams[2] - lams[1]) / 3
print(f"extr {e1:.8f} {e2:.8f}  leftover(e1) ~ {abs(e1-e2)/e2:.2e}")
