import math
import time

from cornersc.geometry import PolygonDomain, refine_mesh
from cornersc.eigen import lambda1_polygon

sq = PolygonDomain([(0, 0), (1, 0), (1, 1), (0, 1)])

for B, h_eff in ((125.0, 0.14), (500.0, 0.14), (125.0, 0.10)):
    res, _, mesh = lambda1_polygon(sq, B, h_eff=h_eff, return_system=True)
    lam0 = float(res.eigenvalues[0])
    m1 = refine_mesh(mesh)
    t0 = time.time()
    lam1 = float(lambda1_polygon(sq, B, mesh=m1).eigenvalues[0])
    t1 = time.time() - t0
    m2 = refine_mesh(m1)
    t0 = time.time()
    lam2 = float(lambda1_polygon(sq, B, mesh=m2).eigenvalues[0])
    t2 = time.time() - t0
    d01 = lam0 - lam1
    d12 = lam1 - lam2
    p = math.log2(d01 / d12) if d12 > 0 else float("nan")
    e1 = (4 * lam1 - lam0) / 3
    e2 = (4 * lam2 - lam1) / 3
    e22 = (16 * e2 - e1) / 15
    print(
        f"B={B:7.1f} h_eff={h_eff:.2f}: lam0={lam0:.7f} lam1={lam1:.7f} lam2={lam2:.7f}"
        f"  (n2={m2.n_nodes}, {t1:.0f}s/{t2:.0f}s)"
    )
    print(
        f"  order p={p:.3f}  extr1={e1:.7f} extr2={e2:.7f} extr22={e22:.7f}"
        f"  leftover(extr1)~{abs(e1 - e22) / e22:.2e} rel"
    )
