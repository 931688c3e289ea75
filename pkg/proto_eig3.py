import time

import numpy as np
from scipy.sparse.linalg import eigsh

from cornersc.geometry import SectorDomain, make_sector_mesh
from cornersc.assembly import GaugeField, assemble

THETA0 = 0.5901052352360232


def lam1(alpha, R, h, gauge_kind="F"):
    mesh = make_sector_mesh(SectorDomain(alpha=alpha, radius=R), h)
    if gauge_kind == "bisector":
        g = GaugeField.from_nodal(np.column_stack([np.zeros(mesh.n_nodes), mesh.nodes[:, 0]]))
    else:
        g = GaugeField.standard()
    sys_ = assemble(mesh, 1.0, gauge=g, arc_condition="zero")
    n = sys_.n_active
    rng = np.random.RandomState(20151231)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    vals = eigsh(sys_.K, k=1, M=sys_.M, sigma=-0.1, which="LM", v0=v0, maxiter=400, tol=0)[0]
    return vals[0], n


for ap, ref in [(1.0, THETA0), (0.9, None), (0.5, 0.5099)]:
    print(f"alpha = {ap}*pi, R=16, bisector Landau gauge")
    prev = None
    for h in (0.3, 0.2, 0.15, 0.1, 0.075):
        t0 = time.time()
        lam, n = lam1(ap * np.pi, 16.0, h, "bisector")
        dt = time.time() - t0
        msg = f"  h={h:.3f} n={n:6d} lam={lam:.7f}"
        if ref:
            msg += f" err={lam - ref:+.2e}"
        print(msg + f"  {dt:4.1f}s")
    l1, _ = lam1(ap * np.pi, 16.0, 0.15, "bisector")
    l2, _ = lam1(ap * np.pi, 16.0, 0.075, "bisector")
    extr = (4 * l2 - l1) / 3
    msg = f"  Richardson(0.15,0.075): {extr:.7f}"
    if ref:
        msg += f" err={extr - ref:+.2e}"
    print(msg)
