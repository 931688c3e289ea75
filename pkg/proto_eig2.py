import time

import numpy as np
from scipy.sparse.linalg import eigsh

from cornersc.geometry import SectorDomain, make_sector_mesh
from cornersc.assembly import assemble

THETA0 = 0.5901052352360232


def lam1(alpha, R, h):
    mesh = make_sector_mesh(SectorDomain(alpha=alpha, radius=R), h)
    sys_ = assemble(mesh, 1.0, arc_condition="zero")
    n = sys_.n_active
    rng = np.random.RandomState(20151231)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    vals = eigsh(sys_.K, k=1, M=sys_.M, sigma=-0.1, which="LM", v0=v0, maxiter=400, tol=0)[0]
    return vals[0], n


for ap, ref in [(0.5, 0.5099), (1.0, THETA0)]:
    print(f"alpha = {ap}*pi, R=16  (ref ~ {ref})")
    prev = None
    for h in (0.3, 0.2, 0.15, 0.1, 0.075, 0.05):
        t0 = time.time()
        lam, n = lam1(ap * np.pi, 16.0, h)
        dt = time.time() - t0
        ratio = "" if prev is None else f" ratio={(prev - ref) / (lam - ref):5.2f}"
        print(f"  h={h:.3f} n={n:6d} lam={lam:.7f} err={lam - ref:+.2e}{ratio}  {dt:4.1f}s")
        prev = lam
    # two-level Richardson h=0.15 / 0.075
    l1, _ = lam1(ap * np.pi, 16.0, 0.15)
    l2, _ = lam1(ap * np.pi, 16.0, 0.075)
    extr = (4 * l2 - l1) / 3
    print(f"  Richardson(0.15, 0.075): {extr:.7f} err={extr - ref:+.2e}")
