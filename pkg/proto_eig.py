import time

import numpy as np
from scipy.sparse.linalg import eigsh

from cornersc.geometry import SectorDomain, make_sector_mesh
from cornersc.assembly import assemble

THETA0 = 0.5901052352360232


def lam1(alpha, R, h, far_growth=1.0, arc="zero", sigma=-0.1):
    mesh = make_sector_mesh(SectorDomain(alpha=alpha, radius=R), h, far_growth=far_growth)
    sys_ = assemble(mesh, 1.0, arc_condition=arc)
    n = sys_.n_active
    rng = np.random.RandomState(20151231)
    v0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    vals = eigsh(sys_.K, k=1, M=sys_.M, sigma=sigma, which="LM", v0=v0, maxiter=400, tol=0)[0]
    return vals[0], n


def rfit(lams, Rs):
    l1, l2, l3 = lams
    d12, d23 = l2 - l1, l3 - l2
    if abs(d12) < 1e-14 or d23 * d12 <= 0:
        return l3, abs(d23)
    q = d23 / d12
    if q >= 0.97:
        return l3, abs(d23)
    extr = l3 + d23 * q / (1 - q)
    return extr, abs(extr - l3)


t0 = time.time()
print("alpha/pi  R12        R16        R20        Rfit       (h=0.15, zero arc)")
prev = None
mono_ok = True
for ap in [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]:
    lams = []
    for R in (12.0, 16.0, 20.0):
        lam, n = lam1(ap * np.pi, R, 0.15)
        lams.append(lam)
    extr, err = rfit(lams, (12, 16, 20))
    flag = ""
    if prev is not None and extr <= prev:
        flag = "  NON-MONOTONE"
        mono_ok = False
    prev = extr
    print(f"  {ap:.1f}   {lams[0]:.7f}  {lams[1]:.7f}  {lams[2]:.7f}  {extr:.7f}{flag}")
print("monotone grid:", mono_ok, " total time %.1fs" % (time.time() - t0))
print("theta0 target:", THETA0)
