"""Rehearsal: criterion-6 grid on a side-2.5 square + kappa0 calibration."""
import gc
import resource
import time

import numpy as np

from cornersc import eigen
from cornersc.critfield import fit_expansion, solve_hc3_linear
from cornersc.eigen import corner_spectrum, field_mesh, lambda1_polygon
from cornersc.geometry import PolygonDomain, refine_mesh

S = 2.5
H_EFF = 0.18
sq = PolygonDomain([[0.0, 0.0], [S, 0.0], [S, S], [0.0, S]])
unit = PolygonDomain([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def rss_gb() -> float:
    return resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1e6


# mesh-size preflight at both ends of the grid
for kap_probe in (3.5, 4.5, 14.0):
    B = kap_probe**2 / 0.5112
    m2 = refine_mesh(refine_mesh(field_mesh(sq, B, h_eff=H_EFF)))
    print(f"preflight kap={kap_probe} B={B:.0f}: level2 nodes {len(m2.nodes)}", flush=True)
    assert len(m2.nodes) < 200_000, "level-2 mesh too large for the memory budget"
    del m2
eigen._FIELD_MESH_CACHE.clear()
gc.collect()

t0 = time.time()
spec = corner_spectrum(sq)
lam1 = float(spec.lambdas[0])
th0 = spec.theta0
print(f"spectrum lam1={lam1:.7f} theta0={th0:.7f} ({time.time()-t0:.0f}s)", flush=True)

# kappa0 calibration: slope of lambda1(B) on the unit square vs the midpoint
# between the corner energy and the half-plane energy
Bs = np.array([4.0, 6.0, 9.0, 13.0, 19.0, 28.0, 40.0, 60.0, 90.0, 130.0])
lams = np.array([float(lambda1_polygon(unit, B).eigenvalues[0]) for B in Bs])
mid = 0.5 * (lam1 + th0)
slopes = np.diff(lams) / np.diff(Bs)
Bmid = 0.5 * (Bs[1:] + Bs[:-1])
print("lam/B:", " ".join(f"{b:.0f}:{l/b:.4f}" for b, l in zip(Bs, lams)), flush=True)
print("slopes:", " ".join(f"{b:.1f}:{s:.4f}" for b, s in zip(Bmid, slopes)), f"mid={mid:.4f}", flush=True)
eigen._FIELD_MESH_CACHE.clear()
gc.collect()

KAPS = [3.5, 4.5, 5.5, 7.0, 9.5, 14.0]
results = []
for kap in KAPS:
    t = time.time()
    r = solve_hc3_linear(sq, kap, 2e-4, kappa0=3.0, spectrum=spec, h_eff=H_EFF)
    results.append(r)
    print(
        f"kap={kap:5.2f} H={r.H_lin:.6f} resid={r.residual:+.3e} evals={r.evaluations} "
        f"gap={r.normalized_gap:+.7f} mono={r.monotone} ({time.time()-t:.0f}s rss={rss_gb():.2f}GB)",
        flush=True,
    )
    eigen._FIELD_MESH_CACHE.clear()
    gc.collect()

f1 = fit_expansion(results, 1)
f2 = fit_expansion(results, 2)
print("J=1 etas:", f1.etas, "resid", f1.fit_residual, flush=True)
print("J=2 etas:", f2.etas, "resid", f2.fit_residual, flush=True)
d = abs(f1.etas[0] - f2.etas[0])
lim = 0.10 * max(1.0, abs(f1.etas[0]))
print(f"eta1 drift {d:.4f} limit {lim:.4f} -> {'PASS' if d <= lim else 'FAIL'}", flush=True)
gaps = [abs(r.normalized_gap) for r in results]
print("abs gaps:", " ".join(f"{g:.2e}" for g in gaps), flush=True)
print(f"total {time.time()-t0:.0f}s rss={rss_gb():.2f}GB", flush=True)
