import time

import numpy as np

from cornersc.geometry import PolygonDomain, refine_mesh, validate_mesh
from cornersc.eigen import field_mesh, lambda1_polygon

sq = PolygonDomain([(0, 0), (1, 0), (1, 1), (0, 1)])

# refine_mesh sanity on a field mesh
m = field_mesh(sq, 125.0, h_eff=0.14)
t0 = time.time()
mf = refine_mesh(m)
print(f"refine: {m.n_nodes} -> {mf.n_nodes} nodes, {m.n_triangles} -> {mf.n_triangles} tris, {time.time()-t0:.3f}s")
validate_mesh(mf)
print("validate_mesh(refined): OK")
assert mf.n_triangles == 4 * m.n_triangles
assert abs(mf.tri_areas().sum() - m.tri_areas().sum()) < 1e-12
assert np.all(mf.tri_areas() > 0)
assert len(mf.boundary_edges) == 2 * len(m.boundary_edges)
for cid, nid in m.corner_nodes.items():
    assert np.allclose(mf.nodes[mf.corner_nodes[cid]], m.nodes[nid])
print("refined areas/edges/corners: OK")

# nested Richardson vs cross-realization scatter
for B in (125.0, 500.0, 1130.0):
    vals = {}
    for h_eff in (0.14, 0.10):
        t0 = time.time()
        res, _, mesh = lambda1_polygon(sq, B, h_eff=h_eff, return_system=True)
        lam_c = float(res.eigenvalues[0])
        fine = refine_mesh(mesh)
        lam_f = float(lambda1_polygon(sq, B, mesh=fine).eigenvalues[0])
        extr = (4 * lam_f - lam_c) / 3
        dt = time.time() - t0
        vals[h_eff] = extr
        print(
            f"B={B:7.1f} h_eff={h_eff:.2f}: lam_c={lam_c:.6f} lam_f={lam_f:.6f} "
            f"extr={extr:.6f} (nested drop {(lam_c-lam_f)/lam_c:.2e}) {dt:.1f}s "
            f"nodes {mesh.n_nodes}->{fine.n_nodes}"
        )
        assert lam_f <= lam_c + 1e-10, "nested P1 must lower the eigenvalue"
    rel = abs(vals[0.14] - vals[0.10]) / vals[0.10]
    print(f"  cross-h_eff agreement of extrapolants: {rel:.2e}")
