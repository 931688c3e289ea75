import time

import numpy as np

from cornersc.geometry import PolygonDomain
from cornersc.glmin import (
    LINEAR_MODE,
    balanced_gauge,
    gl_mesh,
    minimize_frozen,
    sector_model,
)

sq = PolygonDomain([(0, 0), (1, 0), (1, 1), (0, 1)])
mu = 0.55

t0 = time.time()
sec = sector_model(0.5 * np.pi, mu, mu)
print(
    f"sector: E={sec.energy:.8f} err={sec.energy_error:.2e} decay={sec.decay_rate:.3f} "
    f"bmass={sec.boundary_mass:.2e} ({time.time()-t0:.0f}s)"
)

for kappa in (15.0, 30.0):
    H = kappa / mu
    B = kappa * H
    t0 = time.time()
    mesh = gl_mesh(sq, B)
    gauge = balanced_gauge(sq, mesh)
    t_mesh = time.time() - t0
    t0 = time.time()
    out = minimize_frozen(mesh, kappa, H, LINEAR_MODE, gauge=gauge)
    t_min = time.time() - t0
    # scale-free corner sum: 4 x sector energy
    gap = abs(out.energy - 4 * sec.energy) / abs(4 * sec.energy)
    print(
        f"kappa={kappa}: B={B:.0f} nodes={mesh.n_nodes} E_sq={out.energy:.6f} "
        f"4E_sec={4*sec.energy:.6f} rel_gap={gap:.4f} its={out.iterations} "
        f"(mesh {t_mesh:.0f}s, min {t_min:.0f}s)"
    )
    # mass fraction per corner zone d <= 10/sqrt(B)
    psi = out.state.psi
    from cornersc.assembly import quad_ops

    ops = quad_ops(mesh)
    dens = np.abs(ops.E @ psi) ** 2 * ops.w
    total = dens.sum()
    rad = 10.0 / np.sqrt(B)
    fr = []
    for c in sq.vertices:
        d = np.linalg.norm(ops.x - c, axis=1)
        fr.append(dens[d <= rad].sum() / total)
    print(f"  corner mass fractions: {np.round(fr, 4)}, off-corner {1-sum(fr):.4f}")
