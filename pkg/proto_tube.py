import math
import time

import numpy as np

from cornersc.geometry import SectorDomain, make_sector_boundary_mesh, ARTIFICIAL, PHYSICAL

for alpha_frac in (0.85, 1.0):
    for R in (16.0, 40.0):
        for h in (0.18, 0.09):
            t0 = time.time()
            mesh = make_sector_boundary_mesh(
                SectorDomain(alpha=alpha_frac * math.pi, radius=R), h
            )
            dt = time.time() - t0
            n_phys = int((mesh.boundary_tags == PHYSICAL).sum())
            n_art = int((mesh.boundary_tags == ARTIFICIAL).sum())
            print(
                f"alpha={alpha_frac:.2f}pi R={R:4.0f} h={h:.2f}: "
                f"{mesh.n_nodes:6d} nodes, {mesh.n_triangles:6d} tris, "
                f"minang={mesh.min_angle():.1f} phys={n_phys} art={n_art} "
                f"corners={mesh.corner_angles} ({dt:.1f}s)"
            )
            # area sanity: polygon area of the polyline approx of the sector
            sector_area = 0.5 * alpha_frac * math.pi * R * R
            print(f"   area={mesh.area:.3f} vs sector={sector_area:.3f}")
