import math
import time

import numpy as np

from cornersc.eigen import _sector_lambda1

# h-convergence sanity at a mid radius
print("== h-convergence, tube mesh + edge-adapted gauge ==")
for af in (0.8, 0.9, 1.0):
    alpha = af * math.pi
    vals = []
    for h in (0.4, 0.2, 0.1):
        t0 = time.time()
        lam = _sector_lambda1(alpha, 20.0, h, 1e-8, "tube")
        vals.append(lam)
        print(f"  alpha={af}pi R=20 h={h}: lam={lam:.8f} ({time.time()-t0:.0f}s)")
    r = (vals[0] - vals[1]) / (vals[1] - vals[2])
    print(f"  ratio (should be ~4): {r:.2f}")

print("== per-R table, Richardson pair (0.2, 0.1) ==")
for af in (0.8, 0.9, 1.0):
    alpha = af * math.pi
    row = []
    for R in (16.0, 24.0, 32.0, 40.0):
        t0 = time.time()
        lc = _sector_lambda1(alpha, R, 0.2, 1e-8, "tube")
        lf = _sector_lambda1(alpha, R, 0.1, 1e-8, "tube")
        extr = (4 * lf - lc) / 3
        row.append(extr)
        print(f"  alpha={af}pi R={R:4.0f}: coarse={lc:.8f} fine={lf:.8f} "
              f"extr={extr:.8f} ({time.time()-t0:.0f}s)")
    d = np.diff(row)
    print(f"  extr row: {[f'{v:.7f}' for v in row]}  diffs {[f'{x:.1e}' for x in d]}")
