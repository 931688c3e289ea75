import math
import time

from cornersc.eigen import fiber_theta0, mu1, theta0

t00 = time.time()
fib, fib_err = fiber_theta0()
print(f"fiber theta0 = {fib:.10f} +- {fib_err:.1e} ({time.time()-t00:.0f}s)")

vals = []
for frac in (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0):
    t0 = time.time()
    res = mu1(frac * math.pi)
    vals.append((frac, res))
    print(
        f"mu1({frac:.1f}*pi) = {res.value:.6f} +- {res.error:.1e}  "
        f"radii={res.radii} per_R={[f'{v:.6f}' for v in res.per_radius]} "
        f"({time.time()-t0:.0f}s)"
    )

print()
ok = all(a[1].value < b[1].value for a, b in zip(vals, vals[1:]))
print("strictly increasing:", ok)
below = all(r.value < fib for f, r in vals if f < 1.0)
print("mu1 < fiber theta0 for alpha < pi:", below)

t0 = time.time()
th = theta0(target=5e-3)
print(
    f"theta0: 2D={th.value:.7f}+-{th.error:.1e} fiber={th.fiber_value:.7f}"
    f"+-{th.fiber_error:.1e} gap={th.gap:.2e} consistent={th.consistent} "
    f"({time.time()-t0:.0f}s)"
)
print(f"total {time.time()-t00:.0f}s")
