"""A nontrivial heat solution supported in the slab -(a+eps) <= x1 <= 0.

The half-space solution v vanishes for x1 > 0; cutting its boundary traces
off with a Gevrey function and re-solving the Cauchy problem gives u, which
agrees with v on the strip -a < x1 < -eps.
"""
import numpy as np

from rungekit.nullsol import heat_decomposition, slab_solution

a, eps = 1.0, 0.25
x1s = np.round(np.arange(-1.6, 0.55, 0.1), 12)
x2s = np.round(np.arange(-1.0, 1.05, 0.2), 12)
run = slab_solution(heat_decomposition(), a, eps, 1.5, 80, (x1s, x2s))

print("numerical support in x1:", run.support.slab)
print(f"strip mismatch |u - v| / |v|: {run.strip_mismatch():.2e}")
print("tail bound:", run.tail_bound, " degraded:", run.degraded)
scale = run.support.column_max.max()
for x, m, cls in zip(run.support.x1, run.support.column_max, run.support.classes):
    bar = "#" * int(round(40 * m / scale))
    print(f"{x:6.2f} {cls:>13} {bar}")
