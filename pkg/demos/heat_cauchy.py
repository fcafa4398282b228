"""Exact power-series Cauchy solutions for the heat operator i*x1 + x2^2.

Polynomial data give terminating series, so the solution is a polynomial
and the PDE residual vanishes identically. Plane-wave data are compared
with the two-exponential closed form.
"""
import numpy as np

from rungekit.cauchy import cauchy_solve, identity_report
from rungekit.funcdata import ExpPolyData, PolyData
from rungekit.nullsol import heat_decomposition
from rungekit.polyalg import format_poly, parse_poly

dec = heat_decomposition()

h0 = PolyData(parse_poly("x1^2 - 3", 1))
h1 = PolyData(parse_poly("x1", 1))
sol = cauchy_solve(dec, [h0, h1])
print("u =", format_poly(sol.as_poly()))
print("terminated:", sol.terminated, " residual zero:", sol.pde_residual().is_zero)
print("C_l identity:", identity_report(dec, h1, 8)["exact"])

lam = 2.5
mu = np.sqrt(-1j * lam) * np.array([1, -1])
a, b = np.linalg.solve(np.array([[1, 1], mu]), np.array([1, 0]))
wave = cauchy_solve(dec, [ExpPolyData.plane_wave((lam,), exact=False),
                          ExpPolyData.plane_wave((lam,), 0.0, exact=False)], 60)
g = np.linspace(-1, 1, 9)
pts = np.array([(x, y) for x in g for y in g])
ref = np.exp(1j * lam * pts[:, 0]) * (a * np.exp(1j * mu[0] * pts[:, 1]) + b * np.exp(1j * mu[1] * pts[:, 1]))
err = np.max(np.abs(wave.evaluate_array(pts) - ref)) / np.max(np.abs(ref))
print(f"plane wave lambda={lam}: relative error {err:.2e}")
