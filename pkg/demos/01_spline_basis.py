"""Uniform B-spline bases: one cardinal shape, translated everywhere.

Shows the exact values the float oracle guarantees: the cubic cardinal
spline's knot values, partition of unity across the domain, and the
translation invariance that later lets every basis share one lookup table.
"""

import numpy as np

from kanedge.splines import SplineGrid, basis_matrix, cardinal_piece

grid = SplineGrid(n_intervals=5, degree=3, x_min=0.0, x_max=1.0)
print(f"grid: G={grid.n_intervals}, K={grid.degree}, {grid.n_bases} basis functions")

print("\ncubic cardinal spline at its knots:")
for piece, t, label in ((1, 0.0, "C(1)"), (2, 0.0, "C(2)"), (1, 0.5, "C(1.5)")):
    print(f"  {label} = {cardinal_piece(3, piece, t):.10f}")
print("  (1/6, 2/3, 23/48 exactly)")

xs = np.random.default_rng(0).uniform(0.0, 1.0, 10000)
sums = basis_matrix(grid, xs).sum(axis=-1)
print(f"\npartition of unity over 10k random points: max |sum - 1| = {np.abs(sums - 1).max():.2e}")

print("\nsame local shape in every knot interval (t = 0.25):")
for j in range(grid.n_intervals):
    x = grid.x_min + (j + 0.25) * grid.step
    row = basis_matrix(grid, np.array([x]))[0]
    active = row[j : j + grid.degree + 1]
    print(f"  interval {j}: active values {np.round(active, 6)}")
print("every interval sees identical values: one table can serve them all")
