"""Solve a fifth-order equation with repeated factors and check it.

The equation

    (d/dt - C)(d/dt - B)(d/dt - B)(d/dt - A)(d/dt - A) u = 0

with commuting diagonal generators A, B, C is handled by grouping the
repeated factors, solving one confluent coefficient system, and summing
polynomial-weighted semigroup actions.  The same problem reduced to its
first-order companion system and integrated by RK4 serves as the referee.
"""

import numpy as np

from factored_evolution import (
    FactoredEquation,
    SpectralDiagonalOperator,
    build_confluent_matrix,
    oracle_solve,
    solve_homogeneous,
)

rng = np.random.default_rng(1)

dim = 3
A = SpectralDiagonalOperator("A", rng.uniform(-2.0, -1.5, dim))
B = SpectralDiagonalOperator("B", rng.uniform(-0.8, -0.4, dim))
C = SpectralDiagonalOperator("C", rng.uniform(0.0, 0.3, dim))

factors = (C, B, B, A, A)
initial_data = tuple(rng.standard_normal(dim) for _ in range(5))
eq = FactoredEquation(factors, initial_data)

print("factor list:", [op.label for op in factors])
print("grouped    :", [(op.label, mult) for op, mult in eq.grouped])

matrix = build_confluent_matrix(eq.grouped)
print("\ncoefficient matrix (symbolic):")
print(matrix)

t_grid = np.linspace(0.0, 2.0, 9)
trace = solve_homogeneous(eq, t_grid)
print(f"\ncoefficient-solve residual: {trace.diagnostics['coefficient_residual']:.2e}")

reference = oracle_solve(eq, t_grid[1:])
dev = np.max(np.abs(trace.values[1:] - reference.values))
scale = np.max(np.abs(reference.values))
print(f"max deviation from RK4 companion oracle: {dev:.2e} (scale {scale:.2f})")
print(f"relative: {dev / scale:.2e}")

print("\nu(t) first component:")
for t, row in zip(trace.times, trace.values):
    print(f"  t={t:4.2f}  u_0={row[0]: .6f}")
