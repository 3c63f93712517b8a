"""Second-order advective PDE with a double characteristic root.

u_tt - 2 u_tx + u_xx = 0 has the characteristic polynomial (z - 1)^2, so
with A = d/dx it factors as (d/dt - A)^2 u = 0 and the solution is a
shifted-profile expression

    u(t, x) = phi1(x + t) + t phi2(x + t) - t phi1'(x + t).

The generic solver path (repeated translation generator, confluent solve,
semigroup assembly) must reproduce that expression; for phi1 = sin,
phi2 = 0 everything is also available analytically.
"""

import numpy as np

from factored_evolution import Example1Problem, UniformGrid, example1_residual, solve_example1

n = 256
grid = UniformGrid(0.0, 2.0 * np.pi / n, n)
x = grid.points()

problem = Example1Problem(a1=-2.0, a2=1.0, grid=grid, phi1=np.sin(x), phi2=np.zeros(n))
print(f"characteristic roots: z1={problem.z1}, z2={problem.z2}, double={problem.is_double}")

t_grid = np.linspace(0.0, 1.0, 101)
trace = solve_example1(problem, t_grid)

analytic = np.stack([np.sin(x + t) - t * np.cos(x + t) for t in t_grid])
print(f"generic path vs closed form : {trace.diagnostics['closed_form_max_dev']:.2e}")
print(f"generic path vs analytic    : {np.max(np.abs(trace.values - analytic)):.2e}")
print(f"discrete PDE residual       : {example1_residual(problem, trace):.2e}")

print("\nslice at x = 0:")
for i in range(0, 101, 20):
    t = t_grid[i]
    print(f"  t={t:4.2f}  u={trace.values[i, 0]: .6f}  analytic={analytic[i, 0]: .6f}")

# with forcing f = 1 and zero profiles the solution is t^2/2, uniformly in x
forced = Example1Problem(
    a1=-2.0, a2=1.0, grid=grid,
    phi1=np.zeros(n), phi2=np.zeros(n),
    forcing=lambda t, xx: np.ones_like(xx),
)
ft = solve_example1(forced, np.array([0.0, 0.5, 1.0]))
print("\nconstant forcing, zero data -> t^2/2:")
for t, row in zip(ft.times, ft.values):
    print(f"  t={t:4.2f}  u={row[0]: .6f}  expected={t * t / 2: .6f}")
