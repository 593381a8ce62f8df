"""Dimension and differentiability reports for the built-in model zoo.

Everything here is closed-form: no sampling, no regression. The table
shows the box dimension s solved from the moment equation and the drift
functional phi whose sign separates a.e.-differentiable graphs from
nowhere-differentiable ones.
"""

from selfaffine import (
    IidUniform,
    MirroredBeta,
    Partition,
    compute_phi,
    moments,
    okamoto_law,
    solve_dimension,
)

thirds = Partition.thirds()

models = [
    ("okamoto 1/2 (devil's staircase)", thirds, okamoto_law(0.5)),
    ("okamoto 2/3 (Bourbaki/Katsuura)", thirds, okamoto_law(2.0 / 3.0)),
    ("okamoto 5/6 (Perkins)", thirds, okamoto_law(5.0 / 6.0)),
    ("iid uniform thirds", thirds, IidUniform(3)),
    ("iid uniform fifths", Partition.uniform(5), IidUniform(5)),
    ("mirrored beta(2,1) on .4/.2/.4", Partition((0.0, 0.4, 0.6, 1.0)), MirroredBeta(2.0, 1.0)),
]

print(f"{'model':36s} {'s':>10s} {'phi':>12s}  verdict")
for name, p, law in models:
    mom = moments(law, p)
    s = solve_dimension(mom, p).s
    rep = compute_phi(mom, p)
    phi = "-inf" if rep.phi == float("-inf") else f"{rep.phi:+.6f}"
    print(f"{name:36s} {s:10.6f} {phi:>12s}  {rep.classification}")

# The okamoto family has an explicit dimension formula; check the solver
# against it across the parameter range.
print()
print("okamoto family, solver vs closed form:")
import math

for k in range(6):
    alpha = 0.55 + 0.08 * k
    mom = moments(okamoto_law(alpha), thirds)
    s = solve_dimension(mom, thirds).s
    closed = 1.0 + math.log(4.0 * alpha - 1.0) / math.log(3.0)
    print(f"  alpha={alpha:.2f}  s={s:.12f}  closed={closed:.12f}  diff={abs(s - closed):.2e}")
