"""Box-counting a sampled graph and reading the dimension off the slope.

The counts N(delta) grow like delta^(-s); regressing log N on -log delta
over the scale ladder delta^n recovers s. The two coarsest scales are
dropped by default since they are still dominated by the unit square.
"""

import numpy as np

from selfaffine import (
    IidUniform,
    Partition,
    box_count,
    estimate_dimension,
    graph_points,
    moments,
    okamoto_law,
    sample_tree,
    solve_dimension,
)

thirds = Partition.thirds()

# deterministic benchmark first: Perkins' function, s = 1 + log(7/3)/log 3
tree = sample_tree(thirds, okamoto_law(5.0 / 6.0), depth=10, seed=0)
est = estimate_dimension(tree)
print("Perkins, depth 10:")
for sc, ct, used in zip(est.scales, est.counts, est.used):
    mark = " " if used else "x"
    print(f"  {mark} delta={sc:.3e}  N={ct:9d}  logN/log(1/delta)={np.log(ct) / -np.log(sc):.4f}")
print(f"  slope {est.slope:.4f}, target 1.7712\n")

# the same ladder by hand, straight through box_count
g = graph_points(tree)
for n in (2, 4):
    print(f"  by hand, delta=3^-{n}: N={box_count(g, 3.0 ** -n)}")

# random model: average the slope over seeds, compare to the solved s
mom = moments(IidUniform(3), thirds)
s_theory = solve_dimension(mom, thirds).s
slopes = []
for seed in range(10):
    t = sample_tree(thirds, IidUniform(3), depth=10, seed=seed)
    slopes.append(estimate_dimension(t).slope)
print(f"\niid uniform thirds, 10 seeds: slope {np.mean(slopes):.4f} +- "
      f"{np.std(slopes, ddof=1) / np.sqrt(10):.4f}, solved s {s_theory:.4f}")
