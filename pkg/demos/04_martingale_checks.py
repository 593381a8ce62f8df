"""Watch the level sums behave like a martingale, then break them.

At the solved exponent s the weighted sums Y_n = sum h_w l_w^(s-1) over
level n have mean 1 at every depth, their variance stays bounded, and the
stopping-set sums X_n track them with a geometrically shrinking gap.
Shift s and all of that visibly fails; that contrast is the whole point
of the diagnostics.
"""

from selfaffine import (
    MirroredBeta,
    Partition,
    martingale_diagnostics,
    moments,
    solve_dimension,
)

p = Partition((0.0, 0.4, 0.6, 1.0))
law = MirroredBeta(2.0, 1.0)
mom = moments(law, p)
s = solve_dimension(mom, p).s


def report(tag, diag):
    print(f"{tag}: ok={diag.ok} alpha={diag.alpha:.4f}")
    print("   n    mean Y_n      se        E Y_n^2      bound")
    for n in diag.ns:
        print(
            f"  {n:2d}  {diag.y_mean[n]:10.6f}  {diag.y_se[n]:.2e}"
            f"  {diag.y_sq_mean[n]:10.6f}  {diag.y_sq_bound[n]:10.6f}"
        )
    if diag.fitted_decay_rate is not None:
        print(f"  gap^2 decay per level: {diag.fitted_decay_rate:.4f} (alpha {diag.alpha:.4f})")
    if diag.failures:
        for f in diag.failures:
            print(f"  FLAG: {f}")
    print()


report("solved s", martingale_diagnostics(law, p, s, mom, n_max=6, n_trees=400, seed=0))
report("s + 0.2 (wrong on purpose)",
       martingale_diagnostics(law, p, s + 0.2, mom, n_max=6, n_trees=400, seed=0))
