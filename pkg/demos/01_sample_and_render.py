"""Draw a few random self-affine graphs and dump them as SVG.

Run from the repo root:

    python3 demos/01_sample_and_render.py [outdir]
"""

import sys
from pathlib import Path

from selfaffine import (
    MirroredBeta,
    Partition,
    SvgOptions,
    graph_points,
    okamoto_law,
    render_svg,
    sample_tree,
)

outdir = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
outdir.mkdir(parents=True, exist_ok=True)

p = Partition((0.0, 0.4, 0.6, 1.0))
law = MirroredBeta(2.0, 1.0)

# Three seeds of the same model. The skeleton of vertical rectangles is
# refreshed at every node, so the graphs share texture but not detail.
for seed in (1, 2, 3):
    tree = sample_tree(p, law, depth=8, seed=seed)
    g = graph_points(tree)
    path = outdir / f"mirrored_beta_seed{seed}.svg"
    path.write_text(render_svg(g))
    print(f"wrote {path} ({g.x.size} points)")

# Perkins' nowhere-differentiable function for contrast: same machinery,
# deterministic law, uniform thirds. Overlay the level-3 rectangle cover
# so you can see what the branching construction refines.
perkins = sample_tree(Partition.thirds(), okamoto_law(5.0 / 6.0), depth=8, seed=0)
g = graph_points(perkins)
path = outdir / "perkins.svg"
path.write_text(
    render_svg(g, SvgOptions(show_rectangles=True), rect_source=graph_points(perkins, level=3))
)
print(f"wrote {path} with the level-3 rectangle cover overlaid")
