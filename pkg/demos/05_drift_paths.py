"""The random walk that decides differentiability.

Follow a uniformly random point x down the coding tree and track
S_n = log(h / l) along the path. The per-step drift converges to phi:
negative drift means the rectangles get flatter than they get narrow
(graph differentiable a.e.), positive drift the opposite.
"""

from selfaffine import (
    IidUniform,
    MirroredBeta,
    Partition,
    compute_phi,
    drift_probe,
    moments,
    okamoto_law,
)

cases = [
    ("iid uniform thirds", Partition.thirds(), IidUniform(3)),
    ("mirrored beta(2,1)", Partition((0.0, 0.4, 0.6, 1.0)), MirroredBeta(2.0, 1.0)),
    ("okamoto 2/3", Partition.thirds(), okamoto_law(2.0 / 3.0)),
    # the devil's staircase has flat pieces: a_1 = 0 forces phi = -inf
    ("okamoto 1/2", Partition.thirds(), okamoto_law(0.5)),
]

for name, p, law in cases:
    mom = moments(law, p)
    rep = compute_phi(mom, p)
    probe = drift_probe(law, p, paths=200, steps=2000, seed=3, phi=rep.phi)
    phi_s = "-inf" if rep.phi == float("-inf") else f"{rep.phi:+.5f}"
    mean_s = "-inf" if probe.mean_ratio == float("-inf") else f"{probe.mean_ratio:+.5f}"
    print(f"{name:22s} phi={phi_s:>9s}  measured S_n/n={mean_s:>9s}"
          f"  in band: {probe.ratio_ok}  digit freqs ok: {probe.freq_ok}")
