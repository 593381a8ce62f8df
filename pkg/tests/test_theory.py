import math

import numpy as np
import pytest

from selfaffine.errors import SolverBracketError
from selfaffine.heightlaw import (
    Deterministic,
    IidUniform,
    MirroredBeta,
    RatioMoments,
    moments,
    okamoto_law,
)
from selfaffine.symbolic import Partition
from selfaffine.theory import (
    CLASS_DIFFERENTIABLE,
    CLASS_INCONCLUSIVE,
    CLASS_NON_DIFFERENTIABLE,
    compute_phi,
    dimension_gap,
    dimension_sensitivity,
    okamoto_dimension,
    solve_dimension,
    uniform_law_dimension,
)

P25 = Partition((0.0, 0.4, 0.6, 1.0))
THIRDS = Partition.thirds()

# frozen solver oracles
S_EX = 1.561123560515159       # MirroredBeta(2,1) on (0.4, 0.2, 0.4)
PHI_EX = 0.4549201679861441
S_U3 = 1.2618595071429146      # IidUniform(3) on thirds
PHI_U3 = -0.06805437799855688
S_PERKINS = 1.7712437491614221
PHI_PERKINS = 0.841909548102752


def test_example_model_dimension_and_phi():
    mom = moments(MirroredBeta(2.0, 1.0), P25)
    rep = solve_dimension(mom, P25)
    assert rep.s == pytest.approx(S_EX, abs=1e-9)
    assert rep.residual < 1e-10
    assert rep.bracket == (1.0, 2.0)
    dif = compute_phi(mom, P25)
    assert dif.phi == pytest.approx(PHI_EX, abs=1e-12)
    assert dif.classification == CLASS_NON_DIFFERENTIABLE
    assert dif.verdict_confidence == "exact"


def test_uniform_thirds_dimension_and_phi():
    mom = moments(IidUniform(3), THIRDS)
    assert solve_dimension(mom, THIRDS).s == pytest.approx(S_U3, abs=1e-9)
    dif = compute_phi(mom, THIRDS)
    assert dif.phi == pytest.approx(PHI_U3, abs=1e-12)
    assert dif.classification == CLASS_DIFFERENTIABLE


def test_perkins_dimension_and_phi():
    mom = moments(okamoto_law(5 / 6), THIRDS)
    assert solve_dimension(mom, THIRDS).s == pytest.approx(S_PERKINS, abs=1e-9)
    dif = compute_phi(mom, THIRDS)
    assert dif.phi == pytest.approx(PHI_PERKINS, abs=1e-12)
    assert dif.classification == CLASS_NON_DIFFERENTIABLE


def test_okamoto_closed_form_family():
    for alpha in (0.5, 0.55, 0.6, 0.75, 5 / 6, 0.9, 0.95):
        mom = moments(okamoto_law(alpha), THIRDS)
        s = solve_dimension(mom, THIRDS).s
        assert abs(s - okamoto_dimension(alpha)) < 1e-9
    # alpha <= 1/2 collapses to dimension 1 exactly
    assert okamoto_dimension(0.5) == pytest.approx(1.0)
    assert okamoto_dimension(0.2) == 1.0
    with pytest.raises(ValueError):
        okamoto_dimension(1.5)


def test_uniform_law_dimension_formula():
    for m in range(3, 11):
        mom = moments(IidUniform(m), Partition.uniform(m))
        s = solve_dimension(mom, Partition.uniform(m)).s
        expected = 1.0 + (math.log(m + 1) - math.log(3)) / math.log(m)
        assert abs(s - expected) < 1e-9
        assert uniform_law_dimension(m) == pytest.approx(expected, rel=1e-15)


def test_degenerate_law_gives_minus_infinity():
    mom = moments(Deterministic((0.5, 0.5)), THIRDS)
    dif = compute_phi(mom, THIRDS)
    assert math.isinf(dif.phi) and dif.phi < 0
    assert dif.degenerate
    assert dif.classification == CLASS_DIFFERENTIABLE
    assert dif.verdict_confidence == "exact"


def test_phi_zero_boundary_is_non_differentiable():
    # an exact phi of 0 lands on the non-differentiable side of the dichotomy
    lens = THIRDS.lengths_array
    mom = RatioMoments(
        mean_a=np.array([0.5, 0.5, 0.5]),
        mean_log_a=np.log(lens),  # makes each term vanish
        mean_a_sq=np.array([0.3, 0.3, 0.3]),
        cross=np.full((3, 3), 0.25),
        provenance="closed-form",
    )
    dif = compute_phi(mom, THIRDS)
    assert dif.phi == pytest.approx(0.0, abs=1e-15)
    assert dif.classification == CLASS_NON_DIFFERENTIABLE


def test_mc_moments_near_zero_phi_is_inconclusive():
    lens = THIRDS.lengths_array
    se = np.full(3, 0.05)
    mom = RatioMoments(
        mean_a=np.array([0.5, 0.5, 0.5]),
        mean_log_a=np.log(lens) + 0.01,  # phi = 0.01, inside the CI band
        mean_a_sq=np.array([0.3, 0.3, 0.3]),
        cross=np.full((3, 3), 0.25),
        provenance="monte-carlo",
        n_samples=10_000,
        se_mean_log_a=se,
    )
    dif = compute_phi(mom, THIRDS)
    assert dif.classification == CLASS_INCONCLUSIVE
    assert dif.verdict_confidence == "statistical"
    lo, hi = dif.ci
    assert lo < 0.0 < hi


def test_gap_monotone_and_bracket():
    mom = moments(MirroredBeta(2.0, 1.0), P25)
    lens = P25.lengths_array
    g1 = dimension_gap(1.0, mom.mean_a, lens)
    g2 = dimension_gap(2.0, mom.mean_a, lens)
    assert g1 >= 0.0 >= g2
    ss = np.linspace(1.0, 2.0, 41)
    vals = [dimension_gap(s, mom.mean_a, lens) for s in ss]
    assert all(a >= b - 1e-15 for a, b in zip(vals, vals[1:]))


def test_bracket_property_randomized():
    # admissible moments: 0 <= E a_i <= 1 and sum E a_i >= 1
    rng = np.random.default_rng(12)
    for _ in range(500):
        m = rng.integers(2, 7)
        cuts = np.sort(rng.random(m - 1))
        p = Partition((0.0, *map(float, cuts), 1.0)) if np.all(np.diff(np.concatenate(([0], cuts, [1]))) > 1e-3) else Partition.uniform(int(m))
        mean_a = rng.random(p.m)
        total = mean_a.sum()
        if total < 1.0:
            mean_a = np.minimum(mean_a + (1.0 - total) / p.m + 1e-6, 1.0)
            if mean_a.sum() < 1.0:
                mean_a = np.full(p.m, 1.0)
        lens = p.lengths_array
        assert dimension_gap(1.0, mean_a, lens) >= -1e-12
        assert dimension_gap(2.0, mean_a, lens) <= np.sum(mean_a * lens) - 1 + 1e-12
        s = solve_dimension(
            RatioMoments(
                mean_a=mean_a,
                mean_log_a=np.log(np.maximum(mean_a, 1e-12)),
                mean_a_sq=mean_a**2,
                cross=np.outer(mean_a, mean_a),
                provenance="closed-form",
            ),
            p,
        ).s
        assert 1.0 <= s <= 2.0
        if 1.0 < s < 2.0:
            assert abs(dimension_gap(s, mean_a, lens)) < 1e-9


def test_broken_bracket_raises():
    mom = RatioMoments(
        mean_a=np.array([0.1, 0.1, 0.1]),  # sums below 1: no root in [1, 2]
        mean_log_a=np.log(np.array([0.1, 0.1, 0.1])),
        mean_a_sq=np.array([0.01, 0.01, 0.01]),
        cross=np.full((3, 3), 0.01),
        provenance="closed-form",
    )
    with pytest.raises(SolverBracketError) as exc:
        solve_dimension(mom, THIRDS)
    assert exc.value.g_low < 0


def test_sensitivity_interval():
    mc = moments(MirroredBeta(2.0, 1.0), P25, samples=100_000, seed=2, method="monte-carlo")
    sens = dimension_sensitivity(mc, P25, k=4.0)
    exact = S_EX
    assert sens.lower <= exact <= sens.upper
    assert sens.upper - sens.lower < 0.05
    # exact moments give a width-zero interval
    ex = moments(MirroredBeta(2.0, 1.0), P25)
    s0 = dimension_sensitivity(ex, P25)
    assert s0.lower == pytest.approx(s0.upper, abs=1e-12)
