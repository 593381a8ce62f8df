"""Almost-sure classification and box dimension from ratio moments.

Two scalar functionals of a (law, partition) pair drive everything:

* the weighted log-ratio drift
  ``phi = sum_i l_i * (E log a_i - log l_i)``;
  negative drift means the limit function is almost surely differentiable
  almost everywhere (with derivative zero), nonnegative drift means almost
  surely non-differentiable almost everywhere;
* the dimension equation ``sum_i E(a_i) l_i^{s-1} = 1``, whose unique
  root in [1, 2] is the almost-sure box dimension of the graph.

Both consume RatioMoments only, so exactness is inherited from the
moment provenance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SolverBracketError
from .heightlaw import RatioMoments
from .symbolic import Partition

__all__ = [
    "DiffReport",
    "DimensionReport",
    "SensitivityReport",
    "compute_phi",
    "solve_dimension",
    "dimension_sensitivity",
    "dimension_gap",
    "okamoto_dimension",
    "uniform_law_dimension",
    "CLASS_DIFFERENTIABLE",
    "CLASS_NON_DIFFERENTIABLE",
    "CLASS_INCONCLUSIVE",
]

CLASS_DIFFERENTIABLE = "differentiable-a.e."
CLASS_NON_DIFFERENTIABLE = "non-differentiable-a.e."
CLASS_INCONCLUSIVE = "inconclusive-statistical"

# Monotone laws hit the bracket endpoint up to float cancellation; MC
# moments wobble at the 1/sqrt(n) scale.  Violations inside this band
# clamp to the endpoint instead of raising.
_BRACKET_TOL = 1e-9
_CI_Z = 2.5758293035489004  # two-sided 99%


@dataclass(frozen=True)
class DiffReport:
    phi: float
    classification: str
    verdict_confidence: str          # "exact" or "statistical"
    ci: Optional[tuple[float, float]] = None
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "phi": _json_float(self.phi),
            "classification": self.classification,
            "verdict_confidence": self.verdict_confidence,
            "ci": None if self.ci is None else [_json_float(v) for v in self.ci],
            "degenerate": self.degenerate,
        }


@dataclass(frozen=True)
class DimensionReport:
    s: float
    residual: float
    bracket: tuple[float, float]
    iterations: int
    ci: Optional[tuple[float, float]] = None
    warning: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "residual": self.residual,
            "bracket": list(self.bracket),
            "iterations": self.iterations,
            "ci": None if self.ci is None else [_json_float(v) for v in self.ci],
            "warning": self.warning,
        }


@dataclass(frozen=True)
class SensitivityReport:
    lower: float
    upper: float
    k: float
    warning: Optional[str] = None


def _json_float(v: float):
    if math.isinf(v):
        return "-inf" if v < 0 else "inf"
    if math.isnan(v):
        return "nan"
    return v


def compute_phi(mom: RatioMoments, p: Partition) -> DiffReport:
    """Drift functional and the almost-sure differentiability verdict.

    A degenerate law (some P(a_i = 0) > 0) gives phi = -inf and the
    differentiable verdict.  Monte Carlo moments whose confidence band
    straddles zero yield the inconclusive classification.
    """
    _check_m(mom, p)
    lens = p.lengths_array
    if mom.degenerate:
        return DiffReport(float("-inf"), CLASS_DIFFERENTIABLE, "exact", None, True)
    phi = float(np.sum(lens * (mom.mean_log_a - np.log(lens))))
    if mom.exact:
        cls = CLASS_DIFFERENTIABLE if phi < 0 else CLASS_NON_DIFFERENTIABLE
        return DiffReport(phi, cls, "exact")

    if mom.log_cov is not None:
        se = float(np.sqrt(max(lens @ mom.log_cov @ lens, 0.0)))
    else:
        se = float(np.sum(lens * mom.se_mean_log_a))
    lo, hi = phi - _CI_Z * se, phi + _CI_Z * se
    if lo < 0.0 <= hi:
        cls = CLASS_INCONCLUSIVE
    elif phi < 0:
        cls = CLASS_DIFFERENTIABLE
    else:
        cls = CLASS_NON_DIFFERENTIABLE
    return DiffReport(phi, cls, "statistical", (lo, hi))


def dimension_gap(s: float, mean_a: np.ndarray, lengths: np.ndarray) -> float:
    """g(s) = sum_i E(a_i) l_i^(s-1) - 1; strictly decreasing on [1, 2]."""
    return float(np.sum(mean_a * lengths ** (s - 1.0)) - 1.0)


def solve_dimension(
    mom: RatioMoments,
    p: Partition,
    *,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> DimensionReport:
    """Bisect the dimension equation on [1, 2].

    The moment contract guarantees g(1) >= 0 >= g(2); violations beyond
    a small float/MC cushion raise SolverBracketError with both endpoint
    values so the caller can see which side broke.
    """
    _check_m(mom, p)
    return _solve(mom.mean_a, p.lengths_array, tol, max_iter)


def _solve(mean_a: np.ndarray, lens: np.ndarray, tol: float, max_iter: int) -> DimensionReport:
    g1 = dimension_gap(1.0, mean_a, lens)
    g2 = dimension_gap(2.0, mean_a, lens)
    if g1 < -_BRACKET_TOL or g2 > _BRACKET_TOL:
        raise SolverBracketError(
            f"dimension equation not bracketed on [1, 2]: g(1)={g1:.3e}, g(2)={g2:.3e}; "
            "moment contract (sum E a_i >= 1, E a_i <= 1) is broken",
            g1, g2,
        )
    if g1 <= 0.0:
        return DimensionReport(1.0, abs(g1), (1.0, 2.0), 0)
    if g2 >= 0.0:
        return DimensionReport(2.0, abs(g2), (1.0, 2.0), 0)

    lo, hi = 1.0, 2.0
    s = 1.5
    gs = 0.0
    iters = 0
    for iters in range(1, max_iter + 1):
        s = 0.5 * (lo + hi)
        gs = dimension_gap(s, mean_a, lens)
        if abs(gs) < tol or (hi - lo) < 4 * np.finfo(float).eps:
            break
        if gs > 0.0:
            lo = s
        else:
            hi = s
    return DimensionReport(s, abs(gs), (1.0, 2.0), iters)


def dimension_sensitivity(
    mom: RatioMoments,
    p: Partition,
    *,
    k: float = 4.0,
    tol: float = 1e-12,
    max_iter: int = 200,
) -> SensitivityReport:
    """Re-solve at mean_a shifted by +-k standard errors of each entry.

    g is increasing in every E a_i, so shifting all entries together
    brackets the root.  If the pessimistic end loses the bracket the
    interval is clamped at 1 and flagged one-sided.  Exact moments give
    a width-zero interval.
    """
    _check_m(mom, p)
    lens = p.lengths_array
    up = np.minimum(mom.mean_a + k * mom.se_mean_a, 1.0)
    down = np.maximum(mom.mean_a - k * mom.se_mean_a, 0.0)
    upper = _solve(up, lens, tol, max_iter).s
    warning = None
    try:
        lower = _solve(down, lens, tol, max_iter).s
    except SolverBracketError:
        lower = 1.0
        warning = (
            "bracket failed at the pessimistic end (sum of shifted means below 1); "
            "interval is one-sided and clamped at 1"
        )
    return SensitivityReport(lower, upper, k, warning)


def okamoto_dimension(alpha: float) -> float:
    """Closed-form graph dimension for the thirds family with heights
    (alpha, |1-2 alpha|, alpha): 1 + log(4 alpha - 1)/log 3 above the
    monotone threshold alpha = 1/2, else 1."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if alpha <= 0.5:
        return 1.0
    return 1.0 + math.log(4.0 * alpha - 1.0) / math.log(3.0)


def uniform_law_dimension(m: int) -> float:
    """Closed-form dimension for iid uniform heights on m equal cells."""
    if m < 3:
        raise ValueError("needs m >= 3 (interior cells)")
    return 1.0 + (math.log(m + 1) - math.log(3.0)) / math.log(m)


def _check_m(mom: RatioMoments, p: Partition) -> None:
    if mom.m != p.m:
        raise ValueError(f"moments have m={mom.m} but partition has m={p.m}")
