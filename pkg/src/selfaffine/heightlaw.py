"""Height laws: the random vertical data attached to every tree node.

A height law for an m-cell partition draws a vector
``y = (y_1, ..., y_{m-1})`` in [0, 1]^{m-1}; with the fixed anchors
``y_0 = 0`` and ``y_m = 1`` the signed cell ratios are
``s_i = y_{i+1} - y_i`` and the contraction ratios ``a_i = |s_i|``.

``moments`` is the only place where randomness is integrated out: it
returns per-index means, log-means, second moments and the full cross
matrix ``E[a_i a_j]``, with provenance "closed-form", "quadrature" or
"monte-carlo".  Everything downstream (dimension equation, drift
functional, martingale constants) consumes a RatioMoments and never
samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, special

from .errors import ConfigurationError
from .symbolic import Partition

__all__ = [
    "SampleVector",
    "RatioMoments",
    "HeightLaw",
    "Deterministic",
    "IidUniform",
    "IidBeta",
    "MirroredBeta",
    "CustomSampler",
    "sample",
    "moments",
    "validate",
    "LawReport",
    "okamoto_law",
]

# Below this, a sampled ratio counts as an exact zero for log moments.
_ZERO_RATIO = 1e-300
_MIN_MC_SAMPLES = 1000
_SPOT_CHECK_DRAWS = 10_000


@dataclass(frozen=True)
class SampleVector:
    """One joint draw: interior heights plus derived ratios."""

    y: np.ndarray        # (m-1,) interior heights
    signed: np.ndarray   # (m,) signed ratios, sums to 1
    ratios: np.ndarray   # (m,) absolute ratios a_i

    @classmethod
    def from_y(cls, y: np.ndarray) -> "SampleVector":
        y = np.asarray(y, dtype=float)
        padded = np.concatenate(([0.0], y, [1.0]))
        signed = np.diff(padded)
        return cls(y=y, signed=signed, ratios=np.abs(signed))


@dataclass(frozen=True)
class RatioMoments:
    """Integrated ratio statistics for one (law, partition) pair.

    ``mean_log_a`` entries are -inf when the law puts positive mass on a
    zero ratio.  Standard errors are zero for exact provenances; for
    Monte Carlo they come with the estimator covariance matrices so that
    downstream intervals can propagate correlations.
    """

    mean_a: np.ndarray
    mean_log_a: np.ndarray
    mean_a_sq: np.ndarray
    cross: np.ndarray
    provenance: str
    n_samples: Optional[int] = None
    se_mean_a: np.ndarray = field(default=None)  # type: ignore[assignment]
    se_mean_log_a: np.ndarray = field(default=None)  # type: ignore[assignment]
    se_mean_a_sq: np.ndarray = field(default=None)  # type: ignore[assignment]
    a_cov: Optional[np.ndarray] = None
    log_cov: Optional[np.ndarray] = None

    def __post_init__(self):
        m = len(self.mean_a)
        for name in ("se_mean_a", "se_mean_log_a", "se_mean_a_sq"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, np.zeros(m))
        if not (np.all(self.mean_a >= -1e-12) and np.all(self.mean_a <= 1 + 1e-12)):
            raise ValueError("mean ratios must lie in [0, 1]")
        if self.cross.shape != (m, m):
            raise ValueError("cross matrix shape mismatch")

    @property
    def m(self) -> int:
        return len(self.mean_a)

    @property
    def exact(self) -> bool:
        return self.provenance in ("closed-form", "quadrature")

    @property
    def degenerate(self) -> bool:
        """True when some ratio vanishes with positive probability."""
        return bool(np.any(np.isneginf(self.mean_log_a)))


class HeightLaw:
    """Base class; subclasses fix m and how to draw y."""

    m: int

    def sample_y(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        u = rng.random((n, self.m - 1))
        y = self.y_from_uniforms(u)
        if y is None:
            return np.stack([self.sample_y(rng) for _ in range(n)])
        return y

    def y_from_uniforms(self, u: np.ndarray) -> Optional[np.ndarray]:
        """Inverse-CDF transform of iid uniforms, or None if unsupported.

        One uniform per component; engines rely on this to key node
        randomness by path.
        """
        return None

    def closed_form_moments(self, p: Partition) -> Optional[RatioMoments]:
        return None

    @property
    def continuous(self) -> bool:
        """True when the law has no atoms (so no boundary or zero-ratio mass)."""
        return True


def _beta_ppf(alpha: float, beta: float, u: np.ndarray) -> np.ndarray:
    if beta == 1.0:
        return u ** (1.0 / alpha)
    if alpha == 1.0:
        return 1.0 - (1.0 - u) ** (1.0 / beta)
    return special.betaincinv(alpha, beta, u)


@dataclass(frozen=True)
class Deterministic(HeightLaw):
    """Point mass at a fixed interior height vector."""

    y: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "y", tuple(float(v) for v in self.y))

    @property
    def m(self) -> int:  # type: ignore[override]
        return len(self.y) + 1

    @property
    def continuous(self) -> bool:
        return False

    def sample_y(self, rng: np.random.Generator) -> np.ndarray:
        return np.asarray(self.y, dtype=float)

    def y_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.y, dtype=float), u.shape).copy()

    def closed_form_moments(self, p: Partition) -> RatioMoments:
        a = SampleVector.from_y(np.asarray(self.y)).ratios
        with np.errstate(divide="ignore"):
            log_a = np.where(a > _ZERO_RATIO, np.log(np.maximum(a, _ZERO_RATIO)), -np.inf)
        return RatioMoments(
            mean_a=a.copy(),
            mean_log_a=log_a,
            mean_a_sq=a * a,
            cross=np.outer(a, a),
            provenance="closed-form",
        )


@dataclass(frozen=True)
class IidUniform(HeightLaw):
    """Independent uniform heights on [0, 1]."""

    m: int  # type: ignore[assignment]

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be at least 2")

    def sample_y(self, rng: np.random.Generator) -> np.ndarray:
        return rng.random(self.m - 1)

    def y_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return np.asarray(u, dtype=float)

    def closed_form_moments(self, p: Partition) -> RatioMoments:
        m = self.m
        if m == 2:
            mean = np.array([0.5, 0.5])
            logm = np.array([-1.0, -1.0])
            sq = np.array([1 / 3, 1 / 3])
            cross = np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]])
            return RatioMoments(mean, logm, sq, cross, "closed-form")
        mean = np.full(m, 1 / 3)
        mean[[0, -1]] = 0.5
        logm = np.full(m, -1.5)
        logm[[0, -1]] = -1.0
        sq = np.full(m, 1 / 6)
        sq[[0, -1]] = 1 / 3
        cross = np.outer(mean, mean)
        np.fill_diagonal(cross, sq)
        # Neighbours share one uniform: E[y|y'-y|] = 1/6 at the boundary,
        # E[|y'-y||y''-y'|] = 7/60 in the interior.
        for i in range(m - 1):
            boundary = i == 0 or i + 1 == m - 1
            val = 1 / 6 if boundary else 7 / 60
            cross[i, i + 1] = cross[i + 1, i] = val
        return RatioMoments(mean, logm, sq, cross, "closed-form")


@dataclass(frozen=True)
class IidBeta(HeightLaw):
    """Independent Beta(alpha, beta) heights."""

    m: int  # type: ignore[assignment]
    alpha: float
    beta: float

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be at least 2")
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("beta shapes must be positive")

    def sample_y(self, rng: np.random.Generator) -> np.ndarray:
        return rng.beta(self.alpha, self.beta, self.m - 1)

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.beta(self.alpha, self.beta, (n, self.m - 1))

    def y_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        return _beta_ppf(self.alpha, self.beta, np.asarray(u, dtype=float))

    def closed_form_moments(self, p: Partition) -> RatioMoments:
        return _beta_iid_moments(self.m, self.alpha, self.beta)


@dataclass(frozen=True)
class MirroredBeta(HeightLaw):
    """Three cells, y_1 ~ Beta(alpha, beta) and y_2 = 1 - y_1."""

    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise ValueError("beta shapes must be positive")

    @property
    def m(self) -> int:  # type: ignore[override]
        return 3

    def sample_y(self, rng: np.random.Generator) -> np.ndarray:
        y1 = rng.beta(self.alpha, self.beta)
        return np.array([y1, 1.0 - y1])

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        y1 = rng.beta(self.alpha, self.beta, n)
        return np.column_stack([y1, 1.0 - y1])

    def y_from_uniforms(self, u: np.ndarray) -> np.ndarray:
        y1 = _beta_ppf(self.alpha, self.beta, np.asarray(u, dtype=float)[..., 0])
        return np.stack([y1, 1.0 - y1], axis=-1)

    def closed_form_moments(self, p: Partition) -> RatioMoments:
        if (self.alpha, self.beta) == (2.0, 1.0):
            mean = np.array([2 / 3, 0.5, 2 / 3])
            logm = np.array([-0.5, -1.0, -0.5])
            sq = np.array([0.5, 1 / 3, 0.5])
            cross = np.array([
                [0.5, 3 / 8, 0.5],
                [3 / 8, 1 / 3, 3 / 8],
                [0.5, 3 / 8, 0.5],
            ])
            return RatioMoments(mean, logm, sq, cross, "closed-form")
        return _mirrored_beta_moments(self.alpha, self.beta)


@dataclass(frozen=True)
class CustomSampler(HeightLaw):
    """User-supplied joint sampler; declared properties are spot-checked."""

    m: int  # type: ignore[assignment]
    sampler: Callable[[np.random.Generator], np.ndarray]
    declares_continuous: bool = True

    def sample_y(self, rng: np.random.Generator) -> np.ndarray:
        y = np.asarray(self.sampler(rng), dtype=float)
        if y.shape != (self.m - 1,):
            raise ValueError(f"sampler returned shape {y.shape}, wanted {(self.m - 1,)}")
        return y

    @property
    def continuous(self) -> bool:
        return self.declares_continuous


# --------------------------------------------------------------------------
# quadrature backends


def _beta_pdf(alpha: float, beta: float):
    lognorm = special.betaln(alpha, beta)

    def f(x: float) -> float:
        if x <= 0.0 or x >= 1.0:
            return 0.0
        return math.exp((alpha - 1) * math.log(x) + (beta - 1) * math.log1p(-x) - lognorm)

    return f


def _abs_diff_moments(alpha: float, beta: float) -> tuple[float, float]:
    """(E|X-Y|, E log|X-Y|) for iid Beta(alpha, beta)."""
    f = _beta_pdf(alpha, beta)

    def inner(g):
        def outer_fn(x):
            val, _ = integrate.quad(lambda y: f(y) * g(x - y), 0.0, x, limit=200)
            return f(x) * val
        val, _ = integrate.quad(outer_fn, 0.0, 1.0, limit=200)
        return 2.0 * val

    return inner(lambda d: d), inner(lambda d: math.log(d) if d > 0 else 0.0)


def _beta_iid_moments(m: int, alpha: float, beta: float) -> RatioMoments:
    ab = alpha + beta
    mean_lo = alpha / ab                       # a_0 = y_1
    mean_hi = beta / ab                        # a_{m-1} = 1 - y_{m-1}
    sq_lo = alpha * (alpha + 1) / (ab * (ab + 1))
    sq_hi = beta * (beta + 1) / (ab * (ab + 1))
    log_lo = special.digamma(alpha) - special.digamma(ab)
    log_hi = special.digamma(beta) - special.digamma(ab)
    if m == 2:
        cross01 = alpha * beta / (ab * (ab + 1))   # E[y(1-y)]
        return RatioMoments(
            mean_a=np.array([mean_lo, mean_hi]),
            mean_log_a=np.array([log_lo, log_hi]),
            mean_a_sq=np.array([sq_lo, sq_hi]),
            cross=np.array([[sq_lo, cross01], [cross01, sq_hi]]),
            provenance="closed-form",
        )

    mean_mid, log_mid = _abs_diff_moments(alpha, beta)
    var = alpha * beta / (ab * ab * (ab + 1))
    sq_mid = 2.0 * var                          # E(X-Y)^2 for iid X, Y

    mean = np.full(m, mean_mid)
    mean[0], mean[-1] = mean_lo, mean_hi
    logm = np.full(m, log_mid)
    logm[0], logm[-1] = log_lo, log_hi
    sq = np.full(m, sq_mid)
    sq[0], sq[-1] = sq_lo, sq_hi

    cross = np.outer(mean, mean)
    np.fill_diagonal(cross, sq)
    f = _beta_pdf(alpha, beta)

    def cond_absdiff(y: float) -> float:
        val, _ = integrate.quad(lambda x: f(x) * abs(x - y), 0.0, 1.0,
                                points=[y], limit=200)
        return val

    c_first, _ = integrate.dblquad(lambda y, x: f(x) * f(y) * x * abs(y - x),
                                   0, 1, 0, 1)
    c_last, _ = integrate.dblquad(lambda y, x: f(x) * f(y) * (1 - y) * abs(y - x),
                                  0, 1, 0, 1)
    c_mid, _ = integrate.quad(lambda y: f(y) * cond_absdiff(y) ** 2, 0.0, 1.0, limit=200)
    for i in range(m - 1):
        if i == 0:
            val = c_first
        elif i + 1 == m - 1:
            val = c_last
        else:
            val = c_mid
        cross[i, i + 1] = cross[i + 1, i] = val
    return RatioMoments(mean, logm, sq, cross, "quadrature")


def _mirrored_beta_moments(alpha: float, beta: float) -> RatioMoments:
    ab = alpha + beta
    f = _beta_pdf(alpha, beta)
    mean0 = alpha / ab
    sq0 = alpha * (alpha + 1) / (ab * (ab + 1))
    log0 = special.digamma(alpha) - special.digamma(ab)

    def q(g):
        val, _ = integrate.quad(lambda x: f(x) * g(x), 0.0, 1.0, points=[0.5], limit=200)
        return val

    mean1 = q(lambda x: abs(1 - 2 * x))
    sq1 = q(lambda x: (1 - 2 * x) ** 2)
    log1 = q(lambda x: math.log(abs(1 - 2 * x)) if x != 0.5 else 0.0)
    c01 = q(lambda x: x * abs(1 - 2 * x))

    mean = np.array([mean0, mean1, mean0])
    logm = np.array([log0, log1, log0])
    sq = np.array([sq0, sq1, sq0])
    cross = np.array([
        [sq0, c01, sq0],
        [c01, sq1, c01],
        [sq0, c01, sq0],
    ])
    return RatioMoments(mean, logm, sq, cross, "quadrature")


# --------------------------------------------------------------------------
# public operations


def sample(law: HeightLaw, rng: np.random.Generator) -> SampleVector:
    """One joint draw from the law; deterministic given the rng state."""
    return SampleVector.from_y(law.sample_y(rng))


def moments(
    law: HeightLaw,
    p: Partition,
    *,
    samples: int = 1_000_000,
    seed: int = 0,
    method: str = "auto",
) -> RatioMoments:
    """Ratio moments for (law, p); exact when the family admits it.

    method "auto" prefers closed forms / quadrature and falls back to
    Monte Carlo; "monte-carlo" forces sampling (useful for cross-checks).
    """
    if law.m != p.m:
        raise ValueError(f"law has m={law.m} but partition has m={p.m}")
    if method not in ("auto", "monte-carlo"):
        raise ConfigurationError(f"unknown moments method {method!r}")
    if method == "auto":
        exact = law.closed_form_moments(p)
        if exact is not None:
            return exact
    if samples < _MIN_MC_SAMPLES:
        raise ConfigurationError(f"Monte Carlo needs at least {_MIN_MC_SAMPLES} samples")
    return _mc_moments(law, samples, seed)


def _mc_moments(law: HeightLaw, samples: int, seed: int) -> RatioMoments:
    rng = np.random.default_rng(seed)
    m = law.m
    sum_a = np.zeros(m)
    sum_sq = np.zeros(m)
    sum_cross = np.zeros((m, m))
    sum_log = np.zeros(m)
    sum_log_sq = np.zeros(m)
    sum_log_cross = np.zeros((m, m))
    saw_zero = np.zeros(m, dtype=bool)
    done = 0
    while done < samples:
        n = min(samples - done, 262_144)
        y = law.sample_batch(rng, n)
        padded = np.concatenate([np.zeros((n, 1)), y, np.ones((n, 1))], axis=1)
        a = np.abs(np.diff(padded, axis=1))
        sum_a += a.sum(axis=0)
        sum_sq += (a * a).sum(axis=0)
        sum_cross += a.T @ a
        zero = a < _ZERO_RATIO
        saw_zero |= zero.any(axis=0)
        with np.errstate(divide="ignore"):
            la = np.where(zero, 0.0, np.log(np.maximum(a, _ZERO_RATIO)))
        sum_log += la.sum(axis=0)
        sum_log_sq += (la * la).sum(axis=0)
        sum_log_cross += la.T @ la
        done += n

    n = float(samples)
    mean_a = sum_a / n
    mean_sq = sum_sq / n
    cross = sum_cross / n
    mean_log = np.where(saw_zero, -np.inf, sum_log / n)

    var_a = np.maximum(mean_sq - mean_a**2, 0.0)
    se_a = np.sqrt(var_a / n)
    a_cov = (cross - np.outer(mean_a, mean_a)) / n
    if saw_zero.any():
        se_log = np.where(saw_zero, np.inf, 0.0)
        log_cov = None
    else:
        ml = sum_log / n
        var_log = np.maximum(sum_log_sq / n - ml**2, 0.0)
        se_log = np.sqrt(var_log / n)
        log_cov = (sum_log_cross / n - np.outer(ml, ml)) / n
    # se of the second-moment estimate needs E a^4; bound it by E a^2
    # since a <= 1, which is conservative and cheap.
    se_sq = np.sqrt(np.maximum(mean_sq - mean_sq**2, 0.0) / n)
    return RatioMoments(
        mean_a=mean_a,
        mean_log_a=mean_log,
        mean_a_sq=mean_sq,
        cross=cross,
        provenance="monte-carlo",
        n_samples=samples,
        se_mean_a=se_a,
        se_mean_log_a=se_log,
        se_mean_a_sq=se_sq,
        a_cov=a_cov,
        log_cov=log_cov,
    )


@dataclass(frozen=True)
class LawReport:
    ok: bool
    flags: tuple[str, ...]
    messages: tuple[str, ...]


def validate(law: HeightLaw, p: Partition) -> LawReport:
    """Admissibility gate: arity, boundary atoms, the affine diagonal.

    Zero ratios (flat cells) are legal but flagged "degenerate-height";
    two-cell partitions are flagged "trivial-regime".
    """
    flags: list[str] = []
    messages: list[str] = []
    ok = True
    if law.m != p.m:
        return LawReport(False, (), (f"law arity m={law.m} does not match partition m={p.m}",))
    if p.trivial_regime:
        flags.append("trivial-regime")

    if isinstance(law, Deterministic):
        y = np.asarray(law.y, dtype=float)
        if np.any((y <= 0.0) | (y >= 1.0)):
            ok = False
            messages.append("deterministic heights must lie strictly inside (0, 1)")
        interior = np.asarray(p.breakpoints[1:-1], dtype=float)
        if ok and np.array_equal(y, interior):
            ok = False
            messages.append("heights equal the breakpoints: the limit is the identity line")
        if ok:
            a = SampleVector.from_y(y).ratios
            if np.any(a == 0.0):
                flags.append("degenerate-height")
    elif isinstance(law, CustomSampler):
        rng = np.random.default_rng(0)
        interior = np.asarray(p.breakpoints[1:-1], dtype=float)
        diag_hits = 0
        zero_seen = False
        for _ in range(_SPOT_CHECK_DRAWS):
            y = law.sample_y(rng)
            if np.any((y < 0.0) | (y > 1.0)):
                ok = False
                messages.append("sampler produced a height outside [0, 1]")
                break
            if np.any((y == 0.0) | (y == 1.0)):
                ok = False
                messages.append("sampler produced a boundary atom (height exactly 0 or 1)")
                break
            if np.array_equal(y, interior):
                diag_hits += 1
            if np.any(SampleVector.from_y(y).ratios == 0.0):
                zero_seen = True
        if ok and diag_hits == _SPOT_CHECK_DRAWS:
            ok = False
            messages.append("sampler is a point mass on the breakpoints (identity line)")
        if ok and zero_seen:
            flags.append("degenerate-height")
    # Continuous parametric families carry no atoms by construction.

    return LawReport(ok, tuple(flags), tuple(messages))


def okamoto_law(alpha: float) -> Deterministic:
    """Classical one-parameter family on thirds: heights (alpha, 1 - alpha)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    return Deterministic((alpha, 1.0 - alpha))
