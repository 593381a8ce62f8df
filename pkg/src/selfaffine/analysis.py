"""Covering analysis: stopping families, martingale checks, box counts.

The finest cell width ``delta = min_i l_i`` sets the scale ladder
``delta^n``.  The stopping family Q_n collects the minimal words whose
cell width first drops to ``delta^n`` or below; it is prefix-free,
exhaustive, and its widths sum to 1.  On a sampled realization the
weighted sums

* ``X_n = sum_{Q_n} h_w * l_w^(s-1)``   (stopping family)
* ``Y_n = sum_{level n} h_w * l_w^(s-1)``   (full level)

are the covering martingale and its level conditioning; at the solved
dimension s the weights ``E(a_k) l_k^(s-1)`` form a probability vector,
E Y_n = 1, and the variance-contraction factor
``alpha = sum_k E(a_k^2) l_k^(2s-2)`` is below 1.

Box counts use the origin-anchored half-open grid with the last cell
closed at 1.  Two counting objects coexist deliberately: the polyline
graph (regression estimator) and the Q_n rectangle cover (the object
the sandwich bounds are proved for).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (
    ConfigurationError,
    FitError,
    InsufficientDepthError,
    ResourceLimitError,
)
from .heightlaw import HeightLaw, RatioMoments
from .realization import GraphApprox, RealizationTree, graph_points
from .streams import child_codes, node_uniforms
from .symbolic import Partition, level_widths

__all__ = [
    "StoppingSet",
    "MartingaleTrace",
    "MartingaleDiagnostics",
    "BoxCountResult",
    "SandwichResult",
    "DriftProbe",
    "build_stopping_set",
    "required_depth",
    "partition_identity_check",
    "stopping_weights",
    "martingale_trace",
    "martingale_diagnostics",
    "box_count",
    "estimate_dimension",
    "stopping_cover",
    "sandwich_check",
    "drift_probe",
]

_BAND_EPS = 1e-9          # cushion so exact powers of delta land in their band
_MIN_DELTA = 1e-9         # finest permitted box-counting scale
_DEFAULT_MAX_WORDS = 2_000_000
_DEFAULT_MAX_CELLS = 50_000_000


def _bands(log_widths: np.ndarray, delta: float) -> np.ndarray:
    """Ladder index: largest n with width <= delta**n (0 for width 1)."""
    return np.floor(log_widths / math.log(delta) + _BAND_EPS).astype(np.int64)


# ---------------------------------------------------------------------------
# stopping families


@dataclass(frozen=True)
class StoppingSet:
    """Minimal words whose width first reaches delta**n.

    ``digits`` is right-padded with -1; widths are exact cumulative
    products in emission order (breadth-first).
    """

    n: int
    delta: float
    digits: np.ndarray        # (N, L) int16, -1 padded
    word_lengths: np.ndarray  # (N,) int32
    widths: np.ndarray        # (N,) float
    log_widths: np.ndarray    # (N,) float

    @property
    def size(self) -> int:
        return int(self.widths.size)

    @property
    def max_word_length(self) -> int:
        return int(self.word_lengths.max()) if self.size else 0

    @property
    def words(self) -> list[tuple[int, ...]]:
        return [
            tuple(int(d) for d in row[:k])
            for row, k in zip(self.digits, self.word_lengths)
        ]

    def kraft_residual(self) -> float:
        return abs(float(self.widths.sum()) - 1.0)


_SSET_CACHE: dict[tuple, StoppingSet] = {}


def build_stopping_set(
    p: Partition,
    n: int,
    *,
    max_words: int = _DEFAULT_MAX_WORDS,
) -> StoppingSet:
    """Breadth-first expansion stopping at the first width <= delta**n."""
    if n < 1:
        raise ValueError("n must be at least 1")
    key = (p.breakpoints, n)
    cached = _SSET_CACHE.get(key)
    if cached is not None and cached.size <= max_words:
        return cached

    m = p.m
    delta = p.min_length
    lens = p.lengths_array
    log_lens = np.log(lens)

    digits = np.arange(m, dtype=np.int16)[:, None]
    widths = lens.copy()
    log_w = log_lens.copy()
    done_digits: list[np.ndarray] = []
    done_w: list[np.ndarray] = []
    done_logw: list[np.ndarray] = []
    done_len: list[np.ndarray] = []
    total_done = 0
    length = 1
    while digits.size:
        stop = _bands(log_w, delta) >= n
        if stop.any():
            done_digits.append(digits[stop])
            done_w.append(widths[stop])
            done_logw.append(log_w[stop])
            done_len.append(np.full(int(stop.sum()), length, dtype=np.int32))
            total_done += int(stop.sum())
        live = ~stop
        k = int(live.sum())
        if total_done + k * m > max_words:
            raise ResourceLimitError(
                f"stopping family for n={n} exceeds the word budget {max_words}"
            )
        if k == 0:
            break
        parent = digits[live]
        digits = np.concatenate(
            [
                np.repeat(parent, m, axis=0),
                np.tile(np.arange(m, dtype=np.int16), k)[:, None],
            ],
            axis=1,
        )
        widths = np.repeat(widths[live], m) * np.tile(lens, k)
        log_w = np.repeat(log_w[live], m) + np.tile(log_lens, k)
        length += 1

    max_len = max(arr.shape[1] for arr in done_digits)
    padded = [
        np.pad(arr, ((0, 0), (0, max_len - arr.shape[1])), constant_values=-1)
        for arr in done_digits
    ]
    sset = StoppingSet(
        n=n,
        delta=delta,
        digits=np.concatenate(padded, axis=0),
        word_lengths=np.concatenate(done_len),
        widths=np.concatenate(done_w),
        log_widths=np.concatenate(done_logw),
    )
    if len(_SSET_CACHE) < 64:
        _SSET_CACHE[key] = sset
    return sset


def required_depth(p: Partition, n: int) -> int:
    """A-priori tree depth that always contains Q_n (often one above the
    exact maximum word length)."""
    return math.ceil((n + 1) * math.log(p.min_length) / math.log(p.max_length))


def partition_identity_check(sset: StoppingSet, weights: Sequence[float]) -> float:
    """|sum over the family of per-word weight products - 1|.

    With the cell lengths this is the Kraft identity; with the solved
    stopping weights it certifies the martingale normalization.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or np.any(w < 0):
        raise ValueError("weights must be a nonnegative vector")
    safe = np.where(sset.digits >= 0, sset.digits, 0)
    factors = np.where(sset.digits >= 0, w[safe], 1.0)
    return abs(float(factors.prod(axis=1).sum()) - 1.0)


def stopping_weights(mom: RatioMoments, p: Partition, s: float) -> np.ndarray:
    """p_k = E(a_k) l_k^(s-1); a probability vector exactly at the root s."""
    return mom.mean_a * p.lengths_array ** (s - 1.0)


# ---------------------------------------------------------------------------
# martingale traces on materialized trees


@dataclass(frozen=True)
class MartingaleTrace:
    """X_n / Y_n along one realization, indexed 0..n_max."""

    s: float
    ns: np.ndarray
    stopping_sum: np.ndarray   # X_n over Q_n
    level_sum: np.ndarray      # Y_n over the full level
    alpha: Optional[float] = None

    @property
    def gap(self) -> np.ndarray:
        return self.stopping_sum - self.level_sum

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "n": [int(v) for v in self.ns],
            "stopping_sum": [float(v) for v in self.stopping_sum],
            "level_sum": [float(v) for v in self.level_sum],
            "alpha": self.alpha,
        }


def _word_indices(digits: np.ndarray, L: int, m: int) -> np.ndarray:
    """Base-m value of each length-L row; rows must have length == L."""
    sub = digits[:, :L].astype(np.int64)
    idx = np.zeros(sub.shape[0], dtype=np.int64)
    for j in range(L):
        idx = idx * m + sub[:, j]
    return idx


def martingale_trace(
    tree: RealizationTree,
    s: float,
    n_max: int,
    moments: Optional[RatioMoments] = None,
    *,
    max_words: int = _DEFAULT_MAX_WORDS,
) -> MartingaleTrace:
    """Evaluate X_n and Y_n for n = 0..n_max on one materialized tree.

    The tree must be deep enough to contain every Q_n word; otherwise
    InsufficientDepthError names the depth that would suffice.
    """
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    p = tree.partition
    m = p.m
    ssets = [build_stopping_set(p, n, max_words=max_words) for n in range(1, n_max + 1)]
    needed = max(ss.max_word_length for ss in ssets)
    if needed > tree.depth:
        # band steps by at most 1, so needed >= n_max and this also
        # guarantees the level sums below exist
        raise InsufficientDepthError(
            f"stopping family for n={n_max} reaches word length {needed}, "
            f"but the tree has depth {tree.depth}",
            required_depth=needed,
        )

    X = np.ones(n_max + 1)
    Y = np.ones(n_max + 1)
    for n, ss in zip(range(1, n_max + 1), ssets):
        total = 0.0
        for L in np.unique(ss.word_lengths):
            rows = ss.word_lengths == L
            idx = _word_indices(ss.digits[rows], int(L), m)
            h = tree.heights(int(L))[idx]
            total += float(np.sum(h * np.exp((s - 1.0) * ss.log_widths[rows])))
        X[n] = total
    for n in range(1, n_max + 1):
        Y[n] = float(np.sum(tree.heights(n) * level_widths(p, n) ** (s - 1.0)))

    alpha = None
    if moments is not None:
        alpha = float(np.sum(moments.mean_a_sq * p.lengths_array ** (2.0 * (s - 1.0))))
    return MartingaleTrace(s, np.arange(n_max + 1), X, Y, alpha)


# ---------------------------------------------------------------------------
# multi-tree diagnostics engine

# The expansion skeleton (which words exist, their bands, their widths)
# is deterministic given the partition, so it is built once and replayed
# per seed with keyed uniforms.


@dataclass(frozen=True)
class _SkeletonStep:
    exp_idx: np.ndarray     # rows of the previous step that expand
    par_codes: np.ndarray   # their node codes (uint64)
    log_l: np.ndarray       # child log widths
    band: np.ndarray        # child band indices
    in_q: np.ndarray        # child enters Q_{band} here


@dataclass(frozen=True)
class _Skeleton:
    steps: tuple[_SkeletonStep, ...]
    n_max: int
    total_rows: int


_SKEL_CACHE: dict[tuple, _Skeleton] = {}


def _build_skeleton(p: Partition, n_max: int, max_words: int) -> _Skeleton:
    key = (p.breakpoints, n_max)
    cached = _SKEL_CACHE.get(key)
    if cached is not None and cached.total_rows <= max_words:
        return cached
    m = p.m
    delta = p.min_length
    log_lens = np.log(p.lengths_array)

    codes = np.zeros(1, dtype=np.uint64)
    log_l = np.zeros(1)
    band = np.zeros(1, dtype=np.int64)
    expand = band < n_max
    steps: list[_SkeletonStep] = []
    total = 1
    while expand.any():
        exp_idx = np.flatnonzero(expand).astype(np.int64)
        par_codes = codes[exp_idx]
        k = exp_idx.size
        if total + k * m > max_words:
            raise ResourceLimitError(
                f"diagnostics skeleton for n={n_max} exceeds {max_words} words"
            )
        child_log = np.repeat(log_l[exp_idx], m) + np.tile(log_lens, k)
        child_band = _bands(child_log, delta)
        parent_band = np.repeat(band[exp_idx], m)
        in_q = child_band > parent_band
        steps.append(_SkeletonStep(exp_idx, par_codes, child_log, child_band, in_q))
        codes = child_codes(par_codes, m).ravel()
        log_l = child_log
        band = child_band
        expand = band < n_max
        total += k * m
    skel = _Skeleton(tuple(steps), n_max, total)
    if skel.total_rows <= 4_000_000 and len(_SKEL_CACHE) < 8:
        _SKEL_CACHE[key] = skel
    return skel


def _replay_tree(
    skel: _Skeleton,
    law: HeightLaw,
    m: int,
    seed: int,
    weights: list[np.ndarray],
    n_max: int,
) -> tuple[np.ndarray, np.ndarray]:
    """One seed's (X, Y) arrays, indices 0..n_max."""
    X = np.zeros(n_max + 1)
    Y = np.zeros(n_max + 1)
    X[0] = Y[0] = 1.0
    h_prev = np.ones(1)
    for L, st in enumerate(skel.steps, start=1):
        u = node_uniforms(seed, st.par_codes, m - 1)
        y = law.y_from_uniforms(u)
        k = st.par_codes.size
        ypad = np.concatenate([np.zeros((k, 1)), y, np.ones((k, 1))], axis=1)
        a = np.abs(np.diff(ypad, axis=1))
        h = (h_prev[st.exp_idx][:, None] * a).ravel()
        hw = h * weights[L - 1]
        if L <= n_max:
            Y[L] = hw.sum()
        if st.in_q.any():
            X += np.bincount(
                st.band[st.in_q], weights=hw[st.in_q], minlength=n_max + 1
            )[: n_max + 1]
        h_prev = h
    return X, Y


@dataclass(frozen=True)
class MartingaleDiagnostics:
    s: float
    alpha: float
    c_level: float            # E[(sum a_i l_i^(s-1))^2], level L2 increment
    c_gap: float              # cross-ratio constant / (1 - alpha), gap bound
    n_trees: int
    ns: np.ndarray
    y_mean: np.ndarray
    y_se: np.ndarray
    y_sq_mean: np.ndarray
    y_sq_se: np.ndarray
    y_sq_bound: np.ndarray
    gap_sq_mean: np.ndarray   # index 0 unused (0.0)
    gap_sq_se: np.ndarray
    gap_sq_bound: np.ndarray
    fitted_decay_rate: Optional[float]
    checks: dict[str, bool]
    failures: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "alpha": self.alpha,
            "n_trees": self.n_trees,
            "n": [int(v) for v in self.ns],
            "y_mean": [float(v) for v in self.y_mean],
            "y_se": [float(v) for v in self.y_se],
            "y_sq_mean": [float(v) for v in self.y_sq_mean],
            "y_sq_bound": [float(v) for v in self.y_sq_bound],
            "gap_sq_mean": [float(v) for v in self.gap_sq_mean],
            "gap_sq_bound": [float(v) for v in self.gap_sq_bound],
            "fitted_decay_rate": self.fitted_decay_rate,
            "checks": dict(self.checks),
            "failures": list(self.failures),
        }


def martingale_diagnostics(
    law: HeightLaw,
    p: Partition,
    s: float,
    moments: RatioMoments,
    *,
    n_max: int = 8,
    n_trees: int = 2000,
    seed: int = 0,
    band: float = 4.0,
    rate_slack: float = 0.05,
    max_words: int = 6_000_000,
) -> MartingaleDiagnostics:
    """Sample many realizations and test the covering-martingale laws.

    Checks (all at ``band`` standard errors unless exact):
    level means stay at 1, level second moments respect the
    alpha-geometric bound, and the X-Y gap's mean square decays no
    slower than alpha.
    """
    if n_max < 1 or n_trees < 2:
        raise ConfigurationError("need n_max >= 1 and n_trees >= 2")
    if law.m != p.m or moments.m != p.m:
        raise ConfigurationError("law/moments/partition arity mismatch")
    if law.y_from_uniforms(np.zeros((1, p.m - 1))) is None:
        raise ConfigurationError(
            "diagnostics engine needs an inverse-CDF family (custom samplers unsupported)"
        )
    m = p.m
    lens = p.lengths_array
    alpha = float(np.sum(moments.mean_a_sq * lens ** (2.0 * (s - 1.0))))
    wvec = lens ** (s - 1.0)
    c_level = float(wvec @ moments.cross @ wvec)
    ratio = moments.cross / np.outer(moments.mean_a, moments.mean_a)
    c_gap = float(np.max(ratio) / (1.0 - alpha)) if alpha < 1.0 else float("inf")

    skel = _build_skeleton(p, n_max, max_words)
    weights = [np.exp((s - 1.0) * st.log_l) for st in skel.steps]
    seeds = np.random.SeedSequence(seed).generate_state(n_trees, np.uint64)

    Xs = np.empty((n_trees, n_max + 1))
    Ys = np.empty((n_trees, n_max + 1))
    for t in range(n_trees):
        Xs[t], Ys[t] = _replay_tree(skel, law, m, int(seeds[t]), weights, n_max)

    ns = np.arange(n_max + 1)
    y_mean = Ys.mean(axis=0)
    y_se = Ys.std(axis=0, ddof=1) / math.sqrt(n_trees)
    ysq = Ys**2
    y_sq_mean = ysq.mean(axis=0)
    y_sq_se = ysq.std(axis=0, ddof=1) / math.sqrt(n_trees)
    y_sq_bound = np.array(
        [1.0 + c_level * sum(alpha**k for k in range(n)) for n in range(n_max + 1)]
    )
    gap = Xs - Ys
    gsq = gap**2
    gap_sq_mean = gsq.mean(axis=0)
    gap_sq_se = gsq.std(axis=0, ddof=1) / math.sqrt(n_trees)
    gap_sq_bound = np.array([c_gap * alpha**n for n in range(n_max + 1)])
    gap_sq_bound[0] = 0.0

    checks: dict[str, bool] = {}
    failures: list[str] = []

    # absolute cushions: the solver leaves |g(s)| <= 1e-12, which drifts
    # E Y_n by ~n*1e-12 even for exact laws, and exactly-equal X/Y pairs
    # differ by summation order at the 1e-16 scale
    exact_tol = 1e-9
    noise_floor = 1e-24

    ok = True
    for n in range(1, n_max + 1):
        tol = band * y_se[n] + exact_tol
        if abs(y_mean[n] - 1.0) > tol:
            ok = False
            failures.append(
                f"level mean drift at n={n}: {y_mean[n]:.6f} vs 1 (band {tol:.2e})"
            )
    checks["level-mean-within-band"] = ok

    ok = alpha < 1.0
    if not ok:
        failures.append(f"variance factor alpha={alpha:.4f} is not below 1")
    checks["alpha-contracting"] = ok

    ok = True
    if alpha < 1.0:
        for n in range(1, n_max + 1):
            if y_sq_mean[n] > y_sq_bound[n] + band * y_sq_se[n] + exact_tol:
                ok = False
                failures.append(
                    f"level second moment at n={n}: {y_sq_mean[n]:.4f} "
                    f"over bound {y_sq_bound[n]:.4f}"
                )
    checks["second-moment-bounded"] = ok

    ok = True
    if alpha < 1.0:
        for n in range(1, n_max + 1):
            if gap_sq_mean[n] > gap_sq_bound[n] + band * gap_sq_se[n] + exact_tol:
                ok = False
                failures.append(
                    f"gap mean square at n={n}: {gap_sq_mean[n]:.3e} "
                    f"over bound {gap_sq_bound[n]:.3e}"
                )
    checks["gap-within-bound"] = ok

    positive = gap_sq_mean[1:] > noise_floor
    rate: Optional[float] = None
    ok = True
    if positive.sum() >= 2:
        xs = ns[1:][positive].astype(float)
        ys_log = np.log(gap_sq_mean[1:][positive])
        slope = np.polyfit(xs, ys_log, 1)[0]
        rate = float(np.exp(slope))
        if alpha < 1.0 and rate > alpha + rate_slack:
            ok = False
            failures.append(
                f"gap mean-square decay rate {rate:.4f} exceeds alpha+{rate_slack}={alpha + rate_slack:.4f}"
            )
    checks["gap-decay-rate"] = ok

    return MartingaleDiagnostics(
        s=s,
        alpha=alpha,
        c_level=c_level,
        c_gap=c_gap,
        n_trees=n_trees,
        ns=ns,
        y_mean=y_mean,
        y_se=y_se,
        y_sq_mean=y_sq_mean,
        y_sq_se=y_sq_se,
        y_sq_bound=y_sq_bound,
        gap_sq_mean=gap_sq_mean,
        gap_sq_se=gap_sq_se,
        gap_sq_bound=gap_sq_bound,
        fitted_decay_rate=rate,
        checks=checks,
        failures=tuple(failures),
    )


# ---------------------------------------------------------------------------
# box counting


def _grid_cells(delta: float) -> int:
    return int(math.ceil(1.0 / delta - 1e-12))


def _cell_index(v: np.ndarray, delta: float, ncells: int) -> np.ndarray:
    return np.minimum(np.floor(v / delta).astype(np.int64), ncells - 1).clip(0)


def _count_column_intervals(
    col: np.ndarray, j0: np.ndarray, j1: np.ndarray, ncells: int
) -> int:
    """Union size of integer row intervals grouped by column."""
    if col.size == 0:
        return 0
    base = col.astype(np.int64) * (np.int64(ncells) + 1)
    a = j0.astype(np.int64) + base
    b = j1.astype(np.int64) + base
    order = np.argsort(a, kind="stable")
    a, b = a[order], b[order]
    running = np.concatenate(([np.int64(-(2**62))], np.maximum.accumulate(b)[:-1]))
    add = np.maximum(0, b - np.maximum(a - 1, running))
    return int(add.sum())


def _explode_columns(i0: np.ndarray, i1: np.ndarray, max_cells: int):
    ncols = (i1 - i0 + 1).astype(np.int64)
    total = int(ncols.sum())
    if total > max_cells:
        raise ResourceLimitError(f"box count would touch {total} column spans")
    owner = np.repeat(np.arange(i0.size, dtype=np.int64), ncols)
    starts = np.concatenate(([0], np.cumsum(ncols)[:-1]))
    offset = np.arange(total, dtype=np.int64) - np.repeat(starts, ncols)
    return owner, i0[owner] + offset


RectArrays = tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


def box_count(
    obj: Union[GraphApprox, RectArrays, np.ndarray],
    delta: float,
    *,
    max_cells: int = _DEFAULT_MAX_CELLS,
) -> int:
    """Grid cells of side ``delta`` intersecting the object.

    The object is either a GraphApprox (its polyline is counted) or a
    rectangle family given as four arrays (x0, x1, y0, y1) or an (N, 4)
    array.  Cells are half-open, origin-anchored, last cell closed at 1.
    """
    if delta >= 1.0:
        return 1
    if delta < _MIN_DELTA:
        raise ValueError(f"delta below the supported floor {_MIN_DELTA}")
    ncells = _grid_cells(delta)
    if isinstance(obj, GraphApprox):
        return _count_polyline(obj, delta, ncells, max_cells)
    if isinstance(obj, np.ndarray):
        if obj.ndim != 2 or obj.shape[1] != 4:
            raise ValueError("rectangle array must have shape (N, 4)")
        rx0, rx1, ry0, ry1 = (obj[:, i] for i in range(4))
    else:
        rx0, rx1, ry0, ry1 = (np.asarray(a, dtype=float) for a in obj)
    if np.any(rx1 < rx0) or np.any(ry1 < ry0):
        raise ValueError("rectangles must satisfy x0 <= x1 and y0 <= y1")
    i0 = _cell_index(rx0, delta, ncells)
    i1 = _cell_index(rx1, delta, ncells)
    owner, cols = _explode_columns(i0, i1, max_cells)
    j0 = _cell_index(ry0, delta, ncells)[owner]
    j1 = _cell_index(ry1, delta, ncells)[owner]
    return _count_column_intervals(cols, j0, j1, ncells)


def _count_polyline(g: GraphApprox, delta: float, ncells: int, max_cells: int) -> int:
    x0, y0 = g.x[:-1], g.y[:-1]
    x1, y1 = g.x[1:], g.y[1:]
    i0 = _cell_index(x0, delta, ncells)
    i1 = _cell_index(x1, delta, ncells)
    owner, cols = _explode_columns(i0, i1, max_cells)
    sx0, sy0 = x0[owner], y0[owner]
    sx1, sy1 = x1[owner], y1[owner]
    with np.errstate(invalid="ignore", divide="ignore"):
        slope = np.where(sx1 > sx0, (sy1 - sy0) / (sx1 - sx0), 0.0)
    # Per column, the segment's y-range over the closed x-span clipped to
    # the column; column-boundary points count in both adjacent columns.
    xa = np.maximum(sx0, cols * delta)
    xb = np.minimum(sx1, (cols + 1) * delta)
    ya = sy0 + slope * (xa - sx0)
    yb = sy0 + slope * (xb - sx0)
    lo = np.clip(np.minimum(ya, yb), 0.0, 1.0)
    hi = np.clip(np.maximum(ya, yb), 0.0, 1.0)
    j0 = _cell_index(lo, delta, ncells)
    j1 = _cell_index(hi, delta, ncells)
    return _count_column_intervals(cols, j0, j1, ncells)


@dataclass(frozen=True)
class BoxCountResult:
    scales: np.ndarray
    counts: np.ndarray
    slope: float
    intercept: float
    used: np.ndarray          # mask of scales entering the fit
    level: int

    def to_dict(self) -> dict:
        return {
            "scales": [float(v) for v in self.scales],
            "counts": [int(v) for v in self.counts],
            "slope": self.slope,
            "intercept": self.intercept,
            "used": [bool(v) for v in self.used],
            "level": self.level,
        }


def estimate_dimension(
    tree: RealizationTree,
    *,
    scales: Optional[Sequence[float]] = None,
    drop_coarsest: int = 2,
    min_scales: int = 3,
    max_cells: int = _DEFAULT_MAX_CELLS,
) -> BoxCountResult:
    """Regression slope of log N against log 1/delta on the graph polyline.

    The default ladder is delta = (min cell width)^n; scales finer than
    the tree's level width are excluded automatically, then the coarsest
    ``drop_coarsest`` scales are dropped from the fit.
    """
    p = tree.partition
    g = graph_points(tree)
    width_floor = p.max_length**tree.depth
    if scales is None:
        delta = p.min_length
        cand = []
        n = 1
        while True:
            sc = delta**n
            if sc < _MIN_DELTA:
                break
            cand.append(sc)
            n += 1
        scales_arr = np.asarray(cand)
    else:
        scales_arr = np.asarray(sorted(set(float(s) for s in scales), reverse=True))
        if np.any(scales_arr >= 1.0) or np.any(scales_arr < _MIN_DELTA):
            raise ValueError("scales must lie in [1e-9, 1)")
    valid = scales_arr >= width_floor * (1.0 - 1e-12)
    scales_arr = scales_arr[valid]
    if scales_arr.size < min_scales + drop_coarsest:
        raise FitError(
            f"only {scales_arr.size} usable scales; need "
            f"{min_scales + drop_coarsest} (tree too shallow for the ladder)"
        )
    counts = np.array([box_count(g, float(sc), max_cells=max_cells) for sc in scales_arr])
    used = np.ones(scales_arr.size, dtype=bool)
    used[:drop_coarsest] = False
    xs = np.log(1.0 / scales_arr[used])
    ys = np.log(counts[used].astype(float))
    slope, intercept = np.polyfit(xs, ys, 1)
    return BoxCountResult(
        scales=scales_arr,
        counts=counts,
        slope=float(slope),
        intercept=float(intercept),
        used=used,
        level=tree.depth,
    )


# ---------------------------------------------------------------------------
# sandwich bounds on the stopping cover


def stopping_cover(tree: RealizationTree, sset: StoppingSet) -> RectArrays:
    """The Q_n rectangles of one realization: (x0, x1, y0, y1) arrays."""
    if sset.max_word_length > tree.depth:
        raise InsufficientDepthError(
            f"cover words reach length {sset.max_word_length}, tree depth {tree.depth}",
            required_depth=sset.max_word_length,
        )
    p = tree.partition
    m = p.m
    b = np.asarray(p.breakpoints[:-1])
    lens = p.lengths_array
    N = sset.size
    x0 = np.zeros(N)
    scale = np.ones(N)
    for j in range(sset.digits.shape[1]):
        d = sset.digits[:, j]
        live = d >= 0
        dd = np.where(live, d, 0)
        x0 = np.where(live, x0 + b[dd] * scale, x0)
        scale = np.where(live, scale * lens[dd], scale)
    y_lo = np.empty(N)
    y_hi = np.empty(N)
    for L in np.unique(sset.word_lengths):
        rows = sset.word_lengths == L
        idx = _word_indices(sset.digits[rows], int(L), m)
        u, w = tree.level(int(L))
        y_lo[rows] = np.minimum(u[idx], w[idx])
        y_hi[rows] = np.maximum(u[idx], w[idx])
    return x0, x0 + sset.widths, y_lo, y_hi


@dataclass(frozen=True)
class SandwichResult:
    n: int
    count: int
    lower: float
    upper: float
    ok: bool

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "count": self.count,
            "lower": self.lower,
            "upper": self.upper,
            "ok": self.ok,
        }


def sandwich_check(
    trace: MartingaleTrace,
    counts: dict[int, int],
    p: Partition,
) -> list[SandwichResult]:
    """Exact covering bounds on the Q_n rectangle-cover count.

    With Xs = delta^(-ns) X_n:
    ``Xs / (1/delta + 1) <= N <= 2 delta^(1-s) Xs + 4 delta^(-(n+1))``.
    The lower holds because a cover rectangle needs at least h/delta^n
    cells and a single cell meets at most 1/delta + 1 rectangles (their
    widths exceed delta^(n+1)); the upper because each rectangle spans
    at most 2 columns and h/delta^n + 2 rows per column, and the family
    has at most delta^(-(n+1)) members by the Kraft identity.
    """
    delta = p.min_length
    s = trace.s
    out = []
    for n, count in sorted(counts.items()):
        if not 1 <= n < trace.ns.size:
            raise ValueError(f"trace does not include n={n}")
        xs = delta ** (-n * s) * float(trace.stopping_sum[n])
        lower = xs / (1.0 / delta + 1.0)
        upper = 2.0 * delta ** (1.0 - s) * xs + 4.0 * delta ** (-(n + 1.0))
        ok = (count >= lower * (1.0 - 1e-12)) and (count <= upper * (1.0 + 1e-12))
        out.append(SandwichResult(n, int(count), lower, upper, ok))
    return out


# ---------------------------------------------------------------------------
# drift probe


@dataclass(frozen=True)
class DriftProbe:
    paths: int
    steps: int
    mean_ratio: float          # average of S_n / n over paths
    se_ratio: float
    phi_ref: Optional[float]
    ratio_ok: Optional[bool]
    freq: np.ndarray           # mean digit frequencies
    freq_se: np.ndarray
    freq_ok: bool
    band: float

    def to_dict(self) -> dict:
        return {
            "paths": self.paths,
            "steps": self.steps,
            "mean_ratio": _finite_or_str(self.mean_ratio),
            "se_ratio": _finite_or_str(self.se_ratio),
            "phi_ref": None if self.phi_ref is None else _finite_or_str(self.phi_ref),
            "ratio_ok": self.ratio_ok,
            "freq": [float(v) for v in self.freq],
            "freq_se": [float(v) for v in self.freq_se],
            "freq_ok": self.freq_ok,
            "band": self.band,
        }


def _finite_or_str(v: float):
    if math.isfinite(v):
        return v
    if math.isnan(v):
        return "nan"
    return "-inf" if v < 0 else "inf"


def drift_probe(
    source: Union[HeightLaw, RealizationTree],
    p: Optional[Partition] = None,
    *,
    paths: int = 200,
    steps: int = 2000,
    seed: int = 0,
    phi: Optional[float] = None,
    band: float = 4.0,
) -> DriftProbe:
    """Walk random codings and compare S_n/n = mean log(a/l) against phi.

    Given a law, every path draws fresh heights (the product-measure
    setting in which S_n/n converges to phi); given a tree, paths share
    that one realization and ``steps`` is capped by its depth.  Digits
    are drawn with the cell lengths as probabilities, i.e. the start
    point is Lebesgue-distributed.
    """
    if isinstance(source, RealizationTree):
        tree = source
        p = tree.partition
        if steps > tree.depth:
            raise InsufficientDepthError(
                f"probe of {steps} steps needs depth {steps}, tree has {tree.depth}",
                required_depth=steps,
            )
        law = None
    else:
        law = source
        if p is None:
            raise ValueError("a partition is required with a law source")
        if law.m != p.m:
            raise ValueError("law/partition arity mismatch")
        tree = None
    if paths < 2 or steps < 1:
        raise ConfigurationError("need paths >= 2 and steps >= 1")

    m = p.m
    lens = p.lengths_array
    rng = np.random.default_rng(seed)
    digits = rng.choice(m, size=(paths, steps), p=lens / lens.sum())

    if tree is not None:
        a = np.empty((paths, steps))
        idx = np.zeros(paths, dtype=np.int64)
        h_par = tree.heights(0)[idx]
        for k in range(steps):
            idx = idx * m + digits[:, k]
            h_child = tree.heights(k + 1)[idx]
            with np.errstate(divide="ignore", invalid="ignore"):
                a[:, k] = np.where(h_par > 0, h_child / h_par, 0.0)
            h_par = h_child
    else:
        y = _batch_y(law, rng, paths * steps)
        ypad = np.concatenate(
            [np.zeros((paths * steps, 1)), y, np.ones((paths * steps, 1))], axis=1
        )
        allr = np.abs(np.diff(ypad, axis=1)).reshape(paths, steps, m)
        a = np.take_along_axis(allr, digits[..., None], axis=2)[..., 0]

    with np.errstate(divide="ignore"):
        inc = np.where(a > 0, np.log(np.maximum(a, 1e-300)), -np.inf) - np.log(lens)[digits]
    ratios = inc.sum(axis=1) / steps
    finite = np.isfinite(ratios)
    if finite.all():
        mean_ratio = float(ratios.mean())
        se_ratio = float(ratios.std(ddof=1) / math.sqrt(paths))
    else:
        mean_ratio = float("-inf")
        se_ratio = float("nan")

    freq = np.stack([(digits == i).mean(axis=1) for i in range(m)], axis=1)
    freq_mean = freq.mean(axis=0)
    freq_se = freq.std(axis=0, ddof=1) / math.sqrt(paths)
    freq_ok = bool(
        np.all(np.abs(freq_mean - lens) <= band * np.maximum(freq_se, 1e-15))
    )

    ratio_ok: Optional[bool] = None
    if phi is not None:
        if math.isinf(phi) or math.isinf(mean_ratio):
            ratio_ok = phi == mean_ratio
        else:
            ratio_ok = abs(mean_ratio - phi) <= band * se_ratio
    return DriftProbe(
        paths=paths,
        steps=steps,
        mean_ratio=mean_ratio,
        se_ratio=se_ratio,
        phi_ref=phi,
        ratio_ok=ratio_ok,
        freq=freq_mean,
        freq_se=freq_se,
        freq_ok=freq_ok,
        band=band,
    )


def _batch_y(law: HeightLaw, rng: np.random.Generator, n: int) -> np.ndarray:
    return law.sample_batch(rng, n)
