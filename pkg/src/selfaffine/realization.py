"""Sampled realizations: nested rectangles and graph approximants.

A realization assigns every tree node a vertical interval.  The root
gets [0, 1]; the children of a node with interval [u, w] get
``[u + y_i (w - u), u + y_{i+1} (w - u)]`` with the node's sampled
heights ``y`` (anchors y_0 = 0, y_m = 1).  Sibling intervals share
endpoints exactly, so the level-n graph approximant (cell left endpoint,
interval left value) is a continuous polyline from (0,0) to (1,1).

Node randomness is keyed by (seed, path), never by traversal order:
restricting a depth-n tree to level k is bit-identical to sampling a
depth-k tree with the same seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import ConfigurationError, ContractViolationError, ResourceLimitError
from .heightlaw import HeightLaw, validate
from .streams import check_code_capacity, child_codes, node_rng, node_uniforms
from .symbolic import DEFAULT_MAX_DEPTH, Partition, level_bases, level_widths

__all__ = [
    "RealizationTree",
    "GraphApprox",
    "SvgOptions",
    "sample_tree",
    "iter_levels",
    "graph_points",
    "export_csv",
    "export_json",
    "render_svg",
]

_CONTINUITY_TOL = 1e-9
_DEFAULT_MAX_NODES = 20_000_000


@dataclass(frozen=True)
class RealizationTree:
    """Materialized level arrays; level k holds m**k vertical intervals."""

    partition: Partition
    law: HeightLaw
    seed: int
    depth: int
    lower: tuple[np.ndarray, ...]  # u per level, base order
    upper: tuple[np.ndarray, ...]  # w per level, base order

    def level(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        if not 0 <= k <= self.depth:
            raise ValueError(f"level {k} outside [0, {self.depth}]")
        return self.lower[k], self.upper[k]

    def heights(self, k: int) -> np.ndarray:
        u, w = self.level(k)
        return np.abs(w - u)

    @property
    def node_count(self) -> int:
        return sum(arr.size for arr in self.lower)


def _level_iter(
    p: Partition,
    law: HeightLaw,
    depth: int,
    seed: int,
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    m = p.m
    u = np.zeros(1)
    w = np.ones(1)
    yield 0, u, w
    fast = law.y_from_uniforms(np.zeros((1, m - 1))) is not None
    if fast:
        check_code_capacity(m, depth)
        codes = np.zeros(1, dtype=np.uint64)
    words: list[tuple[int, ...]] = [()]
    for k in range(depth):
        n = u.size
        if fast:
            y = law.y_from_uniforms(node_uniforms(seed, codes, m - 1))
            codes = child_codes(codes, m).ravel()
        else:
            y = np.empty((n, m - 1))
            for i, word in enumerate(words):
                y[i] = law.sample_y(node_rng(seed, word))
            words = [word + (d,) for word in words for d in range(m)]
        ypad = np.concatenate([np.zeros((n, 1)), y, np.ones((n, 1))], axis=1)
        span = (w - u)[:, None]
        cu = u[:, None] + ypad[:, :m] * span
        cw = u[:, None] + ypad[:, 1:] * span
        cw[:, -1] = w  # snap: keeps continuity and the (1,1) endpoint exact
        u, w = cu.ravel(), cw.ravel()
        yield k + 1, u, w


def sample_tree(
    p: Partition,
    law: HeightLaw,
    depth: int,
    seed: int,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_nodes: int = _DEFAULT_MAX_NODES,
) -> RealizationTree:
    """Materialize all levels 0..depth of one realization.

    Budgets are checked before any allocation; the law must pass
    ``validate`` for the partition.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > max_depth:
        raise ResourceLimitError(f"depth {depth} exceeds the cap {max_depth}")
    m = p.m
    total = (m ** (depth + 1) - 1) // (m - 1)
    if total > max_nodes:
        raise ResourceLimitError(
            f"tree would hold {total} nodes, over the budget {max_nodes}"
        )
    report = validate(law, p)
    if not report.ok:
        raise ConfigurationError("; ".join(report.messages) or "law rejected")
    lower = []
    upper = []
    for _, u, w in _level_iter(p, law, depth, seed):
        lower.append(u)
        upper.append(w)
    return RealizationTree(p, law, seed, depth, tuple(lower), tuple(upper))


def iter_levels(
    p: Partition,
    law: HeightLaw,
    depth: int,
    seed: int,
    *,
    max_depth: int = DEFAULT_MAX_DEPTH,
) -> Iterator[tuple[int, np.ndarray, np.ndarray]]:
    """Stream (k, u, w) per level without retaining ancestors.

    Peak memory is two consecutive levels; useful past the point where
    ``sample_tree`` would blow the node budget.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > max_depth:
        raise ResourceLimitError(f"depth {depth} exceeds the cap {max_depth}")
    report = validate(law, p)
    if not report.ok:
        raise ConfigurationError("; ".join(report.messages) or "law rejected")
    return _level_iter(p, law, depth, seed)


@dataclass(frozen=True)
class GraphApprox:
    """Level-n polyline through (cell base, interval lower value).

    ``x``/``y`` have m**level + 1 entries, from (0, 0) to (1, 1); the
    level's rectangles are carried alongside for covering estimates.
    """

    x: np.ndarray
    y: np.ndarray
    level: int
    rect_x0: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    rect_x1: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    rect_y0: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    rect_y1: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]

    @property
    def rects(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        return self.rect_x0, self.rect_x1, self.rect_y0, self.rect_y1


def graph_points(tree: RealizationTree, level: Optional[int] = None) -> GraphApprox:
    """Extract the polyline at a level (default: the deepest)."""
    k = tree.depth if level is None else level
    u, w = tree.level(k)
    gap = np.max(np.abs(w[:-1] - u[1:])) if u.size > 1 else 0.0
    if gap > _CONTINUITY_TOL:
        raise ContractViolationError(
            f"sibling continuity violated at level {k}: max gap {gap:.3e}"
        )
    p = tree.partition
    bases = level_bases(p, k)
    widths = level_widths(p, k)
    x = np.append(bases, 1.0)
    y = np.append(u, w[-1])
    if y[0] != 0.0 or y[-1] != 1.0:
        raise ContractViolationError("graph endpoints are not (0,0)-(1,1)")
    if np.any(np.diff(x) <= 0):
        raise ContractViolationError("x grid is not strictly increasing")
    x1 = bases + widths
    x1[-1] = 1.0
    return GraphApprox(
        x=x,
        y=y,
        level=k,
        rect_x0=bases,
        rect_x1=x1,
        rect_y0=np.minimum(u, w),
        rect_y1=np.maximum(u, w),
    )


def export_csv(graph: GraphApprox) -> str:
    lines = ["x,y"]
    lines.extend(f"{float(x)!r},{float(y)!r}" for x, y in zip(graph.x, graph.y))
    return "\n".join(lines) + "\n"


def export_json(graph: GraphApprox) -> str:
    return json.dumps([[float(x), float(y)] for x, y in zip(graph.x, graph.y)])


@dataclass(frozen=True)
class SvgOptions:
    width: int = 720
    height: int = 720
    margin: int = 24
    stroke: str = "#1f4e79"
    stroke_width: float = 1.0
    show_rectangles: bool = False
    rect_stroke: str = "#c0504d"
    background: str = "#ffffff"
    decimals: int = 6


def render_svg(
    graph: GraphApprox,
    options: Optional[SvgOptions] = None,
    rect_source: Optional[GraphApprox] = None,
) -> str:
    """Byte-deterministic SVG: the polyline, plus optional rectangle
    outlines (with their diagonals) from ``rect_source`` or the graph's
    own level."""
    opt = options or SvgOptions()
    w, h, mg = opt.width, opt.height, opt.margin
    sx = w - 2 * mg
    sy = h - 2 * mg
    fmt = f"{{:.{opt.decimals}f}}"

    def px(x: float) -> str:
        return fmt.format(mg + x * sx)

    def py(y: float) -> str:
        return fmt.format(mg + (1.0 - y) * sy)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
        f'viewBox="0 0 {w} {h}">',
        f'<rect x="0" y="0" width="{w}" height="{h}" fill="{opt.background}"/>',
    ]
    if opt.show_rectangles:
        src = rect_source or graph
        x0, x1, y0, y1 = src.rects
        for i in range(x0.size):
            parts.append(
                f'<rect x="{px(x0[i])}" y="{py(y1[i])}" '
                f'width="{fmt.format((x1[i] - x0[i]) * sx)}" '
                f'height="{fmt.format((y1[i] - y0[i]) * sy)}" '
                f'fill="none" stroke="{opt.rect_stroke}" stroke-width="0.6"/>'
            )
        sy0 = src.y[:-1]
        sy1 = src.y[1:]
        for i in range(x0.size):
            parts.append(
                f'<line x1="{px(x0[i])}" y1="{py(sy0[i])}" '
                f'x2="{px(x1[i])}" y2="{py(sy1[i])}" '
                f'stroke="{opt.rect_stroke}" stroke-width="0.6" stroke-dasharray="3,2"/>'
            )
    pts = " ".join(f"{px(x)},{py(y)}" for x, y in zip(graph.x, graph.y))
    parts.append(
        f'<polyline points="{pts}" fill="none" stroke="{opt.stroke}" '
        f'stroke-width="{opt.stroke_width}"/>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
