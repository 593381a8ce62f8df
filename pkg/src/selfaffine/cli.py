"""Command-line front end.

Commands: dim, phi, simulate, boxcount, diagnose, render.  Every run is
driven by one JSON config file plus a handful of override flags; all
randomness flows from a single master seed (drawn from entropy and
printed on stderr when absent, so any run can be replayed).

Exit codes: 0 ok, 1 diagnose found failing checks, 2 bad config,
3 solver bracket, 4 resource budget, 5 regression fit, 6 insufficient
depth.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import analysis, realization, theory
from .errors import (
    ConfigurationError,
    FitError,
    InsufficientDepthError,
    ResourceLimitError,
    SolverBracketError,
)
from .heightlaw import (
    CustomSampler,
    Deterministic,
    HeightLaw,
    IidBeta,
    IidUniform,
    MirroredBeta,
    moments,
    okamoto_law,
    validate,
)
from .symbolic import Partition

EXIT_OK = 0
EXIT_CHECKS_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_RESOURCE = 4
EXIT_FIT = 5
EXIT_DEPTH = 6

# sub-stream roles hanging off the master seed
_ROLE_TREE = 0
_ROLE_MOMENTS = 1
_ROLE_DIAG = 2
_ROLE_DRIFT = 3
_ROLE_SANDWICH = 4

_DEFAULTS = {
    "depth": 8,
    "mc": {"samples": 1_000_000, "method": "auto"},
    "diagnostics": {
        "n_max": 6,
        "trees": 400,
        "band": 4.0,
        "rate_slack": 0.05,
        "s_shift": 0.0,
        "sandwich_trees": 4,
        "sandwich_n": [1, 2, 3],
    },
    "drift": {"paths": 200, "steps": 1000, "band": 4.0, "source": "law"},
    "boxcount": {"drop_coarsest": 2, "min_scales": 3},
    "output": {"level": None, "svg": None, "rectangles": False},
}


@dataclass(frozen=True)
class ModelConfig:
    """Parsed artifact config: model, seed, budgets, output policy."""

    path: str
    partition: Partition
    law: HeightLaw
    seed: Optional[int]
    depth: int
    mc: dict
    diagnostics: dict
    drift: dict
    boxcount: dict
    output: dict


def _fail(path: str, key: str, msg: str) -> ConfigurationError:
    return ConfigurationError(f"{path}: {key}: {msg}")


def _section(raw: dict, name: str, path: str) -> dict:
    base = dict(_DEFAULTS.get(name, {}))
    val = raw.get(name, {})
    if not isinstance(val, dict):
        raise _fail(path, name, "expected an object")
    for k, v in val.items():
        if k not in base:
            raise _fail(path, f"{name}.{k}", "unknown key")
        base[k] = v
    return base


def _parse_partition(raw, path: str) -> Partition:
    if isinstance(raw, dict):
        if set(raw) == {"uniform"}:
            try:
                return Partition.uniform(int(raw["uniform"]))
            except (ConfigurationError, ValueError, TypeError) as e:
                raise _fail(path, "partition.uniform", str(e))
        raise _fail(path, "partition", 'expected a breakpoint list or {"uniform": m}')
    if not isinstance(raw, list):
        raise _fail(path, "partition", "expected a breakpoint list")
    try:
        return Partition(tuple(float(v) for v in raw))
    except (ConfigurationError, ValueError, TypeError) as e:
        raise _fail(path, "partition", str(e))


def _parse_law(raw, path: str) -> HeightLaw:
    if not isinstance(raw, dict) or "family" not in raw:
        raise _fail(path, "heightlaw", 'expected an object with a "family" key')
    fam = raw["family"]
    params = {k: v for k, v in raw.items() if k != "family"}

    def need(keys: set[str]):
        if set(params) != keys:
            raise _fail(
                path,
                f"heightlaw({fam})",
                f"expected parameters {sorted(keys)}, got {sorted(params)}",
            )

    try:
        if fam == "deterministic":
            need({"y"})
            return Deterministic(tuple(float(v) for v in params["y"]))
        if fam == "okamoto":
            need({"alpha"})
            return okamoto_law(float(params["alpha"]))
        if fam == "iid-uniform":
            need({"m"})
            return IidUniform(int(params["m"]))
        if fam == "iid-beta":
            need({"m", "a", "b"})
            return IidBeta(int(params["m"]), float(params["a"]), float(params["b"]))
        if fam == "mirrored-beta":
            need({"a", "b"})
            return MirroredBeta(float(params["a"]), float(params["b"]))
    except (ConfigurationError, ValueError, TypeError) as e:
        raise _fail(path, f"heightlaw({fam})", str(e))
    raise _fail(
        path,
        "heightlaw.family",
        f"unknown family {fam!r}; built-ins: deterministic, okamoto, "
        "iid-uniform, iid-beta, mirrored-beta",
    )


def load_config(path: str) -> ModelConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as e:
        raise ConfigurationError(f"{path}: cannot read config: {e}")
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: line {e.lineno}: invalid JSON: {e.msg}")
    if not isinstance(raw, dict):
        raise _fail(path, "<root>", "top level must be an object")
    known = {
        "partition", "heightlaw", "seed", "depth",
        "mc", "diagnostics", "drift", "boxcount", "output",
    }
    for k in raw:
        if k not in known:
            raise _fail(path, k, "unknown key")
    if "partition" not in raw:
        raise _fail(path, "partition", "missing")
    if "heightlaw" not in raw:
        raise _fail(path, "heightlaw", "missing")
    p = _parse_partition(raw["partition"], path)
    law = _parse_law(raw["heightlaw"], path)
    if law.m != p.m:
        raise _fail(path, "heightlaw", f"law arity m={law.m} != partition m={p.m}")
    seed = raw.get("seed")
    if seed is not None:
        if not isinstance(seed, int) or seed < 0:
            raise _fail(path, "seed", "expected a nonnegative integer")
    depth = raw.get("depth", _DEFAULTS["depth"])
    if not isinstance(depth, int) or depth < 0:
        raise _fail(path, "depth", "expected a nonnegative integer")
    return ModelConfig(
        path=path,
        partition=p,
        law=law,
        seed=seed,
        depth=depth,
        mc=_section(raw, "mc", path),
        diagnostics=_section(raw, "diagnostics", path),
        drift=_section(raw, "drift", path),
        boxcount=_section(raw, "boxcount", path),
        output=_section(raw, "output", path),
    )


def _resolve_seed(cfg: ModelConfig, args) -> int:
    if args.seed is not None:
        return args.seed
    if cfg.seed is not None:
        return cfg.seed
    drawn = int(np.random.SeedSequence().entropy) & (2**64 - 1)
    print(f"master seed: {drawn}", file=sys.stderr)
    return drawn


def _subseed(master: int, role: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(role,)).generate_state(1, np.uint64)[0])


def _get_moments(cfg: ModelConfig, master: int):
    return moments(
        cfg.law,
        cfg.partition,
        samples=int(cfg.mc["samples"]),
        seed=_subseed(master, _ROLE_MOMENTS),
        method=str(cfg.mc["method"]),
    )


# ---------------------------------------------------------------------------
# output plumbing


def dump_json(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _flatten(payload: dict, prefix: str = "") -> list[tuple[str, str]]:
    rows = []
    for k in sorted(payload):
        v = payload[k]
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            rows.extend(_flatten(v, key + "."))
        else:
            rows.append((key, json.dumps(v)))
    return rows


def dump_csv(payload: dict) -> str:
    lines = ["key,value"]
    lines.extend(f"{k},{v}" for k, v in _flatten(payload))
    return "\n".join(lines) + "\n"


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_payload(payload: dict, args) -> None:
    text = dump_csv(payload) if args.format == "csv" else dump_json(payload)
    _emit(text, args.out)


# ---------------------------------------------------------------------------
# commands


def cmd_dim(cfg: ModelConfig, args) -> int:
    master = _resolve_seed(cfg, args)
    mom = _get_moments(cfg, master)
    report = theory.solve_dimension(mom, cfg.partition)
    payload = {
        "command": "dim",
        "provenance": mom.provenance,
        "report": report.to_dict(),
        "sensitivity": None,
    }
    if mom.provenance == "monte-carlo":
        sens = theory.dimension_sensitivity(mom, cfg.partition)
        payload["sensitivity"] = {
            "lower": sens.lower,
            "upper": sens.upper,
            "k": sens.k,
            "warning": sens.warning,
        }
    _emit_payload(payload, args)
    return EXIT_OK


def cmd_phi(cfg: ModelConfig, args) -> int:
    master = _resolve_seed(cfg, args)
    mom = _get_moments(cfg, master)
    report = theory.compute_phi(mom, cfg.partition)
    law_report = validate(cfg.law, cfg.partition)
    payload = {
        "command": "phi",
        "provenance": mom.provenance,
        "report": report.to_dict(),
        "law_flags": list(law_report.flags),
    }
    _emit_payload(payload, args)
    return EXIT_OK


def _depth(cfg: ModelConfig, args) -> int:
    return cfg.depth if args.depth is None else args.depth


def cmd_simulate(cfg: ModelConfig, args) -> int:
    master = _resolve_seed(cfg, args)
    depth = _depth(cfg, args)
    tree = realization.sample_tree(
        cfg.partition, cfg.law, depth, _subseed(master, _ROLE_TREE)
    )
    level = cfg.output["level"]
    graph = realization.graph_points(tree, None if level is None else int(level))
    svg_path = cfg.output["svg"]
    if svg_path:
        opts = realization.SvgOptions(show_rectangles=bool(cfg.output["rectangles"]))
        with open(svg_path, "w") as fh:
            fh.write(realization.render_svg(graph, opts))
    if args.format == "csv":
        _emit(realization.export_csv(graph), args.out)
    else:
        payload = {
            "command": "simulate",
            "seed": master,
            "depth": depth,
            "level": graph.level,
            "points": json.loads(realization.export_json(graph)),
            "svg": svg_path,
        }
        _emit(dump_json(payload), args.out)
    return EXIT_OK


def cmd_boxcount(cfg: ModelConfig, args) -> int:
    master = _resolve_seed(cfg, args)
    depth = _depth(cfg, args)
    tree = realization.sample_tree(
        cfg.partition, cfg.law, depth, _subseed(master, _ROLE_TREE)
    )
    est = analysis.estimate_dimension(
        tree,
        drop_coarsest=int(cfg.boxcount["drop_coarsest"]),
        min_scales=int(cfg.boxcount["min_scales"]),
    )
    mom = _get_moments(cfg, master)
    s_theory = theory.solve_dimension(mom, cfg.partition).s
    if args.format == "csv":
        lines = ["scale,count,used"]
        for sc, ct, used in zip(est.scales, est.counts, est.used):
            lines.append(f"{float(sc)!r},{int(ct)},{bool(used)}")
        lines.append(f"slope,{est.slope!r},")
        lines.append(f"s_theory,{s_theory!r},")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        payload = {
            "command": "boxcount",
            "seed": master,
            "depth": depth,
            "estimate": est.to_dict(),
            "s_theory": s_theory,
            "slope_error": est.slope - s_theory,
        }
        _emit(dump_json(payload), args.out)
    return EXIT_OK


def cmd_diagnose(cfg: ModelConfig, args) -> int:
    master = _resolve_seed(cfg, args)
    d = cfg.diagnostics
    mom = _get_moments(cfg, master)
    s_solved = theory.solve_dimension(mom, cfg.partition).s
    s_used = s_solved + float(d["s_shift"])
    diag = analysis.martingale_diagnostics(
        cfg.law,
        cfg.partition,
        s_used,
        mom,
        n_max=int(d["n_max"]),
        n_trees=int(d["trees"]),
        seed=_subseed(master, _ROLE_DIAG),
        band=float(d["band"]),
        rate_slack=float(d["rate_slack"]),
    )

    sandwich_rows = []
    sandwich_ok = True
    ns = sorted(int(n) for n in d["sandwich_n"])
    if ns and int(d["sandwich_trees"]) > 0:
        if min(ns) < 1:
            raise ConfigurationError("diagnostics.sandwich_n entries must be >= 1")
        ssets = {n: analysis.build_stopping_set(cfg.partition, n) for n in ns}
        need = max(ss.max_word_length for ss in ssets.values())
        base = _subseed(master, _ROLE_SANDWICH)
        for t in range(int(d["sandwich_trees"])):
            tree = realization.sample_tree(cfg.partition, cfg.law, need, base + t)
            trace = analysis.martingale_trace(tree, s_used, max(ns))
            counts = {}
            for n in ns:
                rects = analysis.stopping_cover(tree, ssets[n])
                counts[n] = analysis.box_count(rects, cfg.partition.min_length**n)
            for res in analysis.sandwich_check(trace, counts, cfg.partition):
                sandwich_ok &= res.ok
                sandwich_rows.append({"tree": t, **res.to_dict()})

    phi_report = theory.compute_phi(mom, cfg.partition)
    dr = cfg.drift
    steps = int(dr["steps"])
    if dr["source"] == "tree":
        # walk an actual tree at the configured depth; the probe raises
        # if steps asks for more levels than the tree has
        source = realization.sample_tree(
            cfg.partition, cfg.law, _depth(cfg, args), _subseed(master, _ROLE_TREE)
        )
    elif dr["source"] == "law":
        source = cfg.law
    else:
        raise ConfigurationError('drift.source must be "law" or "tree"')
    probe = analysis.drift_probe(
        source,
        cfg.partition,
        paths=int(dr["paths"]),
        steps=steps,
        seed=_subseed(master, _ROLE_DRIFT),
        phi=phi_report.phi,
        band=float(dr["band"]),
    )

    checks = dict(diag.checks)
    checks["sandwich-exact"] = sandwich_ok
    checks["drift-ratio-band"] = bool(probe.ratio_ok)
    checks["drift-frequency-band"] = probe.freq_ok
    failures = list(diag.failures)
    if not sandwich_ok:
        failures.append("a sandwich bound failed on some (tree, n) pair")
    if not probe.ratio_ok:
        failures.append("drift ratio left the phi band")
    if not probe.freq_ok:
        failures.append("digit frequencies left the length band")

    payload = {
        "command": "diagnose",
        "seed": master,
        "s_solved": s_solved,
        "s_used": s_used,
        "martingale": diag.to_dict(),
        "sandwich": sandwich_rows,
        "drift": probe.to_dict(),
        "checks": checks,
        "failures": failures,
        "ok": not failures,
    }
    _emit_payload(payload, args)
    return EXIT_OK if not failures else EXIT_CHECKS_FAILED


def cmd_render(cfg: ModelConfig, args) -> int:
    master = _resolve_seed(cfg, args)
    depth = _depth(cfg, args)
    tree = realization.sample_tree(
        cfg.partition, cfg.law, depth, _subseed(master, _ROLE_TREE)
    )
    level = cfg.output["level"]
    graph = realization.graph_points(tree, None if level is None else int(level))
    opts = realization.SvgOptions(show_rectangles=bool(cfg.output["rectangles"]))
    _emit(realization.render_svg(graph, opts), args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON model config")
    common.add_argument("--seed", type=int, default=None, help="master seed override")
    common.add_argument("--out", default=None, help="write output here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--depth", type=int, default=None, help="tree depth override")

    parser = argparse.ArgumentParser(
        prog="selfaffine",
        description="Random box-like self-affine functions: dimension, "
        "differentiability, simulation, and covering diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("dim", parents=[common], help="solve the dimension equation")
    sub.add_parser("phi", parents=[common], help="drift functional and verdict")
    sub.add_parser("simulate", parents=[common], help="sample one realization")
    sub.add_parser("boxcount", parents=[common], help="box-count regression")
    sub.add_parser("diagnose", parents=[common], help="martingale/cover/drift checks")
    sub.add_parser("render", parents=[common], help="SVG of one realization")
    return parser


_DISPATCH = {
    "dim": cmd_dim,
    "phi": cmd_phi,
    "simulate": cmd_simulate,
    "boxcount": cmd_boxcount,
    "diagnose": cmd_diagnose,
    "render": cmd_render,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.depth is not None and args.depth < 0:
            raise ConfigurationError("--depth must be nonnegative")
        if args.seed is not None and args.seed < 0:
            raise ConfigurationError("--seed must be a nonnegative integer")
        return _DISPATCH[args.command](cfg, args)
    except InsufficientDepthError as e:
        print(f"depth error: {e}", file=sys.stderr)
        return EXIT_DEPTH
    except SolverBracketError as e:
        print(f"solver error: {e}", file=sys.stderr)
        return EXIT_SOLVER
    except ResourceLimitError as e:
        print(f"resource error: {e}", file=sys.stderr)
        return EXIT_RESOURCE
    except FitError as e:
        print(f"fit error: {e}", file=sys.stderr)
        return EXIT_FIT
    except ConfigurationError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
