"""Command line entry point: generate -> fold -> verify -> pullback.

Exit codes: 0 ok, 1 parameter error or failed verification, 2 scale window
overflow, 3 point-count mismatch between files, 4 missing file, 5 exact
pullback size cap exceeded without ``--bounds``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

import numpy as np

from . import __version__
from .covers import build_hierarchy
from .embedding import build_folding_map, map_from_dict, select_scale_ratio
from .lightness import lipschitz_light_report
from .metric import (
    ConfigurationError,
    ParameterError,
    StructuralError,
    dumps,
    load_space,
    save_space,
    snowflake,
)
from .pullback import MAX_EXACT, distortion_profile, pullback_metric
from .spaces import KINDS, SpaceRecipe, generate

OUTPUT_ENV = "SNOWFOLD_OUTPUT_DIR"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_WINDOW = 2
EXIT_MISMATCH = 3
EXIT_MISSING = 4
EXIT_SIZE_CAP = 5

GREEDY_C = 4.0
INTERVAL_C = 5.0


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass
class RunConfig:
    """Everything that determines a run; embedded in every report."""

    space: str | None = None
    recipe: dict | None = None
    epsilon: float = 0.5
    r: float | None = None
    c: float | None = None
    cover: str = "auto"
    control: str | None = None
    base_point: int = 0
    tail_tol: float = 1e-3
    probe_radii: str = "distances"
    ceiling: float | None = None
    mode: str = "qs"
    target: str = "pullback"
    bounds: bool = False
    samples: int = 20000
    output_dir: str | None = None
    seed: int = 0
    emit_plots: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    doc = _read_json(path)
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise CliError(EXIT_FAIL, f"unknown config keys: {', '.join(unknown)}")
    return doc


def make_config(args, **extra) -> RunConfig:
    """Dataclass defaults, then the config file, then flags given on the command line."""
    doc = load_config(getattr(args, "config", None))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            doc[f.name] = v
    doc.update({k: v for k, v in extra.items() if v is not None})
    return RunConfig(**doc)


def _read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise CliError(EXIT_MISSING, f"file not found: {path}")
    with open(p, encoding="utf-8") as fh:
        return json.load(fh)


def _load_space(path):
    if not Path(path).is_file():
        raise CliError(EXIT_MISSING, f"file not found: {path}")
    return load_space(path)


def _load_map(path, n: int):
    fmap = map_from_dict(_read_json(path))
    if fmap.n != n:
        raise CliError(EXIT_MISMATCH, f"map has {fmap.n} points but the space has {n}")
    return fmap


def output_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.output_dir or os.environ.get(OUTPUT_ENV) or ".")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _stem(path: str) -> str:
    name = Path(path).name
    return name[:-5] if name.endswith(".json") else Path(name).stem


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _report(kind: str, cfg: RunConfig, body: dict) -> dict:
    return {"format": f"snowfold.{kind}", **body, "artifact_version": __version__, "config": cfg.to_dict()}


def _table(rows) -> str:
    w = max(len(k) for k, _ in rows)
    return "\n".join(f"{k.ljust(w)}  {v}" for k, v in rows)


# generate

def cmd_generate(args) -> int:
    if args.kind not in KINDS:
        raise CliError(EXIT_FAIL, f"unknown space kind {args.kind!r}; valid kinds: {', '.join(KINDS)}")
    recipe = SpaceRecipe(kind=args.kind, points=args.points, side=args.side, level=args.level,
                         arms=args.arms, depth=args.depth, radius=args.radius, seed=args.seed,
                         length=args.length)
    m = generate(recipe)
    cfg = RunConfig(recipe=recipe.to_dict(), output_dir=args.output_dir, seed=args.seed)
    path = Path(args.out) if args.out else output_dir(cfg) / f"{m.label}.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    save_space(m, path)
    print(_table([("space", m.label), ("points", m.n), ("mesh", f"{m.mesh:.6g}"),
                  ("diam", f"{m.diam:.6g}"), ("file", path)]))
    return EXIT_OK


# fold

def _fold(cfg: RunConfig, m):
    if not 0 < cfg.epsilon < 1:
        raise CliError(EXIT_FAIL, f"epsilon must satisfy 0 < epsilon < 1, got {cfg.epsilon}")
    cover = cfg.cover
    if cover == "auto":
        kind = (m.recipe or {}).get("kind")
        cover = "interval" if kind == "interval" else "greedy"
    c = cfg.c if cfg.c is not None else (INTERVAL_C if cover == "interval" else GREEDY_C)
    r = cfg.r if cfg.r is not None else select_scale_ratio(cfg.epsilon, c)
    try:
        h = build_hierarchy(m, r, cfg.epsilon, cfg.tail_tol, cover, c)
        return build_folding_map(h, base_point=cfg.base_point)
    except ConfigurationError as exc:
        raise CliError(EXIT_WINDOW, f"{exc}. Remediation: pass a larger --r, a larger --tail-tol, "
                                    "or check the space for near-duplicate points.") from exc


def _projection_map(cfg: RunConfig, m) -> dict:
    if m.coords is None:
        raise CliError(EXIT_FAIL, "projection control needs a space with coordinates")
    values = np.asarray(m.coords, dtype=np.float64)[:, :1]
    return {"format": "snowfold.map", "version": 1, "control": "projection", "epsilon": cfg.epsilon,
            "base_point": cfg.base_point, "target_dim": 1, "values": values.tolist()}


def cmd_fold(args) -> int:
    cfg = make_config(args, space=args.space)
    m = _load_space(cfg.space)
    cfg.recipe = m.recipe
    out = output_dir(cfg)
    stem = _stem(cfg.space)
    if cfg.control == "projection":
        doc = _projection_map(cfg, m)
        _write(out / f"{stem}.map.json", dumps(_report("map", cfg, doc)))
        print(_table([("control", "projection"), ("points", m.n), ("map", out / f"{stem}.map.json")]))
        return EXIT_OK
    fmap = _fold(cfg, m)
    h = fmap.hierarchy
    map_doc = _report("map", cfg, fmap.to_dict())
    hier_doc = _report("hierarchy", cfg, h.to_dict())
    _write(out / f"{stem}.map.json", dumps(map_doc))
    _write(out / f"{stem}.map.csv", fmap.to_csv())
    _write(out / f"{stem}.hierarchy.json", dumps(hier_doc))
    print(_table([
        ("cover", h.cover_kind),
        ("achieved c", f"{h.global_c:.6g}"),
        ("colors K", h.global_K),
        ("target dim", fmap.target_dim),
        ("r", f"{fmap.r:g}"),
        ("window", f"[{h.j_lo}, {h.j_hi}]"),
        ("tail bound", f"{fmap.tail_bound:.3g}"),
        ("certified lip", f"{fmap.certified_lip_bound:.6g}"),
        ("map", out / f"{stem}.map.json"),
    ]))
    return EXIT_OK


# verify

def svg_scatter(values: np.ndarray, size: int = 480, pad: int = 24) -> str:
    """Image points coloured by point index; 1-D images are drawn on a line."""
    n = values.shape[0]
    xy = np.zeros((n, 2))
    xy[:, : values.shape[1]] = values[:, :2]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    span = np.where(hi > lo, hi - lo, 1.0)
    px = pad + (xy - lo) / span * (size - 2 * pad)
    if values.shape[1] < 2:
        px[:, 1] = size / 2
    lines = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
             f'viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    for i, (x, y) in enumerate(px):
        hue = 300.0 * i / max(n - 1, 1)
        lines.append(f'<circle cx="{x:.2f}" cy="{size - y:.2f}" r="3" fill="hsl({hue:.1f},70%,45%)"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def cmd_verify(args) -> int:
    cfg = make_config(args, space=args.space)
    m = _load_space(cfg.space)
    fmap = _load_map(args.map, m.n)
    cfg.recipe = m.recipe
    eps = float(fmap.meta.get("epsilon", cfg.epsilon))
    cfg.epsilon = eps
    domain = snowflake(m, eps)
    rep = lipschitz_light_report(fmap.values, domain, ceiling=cfg.ceiling)
    body = {"map": {k: fmap.meta.get(k) for k in ("certified_lip_bound", "target_dim", "r", "window", "control")},
            "report": rep.to_dict()}
    out = output_dir(cfg)
    stem = _stem(cfg.space)
    _write(out / f"{stem}.report.json", dumps(_report("report", cfg, body)))
    if cfg.emit_plots and fmap.target_dim <= 2:
        _write(out / f"{stem}.image.svg", svg_scatter(fmap.values))
    print(_table([
        ("lip constant", f"{rep.lip_constant:.6g}"),
        ("lip witness", rep.lip_witness),
        ("light constant", f"{rep.light_constant:.6g}"),
        ("light bounds", f"[{rep.light_bounds[0]:.6g}, {rep.light_bounds[1]:.6g}]"),
        ("ceiling", rep.ceiling),
        ("pass", rep.passed),
    ]))
    return EXIT_OK if rep.passed else EXIT_FAIL


# pullback

def cmd_pullback(args) -> int:
    cfg = make_config(args, space=args.space)
    m = _load_space(cfg.space)
    fmap = _load_map(args.map, m.n)
    cfg.recipe = m.recipe
    if m.n > MAX_EXACT and not cfg.bounds:
        raise CliError(EXIT_SIZE_CAP, f"exact pullback is limited to {MAX_EXACT} points "
                                      f"(space has {m.n}); pass --bounds for interval bounds")
    values = fmap.values if fmap.target_dim else np.zeros((m.n, 1))
    pb = pullback_metric(m, values, mode="bounds" if cfg.bounds else "exact")
    if cfg.target == "pullback":
        source, target = m, pb
    elif cfg.target == "map":
        source, target = m, values
    elif cfg.target == "snowflake":
        source, target = m, snowflake(m, cfg.epsilon)
    else:
        raise CliError(EXIT_FAIL, f"unknown target {cfg.target!r}; choose pullback, map or snowflake")
    prof = distortion_profile(source, target, mode=cfg.mode, samples=cfg.samples, seed=cfg.seed)
    out = output_dir(cfg)
    stem = _stem(cfg.space)
    _write(out / f"{stem}.pullback.json", dumps(_report("pullback", cfg, pb.to_dict())))
    _write(out / f"{stem}.profile.json", dumps(_report("profile", cfg, prof.to_dict())))
    env = prof.envelope
    print(_table([
        ("mode", "exact" if pb.exact else "bounds"),
        ("points", m.n),
        ("profile", f"{cfg.mode} vs {cfg.target}"),
        ("samples", prof.inputs.size),
        ("skipped", prof.skipped),
        ("envelope max", f"{env[-1]:.6g}" if env.size else "n/a"),
    ]))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="snowfold", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"snowfold {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a corpus space file")
    g.add_argument("kind", help=f"one of: {', '.join(KINDS)}")
    for name in ("points", "side", "level", "arms", "depth", "radius", "seed"):
        g.add_argument(f"--{name}", type=int, default=0)
    g.add_argument("--length", type=float, default=None, help="interval length (default: unit spacing)")
    g.add_argument("-o", "--out", default=None)
    g.add_argument("--output-dir", default=None)
    g.set_defaults(func=cmd_generate)

    def common(sp):
        sp.add_argument("space")
        sp.add_argument("--config", default=None, help="JSON file with RunConfig fields")
        sp.add_argument("--output-dir", default=None, help=f"default: ${OUTPUT_ENV} or the current directory")
        sp.add_argument("--epsilon", type=float, default=None)
        sp.add_argument("--seed", type=int, default=None)

    f = sub.add_parser("fold", help="build the folding map of a space")
    common(f)
    f.add_argument("--r", type=float, default=None, help="scale ratio (default: smallest admissible)")
    f.add_argument("--c", type=float, default=None, help="cover constant used to select r")
    f.add_argument("--cover", choices=("auto", "greedy", "interval"), default=None)
    f.add_argument("--control", choices=("projection",), default=None,
                   help="write a control map instead of the folding map")
    f.add_argument("--base-point", dest="base_point", type=int, default=None)
    f.add_argument("--tail-tol", dest="tail_tol", type=float, default=None)
    f.set_defaults(func=cmd_fold)

    v = sub.add_parser("verify", help="measure Lipschitz and lightness constants")
    common(v)
    v.add_argument("map")
    v.add_argument("--ceiling", type=float, default=None)
    v.add_argument("--plot", dest="emit_plots", action="store_const", const=True, default=None)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("pullback", help="pullback metric and distortion profile")
    common(b)
    b.add_argument("map")
    b.add_argument("--mode", choices=("qs", "branched"), default=None)
    b.add_argument("--target", choices=("pullback", "map", "snowflake"), default=None)
    b.add_argument("--bounds", action="store_const", const=True, default=None)
    b.add_argument("--samples", type=int, default=None)
    b.set_defaults(func=cmd_pullback)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (ParameterError, StructuralError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_WINDOW


if __name__ == "__main__":
    sys.exit(main())
