"""Command-line entry point: the whole pipeline for scripting and batch use.

Exit codes: 0 success, 1 domain error (stable code on stderr), 2 usage
error. Identical invocations on identical files produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import camera
from .config import SolveConfig, load_config, override
from .constraints import annotations_from_json
from .errors import ScaffoldError
from .extrusion import solution_from_dict, solution_to_dict, solve
from .mesh import export_obj
from .model import clipart_to_dict, require_valid
from .raster import mask_to_png, rasterize_mask
from .render import RenderConfig, image_to_png, render as render_scaffold
from .shape import filter_by_mask, load_shape, shape_to_obj
from .svg import parse_color, parse_clipart, strip_fills
from .synthetic import run_roundtrip


def _setup_logging():
    level = os.environ.get("SCAFFOLD_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))


def _load_kinds(path: str | None) -> dict[int, str] | None:
    if path is None:
        return None
    data = json.loads(Path(path).read_text())
    return {int(k): v for k, v in data.items()}


def _load_clipart(args):
    clip = parse_clipart(Path(args.clipart).read_bytes(), kinds=_load_kinds(args.kinds))
    require_valid(clip)
    return clip


def _load_solve_config(args) -> SolveConfig:
    cfg = load_config(args.config) if getattr(args, "config", None) else SolveConfig()
    return override(
        cfg,
        omega=getattr(args, "omega", None),
        order_margin=getattr(args, "order_margin", None),
        d_min=getattr(args, "d_min", None),
        mask_resolution=getattr(args, "resolution", None),
        refine_enabled=getattr(args, "refine", None),
    )


def _dump_json(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def _prepared_shape(args, clip, cfg):
    path = Path(args.shape)
    fmt = args.format or path.suffix.lstrip(".")
    shape = load_shape(path.read_bytes(), fmt, clipart=clip)
    mask = rasterize_mask(clip, cfg.mask_resolution)
    return filter_by_mask(shape, mask)


def cmd_inspect(args) -> int:
    clip = _load_clipart(args)
    table = [
        {
            "id": p.id,
            "layer": p.layer,
            "kind": p.kind.value,
            "fill": list(p.fill),
            "vertices": int(p.polygon.shape[0]),
        }
        for p in clip.paths
    ]
    sys.stdout.write(_dump_json({"paths": table}))
    if args.json:
        Path(args.json).write_text(_dump_json(clipart_to_dict(clip)))
    return 0


def cmd_mask(args) -> int:
    clip = _load_clipart(args)
    mask = rasterize_mask(clip, args.resolution)
    Path(args.out).write_bytes(mask_to_png(mask))
    return 0


def cmd_outline(args) -> int:
    clip = _load_clipart(args)
    Path(args.out).write_bytes(strip_fills(clip))
    return 0


def cmd_filter(args) -> int:
    clip = _load_clipart(args)
    cfg = _load_solve_config(args)
    filtered = _prepared_shape(args, clip, cfg)
    Path(args.out).write_bytes(shape_to_obj(filtered))
    return 0


def cmd_solve(args) -> int:
    clip = _load_clipart(args)
    cfg = _load_solve_config(args)
    annotations = (
        annotations_from_json(Path(args.annotations).read_text()) if args.annotations else []
    )
    filtered = _prepared_shape(args, clip, cfg)
    solution = solve(clip, filtered, annotations, cfg)
    Path(args.out).write_text(_dump_json(solution_to_dict(solution, clip)))
    if args.obj:
        Path(args.obj).write_bytes(export_obj(solution))
    sys.stdout.write(
        f"solved {len(solution.prisms)} volumes; total cost {solution.total_cost!r}\n"
    )
    return 0


def cmd_render(args) -> int:
    data = json.loads(Path(args.solution).read_text())
    solution, fills = solution_from_dict(data)
    if args.view:
        vp = camera.preset(args.view)
        if args.scale is not None:
            vp = camera.Viewpoint(vp.azimuth, vp.elevation, args.scale)
    else:
        vp = camera.Viewpoint(args.azimuth or 0.0, args.elevation or 0.0, args.scale)
    bg = parse_color(args.bg) if args.bg else None
    cfg = RenderConfig(
        width=args.width, height=args.height, outline=not args.no_outline, fills=fills
    )
    image = render_scaffold(solution, vp, cfg)
    Path(args.out).write_bytes(image_to_png(image, background=bg))
    return 0


def cmd_roundtrip(args) -> int:
    cfg = load_config(args.config) if args.config else None
    report = run_roundtrip(scenes=args.scenes, seed=args.seed, config=cfg)
    header = f"{'scene':>5} {'path':>4} {'d_true':>8} {'d':>8} {'rel_err':>8} {'z_true':>8} {'z':>8} {'abs_err':>8} ok"
    lines = [header]
    for r in report["rows"]:
        lines.append(
            f"{r['scene']:>5} {r['path']:>4} {r['d_true']:>8.4f} {r['d']:>8.4f} "
            f"{r['d_rel_err']:>8.4f} {r['z_true']:>8.4f} {r['z']:>8.4f} "
            f"{r['z_abs_err']:>8.4f} {'y' if r['recovered'] else 'N'}"
        )
    lines.append(
        f"recovered {report['recovered']}/{report['volumes']} "
        f"({report['success_rate']:.1%}) in {report['elapsed_seconds']:.1f}s"
    )
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out:
        Path(args.out).write_text(_dump_json(report))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .server import create_app

    data_dir = args.data_dir or os.environ.get("SCAFFOLD_DATA_DIR")
    app = create_app(data_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clipscaffold", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common_clipart(p):
        p.add_argument("--clipart", required=True, help="input SVG file")
        p.add_argument("--kinds", help="JSON map of path id to geometry|shading")

    def common_shape(p):
        p.add_argument("--shape", required=True, help="guiding shape file (OBJ/PLY/XYZ)")
        p.add_argument("--format", choices=["obj", "ply", "xyz"], help="override format")

    def common_config(p):
        p.add_argument("--config", help="JSON config file (flags win over file values)")
        p.add_argument("--omega", type=float, help="thickness weight")
        p.add_argument("--order-margin", dest="order_margin", type=float)
        p.add_argument("--d-min", dest="d_min", type=float)
        p.add_argument("--resolution", type=int, help="mask resolution")
        refine = p.add_mutually_exclusive_group()
        refine.add_argument("--refine", dest="refine", action="store_true", default=None)
        refine.add_argument("--no-refine", dest="refine", action="store_false", default=None)

    p = sub.add_parser("inspect", help="print the path table as JSON")
    common_clipart(p)
    p.add_argument("--json", help="also write the canonical clipart JSON here")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("mask", help="rasterize the foreground mask to PNG")
    common_clipart(p)
    p.add_argument("--resolution", type=int, default=256)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mask)

    p = sub.add_parser("outline", help="write the color-stripped outline SVG")
    common_clipart(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_outline)

    p = sub.add_parser("filter", help="mask-filter a guiding shape, write OBJ")
    common_clipart(p)
    common_shape(p)
    common_config(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("solve", help="fit the extruded reference model")
    common_clipart(p)
    common_shape(p)
    common_config(p)
    p.add_argument("--annotations", help="JSON annotation file")
    p.add_argument("--out", required=True, help="solution JSON output")
    p.add_argument("--obj", help="also export the model as OBJ")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("render", help="render a scaffold PNG from a solution")
    p.add_argument("--solution", required=True)
    p.add_argument("--view", choices=sorted(camera.PRESETS))
    p.add_argument("--azimuth", type=float)
    p.add_argument("--elevation", type=float)
    p.add_argument("--scale", type=float, help="scene units per image height")
    p.add_argument("--width", type=int, default=512)
    p.add_argument("--height", type=int, default=512)
    p.add_argument("--no-outline", action="store_true")
    p.add_argument("--bg", help="background color (hex), default transparent")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("roundtrip", help="synthetic ground-truth recovery experiment")
    p.add_argument("--scenes", type=int, default=20)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--out", help="write the full report JSON here")
    p.set_defaults(func=cmd_roundtrip)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--data-dir", help="session snapshot directory")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScaffoldError as exc:
        sys.stderr.write(f"error[{exc.code}]: {exc}\n")
        return 1
    except OSError as exc:
        sys.stderr.write(f"error[IO_ERROR]: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
