"""Command-line pipeline driver.

Four subcommands cover the batch workflow end to end:

- ``parametrize``: flatten a mesh (or a region of it) into a UV chart file.
- ``segment``: grow a region around a 3D seed point, write a region file.
- ``apply``: stamp an element along a demonstration (optionally
  autocompleted), extrude, and write the textured mesh.
- ``check``: print a watertightness report for a mesh file.

Exit codes: 0 success, 1 the produced/checked artifact fails
validation, 2 bad usage or bad input.  All file formats are versioned
UTF-8 text except mesh geometry (OBJ text / binary STL by extension).
Identical inputs and flags produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .autocomplete import (
    AutocompleteError,
    complete_along_curve,
    format_demo,
    infer_pattern,
    parse_demo,
)
from .extrude import ExtrudeError, extrude_texture
from .geom2d import PolygonError, TriangulationError
from .imprint import ImprintError, SeamSplitWarning, imprint, imprint_in_region
from .mesh import (
    MeshError,
    check_watertight,
    export_mesh,
    load_mesh,
    signed_volume,
    submesh,
)
from .segmentation import (
    SegmentationError,
    format_region,
    infer_region,
    parse_region_faces,
)
from .svgelem import ElementError, load_element
from .uvmap import (
    ChartError,
    FlipError,
    build_chart,
    chart_boundary,
    format_chart,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2

_INPUT_ERRORS = (
    AutocompleteError,
    ChartError,
    ElementError,
    ExtrudeError,
    FlipError,
    ImprintError,
    MeshError,
    PolygonError,
    SegmentationError,
    TriangulationError,
)

# Config file keys honored by ``apply`` (flags win over config values).
_CONFIG_KEYS = frozenset({"mode", "depth", "wall_ref"})


class InputError(ValueError):
    """Bad file, flag, or value: exit code 2."""


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc)) from exc
    except UnicodeDecodeError as exc:
        raise InputError("%s is not UTF-8 text" % path) from exc


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError("cannot read %s: %s" % (path, exc)) from exc


def _write_bytes(path: str, data: bytes) -> None:
    try:
        Path(path).write_bytes(data)
    except OSError as exc:
        raise InputError("cannot write %s: %s" % (path, exc)) from exc


def _mesh_format(path: str) -> str:
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in ("obj", "stl"):
        raise InputError(
            "cannot tell the mesh format of %r; use a .obj or .stl path"
            % path
        )
    return suffix


def _load_mesh_file(path: str):
    return load_mesh(_read_bytes(path), _mesh_format(path))


def _parse_seed(text: str) -> np.ndarray:
    parts = text.split(",")
    if len(parts) != 3:
        raise InputError('seed must be "x,y,z", got %r' % text)
    try:
        return np.array([float(p) for p in parts], dtype=np.float64)
    except ValueError as exc:
        raise InputError('seed must be "x,y,z", got %r' % text) from exc


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        cfg = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise InputError("config %s is not valid JSON: %s" % (path, exc))
    if not isinstance(cfg, dict):
        raise InputError("config %s must hold a JSON object" % path)
    unknown = set(cfg) - _CONFIG_KEYS
    if unknown:
        raise InputError(
            "config %s has unknown keys: %s"
            % (path, ", ".join(sorted(unknown)))
        )
    return cfg


def _region_faces(path: str | None):
    if path is None:
        return None
    return parse_region_faces(_read_text(path))


# ------------------------------------------------------------------ commands


def cmd_parametrize(args) -> int:
    mesh = _load_mesh_file(args.mesh)
    region = _region_faces(args.region)
    target = submesh(mesh, region) if region is not None else mesh
    chart = build_chart(target)
    _write_bytes(args.out, format_chart(chart).encode("utf-8"))
    sys.stdout.write(
        "chart: %d faces, max area distortion %.6g\n"
        % (chart.n_faces, chart.max_area_distortion)
    )
    return EXIT_OK


def cmd_segment(args) -> int:
    mesh = _load_mesh_file(args.mesh)
    seed = _parse_seed(args.seed)
    region = infer_region(mesh, seed)
    _write_bytes(args.out, format_region(region).encode("utf-8"))
    sys.stdout.write(
        "region: %d faces, score %.6g, level %.6g\n"
        % (len(region.faces), region.score, region.level)
    )
    return EXIT_OK


def _plan_placements(demo, outline, element):
    """Demonstrated events plus whatever pattern they imply."""
    events = list(demo.events)
    if not events:
        raise InputError("demo script has no placement events")
    suggestion = None
    if demo.curve is not None:
        if len(events) < 2:
            raise InputError("curve demos need at least two events")
        suggestion = complete_along_curve(
            events, demo.curve, outline, element.shape
        )
    elif len(events) >= 2:
        suggestion = infer_pattern(events, outline, element.shape)
    # A suggestion's placements already include the demonstrated events.
    placements = (
        list(suggestion.placements) if suggestion is not None else events
    )
    placements.sort(key=lambda e: e.seq)
    return placements


def cmd_apply(args) -> int:
    cfg = _load_config(args.config)
    mode = args.mode or cfg.get("mode")
    if mode is None:
        raise InputError("apply needs --mode (or a mode in --config)")
    depth = args.depth if args.depth is not None else cfg.get("depth")
    wall_ref = cfg.get("wall_ref")
    if not args.suggest_only and args.out is None:
        raise InputError("apply needs --out (or --suggest-only)")

    mesh = _load_mesh_file(args.mesh)
    element = load_element(_read_bytes(args.element))
    demo = parse_demo(_read_text(args.demo))
    region = _region_faces(args.region)

    chart = build_chart(submesh(mesh, region) if region is not None else mesh)
    outline = chart_boundary(chart)
    placements = _plan_placements(demo, outline, element)

    if args.suggest_only:
        sys.stdout.write(
            format_demo(placements, demo.curve, demo.region_ref)
        )
        return EXIT_OK

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", SeamSplitWarning)
        if region is not None:
            im, _ = imprint_in_region(
                mesh, region, element, placements, chart=chart
            )
        else:
            im = imprint(mesh, chart, element, placements)
    for w in caught:
        sys.stderr.write("warning: %s\n" % w.message)

    out_mesh = extrude_texture(im, mode, depth=depth, wall_ref=wall_ref)
    _write_bytes(args.out, export_mesh(out_mesh, _mesh_format(args.out)))

    closed_input = check_watertight(mesh).boundary_edge_count == 0
    summary = "placements %d, mode %s, volume %.6g -> %.6g mm^3" % (
        len(placements), mode, signed_volume(mesh), signed_volume(out_mesh),
    )
    if closed_input and mode != "cutout":
        report = check_watertight(out_mesh)
        if not report.is_watertight:
            sys.stderr.write(
                "output failed validation: %d boundary, %d non-manifold, "
                "%d inconsistently wound edges\n"
                % (
                    report.boundary_edge_count,
                    report.nonmanifold_edge_count,
                    report.inconsistent_winding_count,
                )
            )
            return EXIT_INVALID
        summary += ", watertight"
    sys.stdout.write(summary + "\n")
    return EXIT_OK


def cmd_check(args) -> int:
    mesh = _load_mesh_file(args.mesh)
    report = check_watertight(mesh)
    sys.stdout.write(
        "faces %d\nboundary edges %d\nnon-manifold edges %d\n"
        "inconsistently wound edges %d\neuler characteristic %d\n"
        "watertight %s\n"
        % (
            mesh.n_faces,
            report.boundary_edge_count,
            report.nonmanifold_edge_count,
            report.inconsistent_winding_count,
            report.euler_characteristic,
            "yes" if report.is_watertight else "no",
        )
    )
    return EXIT_OK if report.is_watertight else EXIT_INVALID


# ------------------------------------------------------------------ parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="meshtex",
        description="Demonstration-driven surface texturing pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser(
        "parametrize", help="flatten a mesh (or region) into a chart file"
    )
    p.add_argument("--mesh", required=True, help="input .obj/.stl")
    p.add_argument("--region", help="restrict to a region file's faces")
    p.add_argument("--out", required=True, help="chart file to write")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_parametrize)

    p = sub.add_parser("segment", help="grow a region around a seed point")
    p.add_argument("--mesh", required=True, help="input .obj/.stl")
    p.add_argument("--seed", required=True, help='seed point "x,y,z"')
    p.add_argument("--out", required=True, help="region file to write")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser(
        "apply", help="imprint a demonstrated pattern and extrude it"
    )
    p.add_argument("--mesh", required=True, help="input .obj/.stl")
    p.add_argument("--element", required=True, help="texture element .svg")
    p.add_argument("--demo", required=True, help="demonstration script file")
    p.add_argument("--region", help="texture only a region file's faces")
    p.add_argument(
        "--mode", choices=("raised", "embossed", "cutout"),
        help="extrusion mode",
    )
    p.add_argument("--depth", type=float, help="extrusion depth in mm")
    p.add_argument(
        "--suggest-only", action="store_true",
        help="print the completed placement script and write nothing",
    )
    p.add_argument("--out", help="output .obj/.stl")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("check", help="watertightness report for a mesh file")
    p.add_argument("--mesh", required=True, help="input .obj/.stl")
    p.set_defaults(func=cmd_check)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help, 2 for usage errors
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_USAGE
    except _INPUT_ERRORS as exc:
        sys.stderr.write("error: %s\n" % exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
