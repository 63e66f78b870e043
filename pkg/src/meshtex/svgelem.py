"""Texture-element ingestion from a small SVG subset.

Supported: ``path`` (M/L/H/V/C/S/Q/T/A/Z, absolute and relative), ``rect``,
``circle``, ``ellipse``, ``polygon``; ``transform`` attributes (translate,
scale, rotate, matrix, skewX, skewY) applied through nested groups.  Fill
geometry only — strokes are ignored.  Coordinates are millimetres (px taken
as mm at 1:1 unless the root declares a physical unit with a viewBox).

Curves are flattened to polylines with a maximum chord deviation of
``CHORD_DEVIATION`` mm; full circles never use fewer than
``MIN_CIRCLE_SEGMENTS`` chords.  Closed rings are classified outer/hole by
even-odd containment, and the result is re-centred so the area centroid
sits at the origin.
"""
from __future__ import annotations

import math
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass

import numpy as np

from .geom2d import Polygon2, PolygonError, point_in_ring, ring_area, ring_is_simple

CHORD_DEVIATION = 0.05  # mm
MIN_CIRCLE_SEGMENTS = 64

_UNIT_MM = {
    "": 1.0,
    "px": 1.0,
    "mm": 1.0,
    "cm": 10.0,
    "in": 25.4,
    "pt": 25.4 / 72.0,
    "pc": 25.4 / 6.0,
}


class ElementError(ValueError):
    """Raised when a vector document cannot become a texture element."""


@dataclass(frozen=True)
class TextureElement:
    """A closed 2D texture element in local coordinates.

    ``shape`` has its area centroid at the origin; ``nominal_size`` is the
    bounding-box diagonal in mm.
    """

    shape: Polygon2
    nominal_size: float

    def __post_init__(self):
        if not self.nominal_size > 0:
            raise ElementError("element has zero size")


# --------------------------------------------------------------- transforms

_TRANSFORM_RE = re.compile(r"(\w+)\s*\(([^)]*)\)")


def _parse_transform(text: str) -> np.ndarray:
    """SVG transform list -> 3x3 homogeneous matrix."""
    mat = np.eye(3)
    for name, args in _TRANSFORM_RE.findall(text or ""):
        vals = [float(v) for v in re.split(r"[\s,]+", args.strip()) if v]
        step = np.eye(3)
        if name == "translate":
            tx = vals[0]
            ty = vals[1] if len(vals) > 1 else 0.0
            step[0, 2], step[1, 2] = tx, ty
        elif name == "scale":
            sx = vals[0]
            sy = vals[1] if len(vals) > 1 else sx
            step[0, 0], step[1, 1] = sx, sy
        elif name == "rotate":
            a = math.radians(vals[0])
            c, s = math.cos(a), math.sin(a)
            step[0, 0], step[0, 1] = c, -s
            step[1, 0], step[1, 1] = s, c
            if len(vals) == 3:
                cx, cy = vals[1], vals[2]
                pre = np.eye(3)
                pre[0, 2], pre[1, 2] = cx, cy
                post = np.eye(3)
                post[0, 2], post[1, 2] = -cx, -cy
                step = pre @ step @ post
        elif name == "matrix" and len(vals) == 6:
            a, b, c, d, e, f = vals
            step = np.array([[a, c, e], [b, d, f], [0.0, 0.0, 1.0]])
        elif name == "skewX":
            step[0, 1] = math.tan(math.radians(vals[0]))
        elif name == "skewY":
            step[1, 0] = math.tan(math.radians(vals[0]))
        else:
            raise ElementError("unsupported transform %r" % name)
        mat = mat @ step
    return mat


def _apply(mat: np.ndarray, pts: np.ndarray) -> np.ndarray:
    if len(pts) == 0:
        return pts
    h = np.c_[pts, np.ones(len(pts))]
    return (h @ mat.T)[:, :2]


# ------------------------------------------------------------- curve tools

def _circle_segment_count(radius: float, sweep: float) -> int:
    """Chords for an arc of ``sweep`` radians at ``radius``."""
    if radius <= 0:
        return 1
    frac = 1.0 - CHORD_DEVIATION / radius
    if frac <= -1.0:
        theta = math.pi
    else:
        theta = 2.0 * math.acos(max(frac, -1.0))
    by_dev = abs(sweep) / max(theta, 1e-9)
    by_floor = MIN_CIRCLE_SEGMENTS * abs(sweep) / (2.0 * math.pi)
    return max(1, math.ceil(max(by_dev, by_floor) - 1e-12))


def _flatten_cubic(p0, p1, p2, p3, out, depth=0):
    """Adaptive subdivision until control points sit within tolerance of
    the chord."""
    d1 = _point_line_dist(p1, p0, p3)
    d2 = _point_line_dist(p2, p0, p3)
    if (d1 <= CHORD_DEVIATION and d2 <= CHORD_DEVIATION) or depth >= 24:
        out.append(p3)
        return
    p01 = 0.5 * (p0 + p1)
    p12 = 0.5 * (p1 + p2)
    p23 = 0.5 * (p2 + p3)
    p012 = 0.5 * (p01 + p12)
    p123 = 0.5 * (p12 + p23)
    mid = 0.5 * (p012 + p123)
    _flatten_cubic(p0, p01, p012, mid, out, depth + 1)
    _flatten_cubic(mid, p123, p23, p3, out, depth + 1)


def _point_line_dist(p, a, b):
    ab = b - a
    n = math.hypot(ab[0], ab[1])
    if n < 1e-30:
        return math.hypot(*(p - a))
    return abs(ab[0] * (p[1] - a[1]) - ab[1] * (p[0] - a[0])) / n


def _arc_points(p0, rx, ry, rot_deg, large, sweep, p1):
    """Endpoint-parameterised elliptical arc -> polyline (excluding p0)."""
    if rx == 0 or ry == 0 or np.allclose(p0, p1):
        return [np.asarray(p1, float)]
    rx, ry = abs(rx), abs(ry)
    phi = math.radians(rot_deg)
    cp, sp = math.cos(phi), math.sin(phi)
    # to the ellipse-aligned frame
    dx, dy = (p0[0] - p1[0]) / 2.0, (p0[1] - p1[1]) / 2.0
    x1 = cp * dx + sp * dy
    y1 = -sp * dx + cp * dy
    lam = (x1 / rx) ** 2 + (y1 / ry) ** 2
    if lam > 1.0:  # radii too small: scale up per the W3C rules
        s = math.sqrt(lam)
        rx *= s
        ry *= s
    num = rx * rx * ry * ry - rx * rx * y1 * y1 - ry * ry * x1 * x1
    den = rx * rx * y1 * y1 + ry * ry * x1 * x1
    co = math.sqrt(max(num, 0.0) / den)
    if large == sweep:
        co = -co
    cxp = co * rx * y1 / ry
    cyp = -co * ry * x1 / rx
    cx = cp * cxp - sp * cyp + (p0[0] + p1[0]) / 2.0
    cy = sp * cxp + cp * cyp + (p0[1] + p1[1]) / 2.0

    def angle(ux, uy, vx, vy):
        dot = ux * vx + uy * vy
        n = math.hypot(ux, uy) * math.hypot(vx, vy)
        a = math.acos(max(-1.0, min(1.0, dot / n)))
        if ux * vy - uy * vx < 0:
            a = -a
        return a

    t1 = angle(1.0, 0.0, (x1 - cxp) / rx, (y1 - cyp) / ry)
    dt = angle((x1 - cxp) / rx, (y1 - cyp) / ry, (-x1 - cxp) / rx, (-y1 - cyp) / ry)
    if not sweep and dt > 0:
        dt -= 2.0 * math.pi
    elif sweep and dt < 0:
        dt += 2.0 * math.pi
    n = _circle_segment_count(max(rx, ry), dt)
    pts = []
    for i in range(1, n + 1):
        t = t1 + dt * i / n
        x = cx + rx * math.cos(t) * cp - ry * math.sin(t) * sp
        y = cy + rx * math.cos(t) * sp + ry * math.sin(t) * cp
        pts.append(np.array([x, y]))
    pts[-1] = np.asarray(p1, float)
    return pts


# ------------------------------------------------------------- path parser

_TOKEN_RE = re.compile(
    r"[MmLlHhVvCcSsQqTtAaZz]|[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
)


def _path_rings(d: str) -> list[np.ndarray]:
    """Flatten one ``path`` ``d`` string into closed rings."""
    tokens = _TOKEN_RE.findall(d)
    pos = 0

    def need(n):
        nonlocal pos
        if pos + n > len(tokens):
            raise ElementError("path data ended mid-command")
        try:
            vals = [float(t) for t in tokens[pos:pos + n]]
        except ValueError as exc:
            raise ElementError("malformed path data near %r" % tokens[pos]) from exc
        pos += n
        return vals

    rings: list[np.ndarray] = []
    cur = np.zeros(2)
    start = np.zeros(2)
    pts: list[np.ndarray] = []
    prev_cubic_ctrl = None
    prev_quad_ctrl = None
    cmd = None
    closed = False

    def finish(require_closed):
        nonlocal pts, closed
        if len(pts) >= 3:
            if not require_closed or closed:
                arr = np.array(pts)
                if np.allclose(arr[0], arr[-1]):
                    arr = arr[:-1]
                if len(arr) >= 3:
                    rings.append(arr)
        pts = []
        closed = False

    while pos < len(tokens):
        tok = tokens[pos]
        if tok.isalpha():
            cmd = tok
            pos += 1
        elif cmd is None:
            raise ElementError("path data must start with a move command")
        elif cmd in ("z", "Z"):
            raise ElementError("coordinates may not follow a close command")
        rel = cmd.islower()
        op = cmd.lower()
        if op == "m":
            x, y = need(2)
            p = cur + (x, y) if rel else np.array([x, y])
            finish(require_closed=True)
            cur = start = p
            pts = [p]
            cmd = "l" if rel else "L"  # extra pairs are implicit linetos
            prev_cubic_ctrl = prev_quad_ctrl = None
        elif op == "l":
            x, y = need(2)
            cur = cur + (x, y) if rel else np.array([x, y])
            pts.append(cur)
            prev_cubic_ctrl = prev_quad_ctrl = None
        elif op == "h":
            (x,) = need(1)
            cur = np.array([cur[0] + x if rel else x, cur[1]])
            pts.append(cur)
            prev_cubic_ctrl = prev_quad_ctrl = None
        elif op == "v":
            (y,) = need(1)
            cur = np.array([cur[0], cur[1] + y if rel else y])
            pts.append(cur)
            prev_cubic_ctrl = prev_quad_ctrl = None
        elif op in ("c", "s"):
            if op == "c":
                x1, y1, x2, y2, x, y = need(6)
                c1 = cur + (x1, y1) if rel else np.array([x1, y1])
            else:
                x2, y2, x, y = need(4)
                c1 = (
                    2.0 * cur - prev_cubic_ctrl
                    if prev_cubic_ctrl is not None
                    else cur
                )
            c2 = cur + (x2, y2) if rel else np.array([x2, y2])
            end = cur + (x, y) if rel else np.array([x, y])
            seg: list[np.ndarray] = []
            _flatten_cubic(cur, c1, c2, end, seg)
            pts.extend(seg)
            prev_cubic_ctrl = c2
            prev_quad_ctrl = None
            cur = end
        elif op in ("q", "t"):
            if op == "q":
                x1, y1, x, y = need(4)
                qc = cur + (x1, y1) if rel else np.array([x1, y1])
            else:
                x, y = need(2)
                qc = (
                    2.0 * cur - prev_quad_ctrl
                    if prev_quad_ctrl is not None
                    else cur
                )
            end = cur + (x, y) if rel else np.array([x, y])
            # exact degree elevation to a cubic
            c1 = cur + 2.0 / 3.0 * (qc - cur)
            c2 = end + 2.0 / 3.0 * (qc - end)
            seg = []
            _flatten_cubic(cur, c1, c2, end, seg)
            pts.extend(seg)
            prev_quad_ctrl = qc
            prev_cubic_ctrl = None
            cur = end
        elif op == "a":
            rx, ry, rot, large, sweep, x, y = need(7)
            end = cur + (x, y) if rel else np.array([x, y])
            pts.extend(_arc_points(cur, rx, ry, rot, bool(large), bool(sweep), end))
            cur = end
            prev_cubic_ctrl = prev_quad_ctrl = None
        elif op == "z":
            closed = True
            cur = start
            finish(require_closed=True)
            prev_cubic_ctrl = prev_quad_ctrl = None
        else:
            raise ElementError("unsupported path command %r" % cmd)
    finish(require_closed=True)
    return rings


# ------------------------------------------------------------ basic shapes

def _ellipse_ring(cx, cy, rx, ry):
    n = _circle_segment_count(max(rx, ry), 2.0 * math.pi)
    t = np.linspace(0.0, 2.0 * math.pi, n, endpoint=False)
    return np.c_[cx + rx * np.cos(t), cy + ry * np.sin(t)]


def _rect_rings(node) -> list[np.ndarray]:
    x = float(node.get("x", 0))
    y = float(node.get("y", 0))
    w = float(node.get("width", 0))
    h = float(node.get("height", 0))
    if w <= 0 or h <= 0:
        raise ElementError("rect needs positive width and height")
    return [np.array([[x, y], [x + w, y], [x + w, y + h], [x, y + h]])]


def _shape_rings(node, tag: str) -> list[np.ndarray]:
    if tag == "path":
        return _path_rings(node.get("d", ""))
    if tag == "rect":
        return _rect_rings(node)
    if tag == "circle":
        r = float(node.get("r", 0))
        if r <= 0:
            raise ElementError("circle needs a positive radius")
        return [_ellipse_ring(float(node.get("cx", 0)), float(node.get("cy", 0)), r, r)]
    if tag == "ellipse":
        rx = float(node.get("rx", 0))
        ry = float(node.get("ry", 0))
        if rx <= 0 or ry <= 0:
            raise ElementError("ellipse needs positive radii")
        return [
            _ellipse_ring(float(node.get("cx", 0)), float(node.get("cy", 0)), rx, ry)
        ]
    if tag == "polygon":
        nums = [float(v) for v in re.split(r"[\s,]+", node.get("points", "").strip()) if v]
        if len(nums) < 6 or len(nums) % 2:
            raise ElementError("polygon needs at least three x,y pairs")
        return [np.array(nums).reshape(-1, 2)]
    return []


# ------------------------------------------------------------- document IO

def _root_scale(root) -> float:
    """Physical-unit scale factor from width/viewBox, else 1:1."""
    width = root.get("width")
    viewbox = root.get("viewBox")
    if not width or not viewbox:
        return 1.0
    m = re.fullmatch(r"\s*([0-9.eE+-]+)\s*([a-z%]*)\s*", width)
    if not m or m.group(2) in ("", "px", "%"):
        return 1.0
    unit = m.group(2)
    if unit not in _UNIT_MM:
        raise ElementError("unsupported length unit %r" % unit)
    phys = float(m.group(1)) * _UNIT_MM[unit]
    vb = [float(v) for v in re.split(r"[\s,]+", viewbox.strip()) if v]
    if len(vb) != 4 or vb[2] <= 0:
        return 1.0
    return phys / vb[2]


def _local_tag(node) -> str:
    return node.tag.rsplit("}", 1)[-1]


def _collect_rings(node, mat, rings):
    tag = _local_tag(node)
    mat = mat @ _parse_transform(node.get("transform", ""))
    if tag in ("path", "rect", "circle", "ellipse", "polygon"):
        for ring in _shape_rings(node, tag):
            rings.append(_apply(mat, ring))
    for child in node:
        _collect_rings(child, mat, rings)


def load_element(data: bytes) -> TextureElement:
    """Parse a vector document into a centred texture element."""
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise ElementError("not a valid XML document: %s" % exc) from exc
    if _local_tag(root) != "svg":
        raise ElementError("document root is not <svg>")
    scale = _root_scale(root)
    mat = np.diag([scale, scale, 1.0])
    rings: list[np.ndarray] = []
    _collect_rings(root, mat, rings)
    rings = [r for r in rings if len(r) >= 3 and abs(ring_area(r)) > 1e-12]
    if not rings:
        raise ElementError("document contains no closed shape")
    for ring in rings:
        if not ring_is_simple(ring):
            raise ElementError("self-intersecting path")
    poly = _classify_rings(rings)
    cx, cy = poly.centroid()
    poly = poly.translated(-cx, -cy)
    lo = poly.outer.min(axis=0)
    hi = poly.outer.max(axis=0)
    size = float(np.hypot(*(hi - lo)))
    return TextureElement(shape=poly, nominal_size=size)


def _classify_rings(rings: list[np.ndarray]) -> Polygon2:
    """Even-odd containment: depth-0 ring is the outer, depth-1 are holes."""
    reps = [r[0] for r in rings]
    depth = []
    for i, p in enumerate(reps):
        d = 0
        for j, ring in enumerate(rings):
            if i != j and point_in_ring(p[0], p[1], ring):
                d += 1
        depth.append(d)
    outers = [i for i, d in enumerate(depth) if d % 2 == 0]
    if len(outers) != 1:
        raise ElementError(
            "element must be a single region (found %d separate outlines)"
            % len(outers)
        )
    if any(d > 1 for d in depth):
        raise ElementError("nested islands inside holes are not supported")
    outer = rings[outers[0]]
    holes = [rings[i] for i, d in enumerate(depth) if d == 1]
    try:
        poly = Polygon2(outer, tuple(holes))
        poly.validate()
    except PolygonError as exc:
        raise ElementError(str(exc)) from exc
    return poly
