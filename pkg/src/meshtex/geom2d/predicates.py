"""Robust 2D orientation and incircle predicates.

Each predicate evaluates a float expression first and accepts its sign
when the magnitude clears a forward error bound; otherwise it re-runs
the computation in exact rational arithmetic.  Coordinates stay floats.
"""

from __future__ import annotations

from fractions import Fraction

# forward error bounds for double arithmetic (Shewchuk-style, slightly padded)
_ORIENT_BOUND = 4.0e-16
_INCIRCLE_BOUND = 2.0e-15


def orient2d_val(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> float:
    """Raw signed doubled area of triangle abc (positive = CCW). Not robust."""
    return (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)


def orient2d_sign(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> int:
    """Sign of orient2d, exact."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _ORIENT_BOUND * detsum:
        return 1 if det > 0 else -1
    return _orient2d_exact(ax, ay, bx, by, cx, cy)


def _orient2d_exact(ax, ay, bx, by, cx, cy) -> int:
    det = (Fraction(ax) - Fraction(cx)) * (Fraction(by) - Fraction(cy)) - (
        Fraction(ay) - Fraction(cy)
    ) * (Fraction(bx) - Fraction(cx))
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def incircle_sign(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    """Sign of the incircle determinant: positive when d lies strictly
    inside the circumcircle of CCW triangle abc, exact."""
    adx = ax - dx
    ady = ay - dy
    bdx = bx - dx
    bdy = by - dy
    cdx = cx - dx
    cdy = cy - dy

    bdxcdy = bdx * cdy
    cdxbdy = cdx * bdy
    alift = adx * adx + ady * ady

    cdxady = cdx * ady
    adxcdy = adx * cdy
    blift = bdx * bdx + bdy * bdy

    adxbdy = adx * bdy
    bdxady = bdx * ady
    clift = cdx * cdx + cdy * cdy

    det = (
        alift * (bdxcdy - cdxbdy)
        + blift * (cdxady - adxcdy)
        + clift * (adxbdy - bdxady)
    )
    permanent = (
        alift * (abs(bdxcdy) + abs(cdxbdy))
        + blift * (abs(cdxady) + abs(adxcdy))
        + clift * (abs(adxbdy) + abs(bdxady))
    )
    if abs(det) > _INCIRCLE_BOUND * permanent:
        return 1 if det > 0 else -1
    return _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy)


def _incircle_exact(ax, ay, bx, by, cx, cy, dx, dy) -> int:
    fax, fay = Fraction(ax) - Fraction(dx), Fraction(ay) - Fraction(dy)
    fbx, fby = Fraction(bx) - Fraction(dx), Fraction(by) - Fraction(dy)
    fcx, fcy = Fraction(cx) - Fraction(dx), Fraction(cy) - Fraction(dy)
    det = (
        (fax * fax + fay * fay) * (fbx * fcy - fcx * fby)
        + (fbx * fbx + fby * fby) * (fcx * fay - fax * fcy)
        + (fcx * fcx + fcy * fcy) * (fax * fby - fbx * fay)
    )
    if det > 0:
        return 1
    if det < 0:
        return -1
    return 0


def on_segment(px, py, qx, qy, rx, ry) -> bool:
    """True when r lies exactly on the closed segment pq (collinear + between)."""
    if orient2d_sign(px, py, qx, qy, rx, ry) != 0:
        return False
    return (
        min(px, qx) <= rx <= max(px, qx)
        and min(py, qy) <= ry <= max(py, qy)
    )
