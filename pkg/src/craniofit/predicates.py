"""Filtered exact geometric predicates for planar triangulation.

Fast float evaluation with a forward error bound; when the result is
too close to zero to trust, re-evaluate with exact rational arithmetic
(floats convert to Fraction losslessly). Returns are true signs, so the
triangulation code can rely on them unconditionally.
"""

from __future__ import annotations

from fractions import Fraction

_EPS = 2.0**-53
_CCW_BOUND = (3.0 + 16.0 * _EPS) * _EPS
_ICC_BOUND = (10.0 + 96.0 * _EPS) * _EPS


def orient2d(ax: float, ay: float, bx: float, by: float, cx: float, cy: float) -> int:
    """Sign of twice the signed area of triangle abc (+1 = CCW)."""
    detleft = (ax - cx) * (by - cy)
    detright = (ay - cy) * (bx - cx)
    det = detleft - detright
    detsum = abs(detleft) + abs(detright)
    if abs(det) > _CCW_BOUND * detsum:
        return 1 if det > 0 else -1
    # Exact fallback.
    axf, ayf = Fraction(ax), Fraction(ay)
    bxf, byf = Fraction(bx), Fraction(by)
    cxf, cyf = Fraction(cx), Fraction(cy)
    d = (axf - cxf) * (byf - cyf) - (ayf - cyf) * (bxf - cxf)
    return (d > 0) - (d < 0)


def incircle(
    ax: float, ay: float, bx: float, by: float,
    cx: float, cy: float, dx: float, dy: float,
) -> int:
    """+1 iff d lies strictly inside the circumcircle of CCW triangle abc."""
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
        (abs(bdxcdy) + abs(cdxbdy)) * alift
        + (abs(cdxady) + abs(adxcdy)) * blift
        + (abs(adxbdy) + abs(bdxady)) * clift
    )
    if abs(det) > _ICC_BOUND * permanent:
        return 1 if det > 0 else -1
    # Exact fallback.
    adxf, adyf = Fraction(ax) - Fraction(dx), Fraction(ay) - Fraction(dy)
    bdxf, bdyf = Fraction(bx) - Fraction(dx), Fraction(by) - Fraction(dy)
    cdxf, cdyf = Fraction(cx) - Fraction(dx), Fraction(cy) - Fraction(dy)
    d = (
        (adxf * adxf + adyf * adyf) * (bdxf * cdyf - cdxf * bdyf)
        + (bdxf * bdxf + bdyf * bdyf) * (cdxf * adyf - adxf * cdyf)
        + (cdxf * cdxf + cdyf * cdyf) * (adxf * bdyf - bdxf * adyf)
    )
    return (d > 0) - (d < 0)
