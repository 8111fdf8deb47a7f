"""Convex polygon helpers for feasibility regions in the unit square.

A half-plane is a triple ``(a, b, c)`` meaning ``a*x + b*y + c >= 0``.
"""

from __future__ import annotations

import math

import numpy as np

UNIT_SQUARE = ((0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0))
MERGE_TOL = 1e-12


def clip(polygon, halfplane):
    """Sutherland-Hodgman clip of a convex polygon by one half-plane."""
    a, b, c = halfplane
    out = []
    n = len(polygon)
    for i in range(n):
        p, q = polygon[i], polygon[(i + 1) % n]
        fp = a * p[0] + b * p[1] + c
        fq = a * q[0] + b * q[1] + c
        if fp >= 0:
            out.append(p)
        if (fp >= 0) != (fq >= 0):
            t = fp / (fp - fq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    return out


def intersect_unit_square(halfplanes):
    poly = list(UNIT_SQUARE)
    for hp in halfplanes:
        poly = clip(poly, hp)
        if not poly:
            return []
    return poly


def canonical_vertices(points):
    """Deduplicate, drop collinear interior points and order counterclockwise
    starting from the lexicographically smallest vertex."""
    uniq = []
    for x, y in points:
        x, y = float(x) + 0.0, float(y) + 0.0
        if not any(math.hypot(x - u, y - v) <= MERGE_TOL for u, v in uniq):
            uniq.append((x, y))
    if len(uniq) <= 2:
        return sorted(uniq)
    # monotone-chain hull removes collinear points and fixes the orientation
    pts = sorted(uniq)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= MERGE_TOL:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= MERGE_TOL:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    return hull if len(hull) > 2 else sorted(hull)


def polygon_contains(vertices, x, y, tol=1e-12):
    """Vectorised closed membership test for a convex polygon, segment or point."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if not vertices:
        return np.zeros(np.broadcast(x, y).shape, dtype=bool)
    v = np.asarray(vertices, dtype=float)
    if len(v) == 1:
        return np.hypot(x - v[0, 0], y - v[0, 1]) <= tol
    if len(v) == 2:
        d = v[1] - v[0]
        t = np.clip(((x - v[0, 0]) * d[0] + (y - v[0, 1]) * d[1]) / (d @ d), 0.0, 1.0)
        return np.hypot(x - v[0, 0] - t * d[0], y - v[0, 1] - t * d[1]) <= tol
    inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
    for i in range(len(v)):
        p, q = v[i], v[(i + 1) % len(v)]
        e = q - p
        cross = e[0] * (y - p[1]) - e[1] * (x - p[0])
        inside &= cross >= -tol * np.hypot(e[0], e[1])
    return inside


def polygon_area(vertices):
    if len(vertices) < 3:
        return 0.0
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def format_halfplane(halfplane, xname="p_cc", yname="p_dd", op=">="):
    a, b, c = halfplane
    return f"{a:.6g}*{xname} + {b:.6g}*{yname} + {c:.6g} {op} 0".replace("+ -", "- ")
