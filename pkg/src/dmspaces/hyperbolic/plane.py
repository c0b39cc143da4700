"""Upper half-plane primitives: points, geodesics, angles, polygons and clipping.

Points are complex numbers. A boundary (ideal) point is a real number
stored with zero imaginary part, and the point at infinity is ``IDEAL_INF``.
Geodesics are stored as ``(A, B, C)`` with ``A|z|^2 + B Re z + C = 0``:
``A = 0`` gives a vertical line, otherwise a semicircle centered on the axis.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

IDEAL_INF = complex(math.inf, 0.0)


class InvalidPolygonError(ValueError):
    """Raised for polygons with nonpositive angle-deficit area."""


@dataclass(frozen=True)
class HPoint:
    """A point of the open upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not self.y > 0:
            raise ValueError("HPoint requires y > 0")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)


@dataclass(frozen=True)
class IdealPoint:
    """A boundary point ``x`` on the real axis, or infinity when ``x`` is infinite."""

    x: float

    @property
    def z(self) -> complex:
        return IDEAL_INF if math.isinf(self.x) else complex(self.x, 0.0)


def as_complex(p) -> complex:
    if isinstance(p, (HPoint, IdealPoint)):
        return p.z
    return complex(p)


def is_infinite(z: complex) -> bool:
    return math.isinf(z.real) or math.isinf(z.imag)


def is_ideal(z: complex) -> bool:
    return is_infinite(z) or z.imag == 0.0


def hyp_distance(p, q) -> float:
    """Hyperbolic distance between two points of the open half-plane."""
    p, q = as_complex(p), as_complex(q)
    if not (p.imag > 0 and q.imag > 0) or is_infinite(p) or is_infinite(q):
        raise ValueError("hyp_distance needs points of the open half-plane")
    return 2.0 * math.asinh(abs(p - q) / (2.0 * math.sqrt(p.imag * q.imag)))


def hyp_distance_matrix(points: Sequence[complex]) -> np.ndarray:
    z = np.asarray(points, dtype=complex)
    diff = np.abs(z[:, None] - z[None, :])
    h = np.sqrt(np.outer(z.imag, z.imag))
    D = 2.0 * np.arcsinh(diff / (2.0 * h))
    np.fill_diagonal(D, 0.0)
    return D


# ---------------------------------------------------------------------------
# Geodesics


def geodesic(p: complex, q: complex) -> tuple[float, float, float]:
    """Coefficients of the complete geodesic through ``p`` and ``q``."""
    if is_infinite(p):
        p, q = q, p
    if is_infinite(q):
        return (0.0, 1.0, -p.real)
    if abs(p.real - q.real) <= 1e-15 * max(1.0, abs(p.real), abs(q.real)):
        return (0.0, 1.0, -p.real)
    c = (abs(q) ** 2 - abs(p) ** 2) / (2.0 * (q.real - p.real))
    r2 = abs(p - c) ** 2
    return (1.0, -2.0 * c, c * c - r2)


def geodesic_value(g, z: complex) -> float:
    A, B, C = g
    return A * abs(z) ** 2 + B * z.real + C


def meet(g1, g2) -> complex | None:
    """Intersection of two geodesics inside the half-plane, if any."""
    A1, B1, C1 = g1
    A2, B2, C2 = g2
    den = A2 * B1 - A1 * B2
    if den == 0:
        return None
    x = -(A2 * C1 - A1 * C2) / den
    A, B, C = g1 if A1 != 0 else g2
    y2 = -(B * x + C) / A - x * x
    if not y2 > 0:
        return None
    return complex(x, math.sqrt(y2))


def tangent_toward(v: complex, a: complex) -> complex:
    """Unit Euclidean tangent at finite ``v`` of the geodesic ray toward ``a``."""
    g = geodesic(v, a)
    if g[0] == 0:
        up = is_infinite(a) or a.imag > v.imag
        return complex(0.0, 1.0 if up else -1.0)
    c = -g[1] / 2.0
    phv = math.atan2(v.imag, v.real - c)
    pha = math.atan2(a.imag, a.real - c)
    t = 1j * (v - c) / abs(v - c)
    return t if pha > phv else -t


def angle_at(v: complex, a: complex, b: complex) -> float:
    """Interior angle at ``v`` between geodesics toward ``a`` and ``b`` (0 if ideal)."""
    if is_ideal(v):
        return 0.0
    ta, tb = tangent_toward(v, a), tangent_toward(v, b)
    w = ta.conjugate() * tb
    return abs(math.atan2(w.imag, w.real))


def point_along(u: complex, v: complex, t: float) -> complex:
    """Point at hyperbolic distance ``t`` from finite ``u`` toward ``v``."""
    tau = tangent_toward(u, v)
    a = cmath.phase(tau) - math.pi / 2
    c, s = math.cos(a / 2), math.sin(a / 2)
    w = 1j * math.exp(t)
    z = (c * w + s) / (-s * w + c)
    return complex(u.real + u.imag * z.real, u.imag * z.imag)


# ---------------------------------------------------------------------------
# Polygons


@dataclass(frozen=True)
class GeodesicPolygon:
    """Counterclockwise geodesic polygon; angle 0 at ideal vertices.

    Attributes:
        vertices: cyclic vertices as complex numbers (see module docstring).
        angles: interior angles in radians.
    """

    vertices: tuple
    angles: tuple

    @classmethod
    def from_vertices(cls, vertices: Sequence) -> "GeodesicPolygon":
        vs = tuple(as_complex(v) for v in vertices)
        k = len(vs)
        if k < 3:
            raise InvalidPolygonError("a polygon needs at least 3 vertices")
        angles = tuple(angle_at(vs[i], vs[i - 1], vs[(i + 1) % k]) for i in range(k))
        return cls(vs, angles)

    @property
    def ideal_count(self) -> int:
        return sum(1 for v in self.vertices if is_ideal(v))

    def side_lengths(self) -> list[float]:
        """Lengths of sides between finite vertices (INFINITY for ideal ends)."""
        out = []
        k = len(self.vertices)
        for i in range(k):
            p, q = self.vertices[i], self.vertices[(i + 1) % k]
            out.append(math.inf if is_ideal(p) or is_ideal(q) else hyp_distance(p, q))
        return out

    def apply(self, mobius) -> "GeodesicPolygon":
        """Image under an orientation-preserving Möbius map ``(a, b, c, d)``."""
        return GeodesicPolygon(tuple(mobius_apply(mobius, v) for v in self.vertices), self.angles)


def polygon_area(poly: GeodesicPolygon) -> float:
    """Angle deficit ``(n - 2) pi - sum(angles)``.

    Raises:
        InvalidPolygonError: the deficit is not positive.
    """
    k = len(poly.angles)
    area = (k - 2) * math.pi - math.fsum(poly.angles)
    if not area > 0:
        raise InvalidPolygonError(f"nonpositive area {area}")
    return area


def mobius_apply(m, z: complex) -> complex:
    a, b, c, d = m
    if is_infinite(z):
        return IDEAL_INF if c == 0 else complex(a / c, 0.0)
    den = c * z + d
    if den == 0:
        return IDEAL_INF
    w = (a * z + b) / den
    if z.imag == 0.0:
        return complex(w.real, 0.0)
    return w


# ---------------------------------------------------------------------------
# Clipping of convex polygons by geodesic half-planes


def _interior_sign(p: complex, q: complex, g) -> float:
    """Sign of ``g`` on the left of the directed geodesic ``p -> q``."""
    A, B, _ = g
    if not is_ideal(p):
        m, tau = p, tangent_toward(p, q)
    elif not is_ideal(q):
        m, tau = q, -tangent_toward(q, p)
    else:
        if A == 0:
            x = q.real if is_infinite(p) else p.real
            m = complex(x, 1.0)
            tau = complex(0.0, 1.0 if is_infinite(q) else -1.0)
        else:
            c = -B / (2 * A)
            r = math.sqrt(max(c * c - g[2] / A, 0.0))
            m = complex(c, r)
            tau = complex(1.0 if q.real > c else -1.0, 0.0)
    n = 1j * tau
    grad = complex(2 * A * m.real + B, 2 * A * m.imag)
    return 1.0 if (grad.real * n.real + grad.imag * n.imag) > 0 else -1.0


def halfplane(poly: Sequence[complex], i: int):
    """Geodesic of side ``i`` signed positive on the polygon's interior."""
    p, q = poly[i], poly[(i + 1) % len(poly)]
    g = geodesic(p, q)
    s = _interior_sign(p, q, g)
    return (s * g[0], s * g[1], s * g[2])


def oriented_sides(poly: Sequence[complex], lines: Sequence | None = None) -> list[tuple[float, float, float]]:
    """Interior-positive geodesic of every side of a counterclockwise polygon.

    Args:
        poly: vertices.
        lines: optional precomputed side geodesics (any sign); only their
            orientation is taken from the vertices.
    """
    if lines is None:
        return [halfplane(poly, i) for i in range(len(poly))]
    out = []
    k = len(poly)
    for i, g in enumerate(lines):
        s = _interior_sign(poly[i], poly[(i + 1) % k], g)
        out.append((s * g[0], s * g[1], s * g[2]))
    return out


def _side(g, z: complex, tol: float = 1e-13) -> int:
    """Side of ``g`` containing ``z``; 0 when within ``tol`` hyperbolic distance
    of the line or within the rounding noise of evaluating ``g`` at ``z``."""
    A, B, C = g
    if is_infinite(z):
        return 0 if A == 0 else (1 if A > 0 else -1)
    f = geodesic_value(g, z)
    grad = math.hypot(2 * A * z.real + B, 2 * A * z.imag)
    scale = abs(A) * abs(z) ** 2 + abs(B) * abs(z.real) + abs(C)
    noise = 16 * 2.2e-16 * scale
    if grad == 0 or abs(f) <= max(noise, tol * grad * max(z.imag, 1e-300)):
        return 0
    return 1 if f > 0 else -1


def _same(u: complex, v: complex) -> bool:
    if is_infinite(u) or is_infinite(v):
        return is_infinite(u) and is_infinite(v)
    return abs(u - v) <= 1e-12 * max(1.0, abs(u))


def _direction(g, v: complex) -> complex:
    """Unit tangent at ``v`` along oriented ``g`` (interior on the left)."""
    A, B, _ = g
    grad = complex(2 * A * v.real + B, 2 * A * v.imag)
    return -1j * grad / abs(grad)


def angles_from_sides(vertices: Sequence[complex], sides: Sequence, known: Sequence | None = None
                      ) -> tuple[float, ...]:
    """Interior angles computed from the oriented side geodesics alone.

    Args:
        vertices: polygon vertices.
        sides: oriented geodesic of each side.
        known: optional exact angles (``None`` entries are computed).
    """
    k = len(vertices)
    out = []
    for i in range(k):
        v = vertices[i]
        if known is not None and known[i] is not None:
            out.append(known[i])
            continue
        if is_ideal(v):
            out.append(0.0)
            continue
        t_out = _direction(sides[i], v)
        t_back = -_direction(sides[i - 1], v)
        w = t_back.conjugate() * t_out
        out.append(abs(math.atan2(w.imag, w.real)))
    return tuple(out)


@dataclass(frozen=True)
class ConvexRegion:
    """Convex polygon kept as vertices, oriented side geodesics and exact angles.

    Clipping keeps the original geodesic of every surviving side and the
    exact angle of every surviving vertex whose two sides are unchanged, so
    repeated clipping never refits a side through computed points.
    """

    vertices: tuple
    sides: tuple
    known: tuple

    @classmethod
    def from_polygon(cls, poly: "GeodesicPolygon", lines: Sequence | None = None,
                     exact_angles: bool = True) -> "ConvexRegion":
        vs = tuple(poly.vertices)
        sides = tuple(oriented_sides(vs, lines))
        known = tuple(poly.angles) if exact_angles else (None,) * len(vs)
        return cls(vs, sides, known)

    def polygon(self) -> "GeodesicPolygon":
        return GeodesicPolygon(self.vertices, angles_from_sides(self.vertices, self.sides, self.known))

    def clip(self, g) -> "ConvexRegion":
        """Part where ``g >= 0``."""
        out: list[list] = []  # [vertex, outgoing side, (angle, in_side, out_side) or None]

        def emit(v, line, tag):
            if out and _same(v, out[-1][0]):
                out[-1][1] = line
                return
            out.append([v, line, tag])

        poly, sides = self.vertices, self.sides
        k = len(poly)
        for i in range(k):
            p, q, line = poly[i], poly[(i + 1) % k], sides[i]
            tag = (self.known[i], sides[i - 1], line) if self.known[i] is not None else None
            sp, sq = _side(g, p), _side(g, q)
            if sp > 0 and sq < 0:
                emit(p, line, tag)
                m = meet(line, g)
                if m is not None:
                    emit(m, g, None)
            elif sp == 0 and sq < 0:
                emit(p, g, tag)
            elif sp >= 0:
                emit(p, line, tag)
            elif sp < 0 and sq > 0:
                m = meet(line, g)
                if m is not None:
                    emit(m, line, None)
        if len(out) > 1 and _same(out[0][0], out[-1][0]):
            out.pop()
        n = len(out)
        known = []
        for j in range(n):
            tag = out[j][2]
            ok = tag is not None and tag[1] is out[j - 1][1] and tag[2] is out[j][1]
            known.append(tag[0] if ok else None)
        return ConvexRegion(tuple(o[0] for o in out), tuple(o[1] for o in out), tuple(known))


def intersect_regions(P: ConvexRegion, Q: ConvexRegion) -> ConvexRegion | None:
    R = P
    for h in Q.sides:
        if len(R.vertices) < 3:
            return None
        R = R.clip(h)
    return R if len(R.vertices) >= 3 else None


def difference_regions(P: ConvexRegion, Q: ConvexRegion) -> list[ConvexRegion]:
    """Convex pieces covering ``P - Q``, split along the sides of ``Q``."""
    pieces = []
    R = P
    for h in Q.sides:
        neg = R.clip(tuple(-c for c in h))
        if len(neg.vertices) >= 3:
            pieces.append(neg)
        R = R.clip(h)
        if len(R.vertices) < 3:
            break
    return pieces


def intersect(P: Sequence[complex], Q: Sequence[complex]) -> list[complex]:
    """Intersection of two convex polygons given by vertices (empty when degenerate)."""
    R = intersect_regions(ConvexRegion.from_polygon(GeodesicPolygon.from_vertices(P), exact_angles=False),
                          ConvexRegion.from_polygon(GeodesicPolygon.from_vertices(Q), exact_angles=False))
    return list(R.vertices) if R is not None else []


def difference_pieces(P: Sequence[complex], Q: Sequence[complex]) -> list["GeodesicPolygon"]:
    """Convex pieces covering ``P - Q`` for polygons given by vertices."""
    RP = ConvexRegion.from_polygon(GeodesicPolygon.from_vertices(P), exact_angles=False)
    RQ = ConvexRegion.from_polygon(GeodesicPolygon.from_vertices(Q), exact_angles=False)
    return [r.polygon() for r in difference_regions(RP, RQ)]


# ---------------------------------------------------------------------------
# Frames (moving orthonormal frames as PSL(2, R) matrices)


def frame_identity() -> np.ndarray:
    """Frame at ``i`` heading up the imaginary axis."""
    return np.eye(2)


def frame_walk(g: np.ndarray, t: float) -> np.ndarray:
    return g @ np.array([[math.exp(t / 2), 0.0], [0.0, math.exp(-t / 2)]])


def frame_turn(g: np.ndarray, a: float) -> np.ndarray:
    """Rotate the heading counterclockwise by ``a``."""
    c, s = math.cos(a / 2), math.sin(a / 2)
    return g @ np.array([[c, s], [-s, c]])


def frame_point(g: np.ndarray) -> complex:
    a, b, c, d = g.ravel()
    return (a * 1j + b) / (c * 1j + d)


def frame_line(g: np.ndarray) -> tuple[float, float, float]:
    """Geodesic along the current heading, from its endpoints ``g(0)`` and ``g(inf)``."""
    a, b, c, d = g.ravel()
    if c == 0 or abs(c) <= 1e-14 * abs(a):
        return (0.0, 1.0, -b / d)
    if d == 0 or abs(d) <= 1e-14 * abs(b):
        return (0.0, 1.0, -a / c)
    e1, e2 = b / d, a / c
    return (1.0, -(e1 + e2), e1 * e2)


def frame_ideal_ahead(g: np.ndarray) -> complex:
    """Endpoint reached by walking forever along the current heading."""
    a, _, c, _ = g.ravel()
    if abs(c) <= 1e-300 or abs(c) <= 1e-14 * abs(a):
        return IDEAL_INF
    return complex(a / c, 0.0)


# ---------------------------------------------------------------------------
# Models


def to_klein(z: complex) -> complex:
    """Half-plane point (or ideal point) to the Klein disk."""
    if is_infinite(z):
        return complex(1.0, 0.0)
    w = (z - 1j) / (z + 1j)
    return 2 * w / (1 + abs(w) ** 2)


def from_klein(k: complex) -> complex:
    """Klein disk point to the half-plane (boundary points map to ideal points)."""
    r2 = abs(k) ** 2
    w = k / (1 + math.sqrt(max(0.0, 1 - r2)))
    if abs(1 - w) <= 1e-15:
        return IDEAL_INF
    z = 1j * (1 + w) / (1 - w)
    if r2 >= 1.0 - 1e-15:
        return complex(z.real, 0.0)
    return z
