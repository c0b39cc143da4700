"""Right-angled hexagons, their degenerations and symmetric differences.

Sides are walked counterclockwise in the order ``b1, a3, b2, a1, b3, a2``,
where ``a_k`` is the side opposite ``b_k``. A zero ``b_k`` collapses to an
ideal vertex and its two neighboring ``a`` sides become infinite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plane import (
    GeodesicPolygon,
    _direction,
    _side,
    frame_line,
    oriented_sides,
    angle_at,
    ConvexRegion,
    difference_regions,
    frame_ideal_ahead,
    frame_identity,
    frame_point,
    frame_turn,
    frame_walk,
    geodesic,
    intersect_regions,
    is_ideal,
    meet,
    polygon_area,
    tangent_toward,
)

SIDE_NAMES = ("b1", "a3", "b2", "a1", "b3", "a2")


class NonAlignableError(ValueError):
    """Raised when two hexagons have no canonical common embedding."""


@dataclass(frozen=True)
class HexagonSpec:
    """Alternate side lengths ``b1, b2, b3`` (0 encodes an ideal vertex)."""

    b1: float
    b2: float
    b3: float

    def __post_init__(self):
        for v in (self.b1, self.b2, self.b3):
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError("hexagon sides must be finite and nonnegative")

    @property
    def b(self) -> tuple[float, float, float]:
        return (float(self.b1), float(self.b2), float(self.b3))

    def mirrored(self) -> "HexagonSpec":
        """Sides of the mirror image read from ``b3``."""
        return HexagonSpec(self.b3, self.b2, self.b1)


def _opposite(bi: float, bj: float, bk: float) -> float:
    den = math.sinh(bi) * math.sinh(bj)
    if den == 0:
        return math.inf
    return math.acosh((math.cosh(bi) * math.cosh(bj) + math.cosh(bk)) / den)


def a_sides(spec: HexagonSpec) -> tuple[float, float, float]:
    """``(a1, a2, a3)`` from right-angled hexagon trigonometry."""
    b1, b2, b3 = spec.b
    return (_opposite(b2, b3, b1), _opposite(b3, b1, b2), _opposite(b1, b2, b3))


def side_lengths(spec: HexagonSpec) -> tuple[float, ...]:
    """Lengths in walking order ``b1, a3, b2, a1, b3, a2``."""
    a1, a2, a3 = a_sides(spec)
    b1, b2, b3 = spec.b
    return (b1, a3, b2, a1, b3, a2)


@dataclass(frozen=True)
class HexagonLayout:
    """An embedded (possibly degenerate) hexagon.

    Attributes:
        spec: side data.
        polygon: counterclockwise vertices with interior angles.
        edges: side name of each polygon edge ``vertices[i] -> vertices[i + 1]``.
        lines: geodesic of each edge, read off the walking frames.
    """

    spec: HexagonSpec
    polygon: GeodesicPolygon
    edges: tuple[str, ...]
    lines: tuple = ()

    def line(self, name: str):
        return self.lines[self.edges.index(name)]

    def edge(self, name: str) -> tuple[complex, complex]:
        i = self.edges.index(name)
        vs = self.polygon.vertices
        return vs[i], vs[(i + 1) % len(vs)]

    def region(self) -> ConvexRegion:
        """Clippable form keeping the exact right (or zero) angles."""
        return ConvexRegion(self.polygon.vertices, self.lines, self.polygon.angles)


def layout_hexagon(spec: HexagonSpec, start_side: int | None = None, frame: np.ndarray | None = None
                   ) -> HexagonLayout:
    """Embed a hexagon by walking its sides from a finite starting vertex.

    Args:
        spec: side data.
        start_side: index into ``SIDE_NAMES`` of the side walked first; its
            starting vertex sits at the frame origin. Defaults to the first
            positive ``b`` side.
        frame: starting frame (defaults to ``i`` heading up).
    """
    L = side_lengths(spec)
    g0 = frame_identity() if frame is None else frame
    if start_side is None:
        start_side = next((k for k in (0, 2, 4) if L[k] > 0), None)
    if start_side is None:
        poly = GeodesicPolygon.from_vertices([complex(-1.0, 0.0), complex(1.0, 0.0), complex(math.inf, 0.0)])
        vs = poly.vertices
        return HexagonLayout(spec, poly, ("a3", "a1", "a2"),
                             tuple(geodesic(vs[i], vs[(i + 1) % 3]) for i in range(3)))
    s = start_side
    if L[s] == 0 or math.isinf(L[(s - 1) % 6]) and math.isinf(L[s]) or L[(s - 1) % 6] == 0:
        raise ValueError("the starting vertex must be finite")
    # Walk at most two sides forward and the rest backward, so that no
    # vertex is reached through a long side (frame error grows like e^{L/2}).
    fv: list[complex] = []
    fl: list[str] = []
    fln: list = []
    g = g0
    kf = None
    nf = 0

    def forward(limit):
        nonlocal g, kf, nf
        while nf < limit:
            k = (s + nf) % 6
            if math.isinf(L[k]):
                kf = k
                return
            fln.append(frame_line(g))
            g = frame_turn(frame_walk(g, L[k]), math.pi / 2)
            fl.append(SIDE_NAMES[k])
            fv.append(frame_point(g))
            nf += 1

    bv: list[complex] = []
    bl: list[str] = []
    bln: list = []
    h = frame_turn(g0, math.pi / 2)
    kb = None
    nb = 0

    def backward(limit):
        nonlocal h, kb, nb
        while nb < limit:
            k = (s - 1 - nb) % 6
            if math.isinf(L[k]):
                kb = k
                return
            bln.append(frame_line(h))
            h = frame_turn(frame_walk(h, L[k]), -math.pi / 2)
            bl.append(SIDE_NAMES[k])
            bv.append(frame_point(h))
            nb += 1

    forward(2)
    backward(3)
    if kf is None and kb is not None:
        forward(6 - nb)
    elif kb is None and kf is not None:
        backward(6 - nf)
    vs = [frame_point(g0)] + fv
    labels = list(fl)
    lines = list(fln)
    if kf is None and kb is None:
        # closed: the side after the forward frontier joins the two walks
        labels.append(SIDE_NAMES[(s + nf) % 6])
        lines.append(frame_line(g if np.abs(g).max() <= np.abs(h).max() else h))
    else:
        vs.append(frame_ideal_ahead(g))
        labels.append(SIDE_NAMES[kf])
        lines.append(frame_line(g))
        gap = [(kf + j) % 6 for j in range(1, (kb - kf) % 6)]
        if len(gap) == 3:
            vs.append(frame_ideal_ahead(h))
            labels.append(SIDE_NAMES[gap[1]])
            lines.append(geodesic(vs[-2], vs[-1]))
            labels.append(SIDE_NAMES[kb])
            lines.append(frame_line(h))
        elif len(gap) == 1:
            # both rays end at the same ideal vertex: use that exact point
            labels.append(SIDE_NAMES[kb])
            lines.append(geodesic(vs[-1], bv[-1] if bv else vs[0]))
        else:
            raise AssertionError("unexpected degenerate pattern")
    for j in range(len(bv) - 1, -1, -1):
        vs.append(bv[j])
        labels.append(bl[j])
        lines.append(bln[j])
    sides = oriented_sides(vs, lines)
    poly = GeodesicPolygon(tuple(vs), tuple(0.0 if is_ideal(v) else math.pi / 2 for v in vs))
    return HexagonLayout(spec, poly, tuple(labels), tuple(sides))


def build_hexagon(spec: HexagonSpec) -> GeodesicPolygon:
    """Canonical embedding: the first positive ``b`` side starts at ``i`` going up.

    Zero sides produce ideal vertices; ``(0, 0, 0)`` is the ideal triangle
    with vertices ``-1, 1, infinity``.
    """
    return layout_hexagon(spec).polygon


def remeasured_b_sides(layout: HexagonLayout) -> dict[str, float]:
    """Hyperbolic lengths of the finite ``b`` edges of an embedded hexagon."""
    from .plane import hyp_distance

    out = {}
    for name in ("b1", "b2", "b3"):
        if name in layout.edges:
            p, q = layout.edge(name)
            out[name] = hyp_distance(p, q)
        else:
            out[name] = 0.0
    return out


# ---------------------------------------------------------------------------
# Symmetric difference


@dataclass(frozen=True)
class SymmetricDifference:
    """Symmetric difference of two commonly embedded hexagons.

    Attributes:
        area: sum of piece areas (angle deficits).
        pieces: convex pieces of ``(H1 - H2)`` followed by ``(H2 - H1)``.
        first_minus_second: number of leading pieces belonging to ``H1 - H2``.
        closed_form: ``pi - 2 theta - beta`` when exactly one spec has ``b2 = 0``
            and the finite ``b2`` side crosses the degenerate ``a1`` side; else None.
        theta: angle where the finite ``b2`` side crosses the degenerate ``a1`` side.
        beta: angle between the two ``b3`` lines (0 when they do not meet).
        layouts: the two embedded hexagons.
        mirrored: whether the comparison was anchored at ``b3``.
    """

    area: float
    pieces: tuple
    first_minus_second: int
    closed_form: float | None
    theta: float | None
    beta: float | None
    layouts: tuple
    mirrored: bool


def common_layouts(spec1: HexagonSpec, spec2: HexagonSpec) -> tuple[HexagonLayout, HexagonLayout, bool]:
    """Embed two hexagons sharing ``b1`` and ``b3`` with common ``b1, a2, a3`` lines.

    Both walks start at the ``b1``/``a3`` corner placed at ``i`` with ``a3``
    pointing up, so an ideal ``b2`` vertex lands exactly at infinity. When
    ``b1 = 0`` the mirror images anchored at ``b3`` are used.

    Raises:
        NonAlignableError: ``b1`` or ``b3`` differ, or both vanish.
    """
    if spec1.b1 != spec2.b1 or spec1.b3 != spec2.b3:
        raise NonAlignableError("hexagons must share b1 and b3")
    mirrored = False
    if spec1.b1 == 0:
        if spec1.b3 == 0:
            raise NonAlignableError("no positive shared side to align")
        spec1, spec2, mirrored = spec1.mirrored(), spec2.mirrored(), True
    return layout_hexagon(spec1, start_side=1), layout_hexagon(spec2, start_side=1), mirrored


def _line_angle(g1, g2) -> float:
    c = meet(g1, g2)
    if c is None:
        return 0.0
    t1, t2 = _direction(g1, c), _direction(g2, c)
    w = t1.conjugate() * t2
    ang = abs(math.atan2(w.imag, w.real))
    return min(ang, math.pi - ang)


def _contains(region: ConvexRegion, z: complex, tol: float = 1e-9) -> bool:
    return all(_side(g, z, tol) >= 0 for g in region.sides)


def _closed_form(finite: HexagonLayout, degenerate: HexagonLayout):
    """``pi - 2 theta - beta`` with both angles measured between side geodesics.

    ``theta`` is where the finite ``b2`` side crosses the degenerate ``a1``
    side (acute, since the triangle it cuts off toward the cusp has area
    ``pi/2 - theta``); ``beta`` is the angle between the two ``b3`` lines.
    """
    b2_line, a1_line = finite.line("b2"), degenerate.line("a1")
    c = meet(b2_line, a1_line)
    # the lines must cross on the sides themselves, not on their extensions
    if c is None or not (_contains(finite.region(), c) and _contains(degenerate.region(), c)):
        return None, None, None
    theta = _line_angle(b2_line, a1_line)
    has_b3 = "b3" in finite.edges and "b3" in degenerate.edges
    beta = _line_angle(finite.line("b3"), degenerate.line("b3")) if has_b3 else 0.0
    return math.pi - 2 * theta - beta, theta, beta


def symmetric_difference_area(spec1: HexagonSpec, spec2: HexagonSpec) -> SymmetricDifference:
    """Area of ``(H1 ∪ H2) - (H1 ∩ H2)`` from a convex decomposition.

    Each piece is a geodesic polygon whose area is its angle deficit. When
    exactly one of the specs has ``b2 = 0`` the closed form
    ``pi - 2 theta - beta`` is evaluated independently from the crossing
    angle ``theta`` and the ``b3`` line angle ``beta``.
    """
    H1, H2, mirrored = common_layouts(spec1, spec2)
    if spec1 == spec2:
        return SymmetricDifference(0.0, (), 0, 0.0 if spec1.b2 == 0 else None, None, None, (H1, H2), mirrored)
    R1, R2 = H1.region(), H2.region()
    d12 = [r.polygon() for r in difference_regions(R1, R2)]
    d21 = [r.polygon() for r in difference_regions(R2, R1)]
    pieces = tuple(d12 + d21)
    area = math.fsum(polygon_area(p) for p in pieces)
    closed = theta = beta = None
    b2a, b2b = H1.spec.b2, H2.spec.b2
    if (b2a == 0) != (b2b == 0):
        fin, deg = (H1, H2) if b2b == 0 else (H2, H1)
        closed, theta, beta = _closed_form(fin, deg)
    return SymmetricDifference(area, pieces, len(d12), closed, theta, beta, (H1, H2), mirrored)


def intersection_polygon(H1: HexagonLayout, H2: HexagonLayout) -> GeodesicPolygon | None:
    """Common part of two embedded hexagons."""
    I = intersect_regions(H1.region(), H2.region())
    return I.polygon() if I is not None else None
