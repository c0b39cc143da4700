"""Sampling hyperbolic surfaces into finite distance measure spaces.

A surface is given as convex geodesic pieces (each possibly cut into convex
regions) plus boundary sides shared by two pieces. Every region is split in
the Klein model into small geodesic triangles whose exact areas (angle
deficits) become candidate masses at their Klein centroids. A greedy net of
each piece at spacing ``h = 1/density`` carries the inductive net masses, so
the total mass equals the total area up to rounding. Distances inside a
piece are hyperbolic; distances across pieces are shortest paths through
sample points on the shared sides, glued with slack 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..approx import greedy_epsilon_net, net_measure
from ..core import FiniteDistanceMeasureSpace, make_space, space_from_arrays
from ..ghlp import RhoEstimate, RhoWitness, SearchBudget, rho_search, rho_upper_from_witness
from ..gluing import GluingSpec, glued_distance, largest_valid_level, shortest_paths
from .hexagon import HexagonLayout, HexagonSpec, common_layouts, layout_hexagon, symmetric_difference_area
from .plane import (
    IDEAL_INF,
    difference_regions,
    from_klein,
    geodesic,
    hyp_distance,
    hyp_distance_matrix,
    intersect_regions,
    is_ideal,
    is_infinite,
    mobius_apply,
    point_along,
    tangent_toward,
    to_klein,
)

DEFAULT_DENSITY = 2.0
MAX_DEPTH = 14


class QuasiIsometryError(ValueError):
    """Raised when a map fails the q-quasi-isometry or mass-ratio condition."""

    def __init__(self, message: str, witness: tuple):
        super().__init__(message)
        self.witness = witness


# ---------------------------------------------------------------------------
# Pieces and normalization


@dataclass(frozen=True)
class Piece:
    """A convex geodesic polygon, possibly cut into convex regions.

    Attributes:
        name: label prefix of the samples of this piece.
        regions: ``(name, vertices)`` of each convex region; together they
            tile one convex polygon, so the hyperbolic distance is the
            intrinsic distance of the piece. Region order fixes candidate order.
    """

    name: str
    regions: tuple


@dataclass(frozen=True)
class Seam:
    """A boundary side shared by two pieces drawn in the same coordinates.

    Attributes:
        a: index of the first piece.
        b: index of the second piece.
        start: one end of the side (may be ideal).
        end: other end (may be ideal).
        anchor: ``"start"`` or ``"end"``; the end from which sample points
            are laid out (the other end is used if this one is ideal).
    """

    a: int
    b: int
    start: complex
    end: complex
    anchor: str = "start"


@dataclass(frozen=True, eq=False)
class SampledSurface:
    """A sampled surface and how it was built.

    Attributes:
        space: the finite distance measure space.
        provenance: pieces, identifications, density, mesh bound and cusp mass.
        points: half-plane coordinates of each sample (piece coordinates).
        piece_of: piece index of each sample.
    """

    space: FiniteDistanceMeasureSpace
    provenance: dict = field(default_factory=dict)
    points: tuple = ()
    piece_of: tuple = ()
    candidates: tuple = ()

    @property
    def mesh(self) -> float:
        return self.provenance["mesh_bound"]


def _rotation_about_i(phi: float) -> tuple[float, float, float, float]:
    c, s = math.cos(phi / 2), math.sin(phi / 2)
    return (c, s, -s, c)


def _compose(m1, m2):
    a1, b1, c1, d1 = m1
    a2, b2, c2, d2 = m2
    return (a1 * a2 + b1 * c2, a1 * b2 + b1 * d2, c1 * a2 + d1 * c2, c1 * b2 + d1 * d2)


def normalizing_map(vertices: Sequence[complex]) -> tuple[float, float, float, float]:
    """Möbius map putting a polygon in a canonical position.

    The hyperboloid mean of the finite vertices goes to ``i`` and the first
    vertex is rotated onto the upper imaginary axis (to infinity if ideal),
    so isometric copies of a polygon normalize to the same coordinates.
    """
    finite = [v for v in vertices if not is_ideal(v)]
    if finite:
        acc = np.zeros(3)
        for v in finite:
            k = to_klein(v)
            n = math.sqrt(max(0.0, 1.0 - abs(k) ** 2))
            acc += np.array([k.real, k.imag, 1.0]) / n
        c = from_klein(complex(acc[0], acc[1]) / acc[2])
        shift = (1.0 / c.imag, -c.real / c.imag, 0.0, 1.0)
    else:
        shift = (1.0, 0.0, 0.0, 1.0)
    v0 = mobius_apply(shift, vertices[0])
    tau = tangent_toward(1j, v0)
    phi = math.pi / 2 - math.atan2(tau.imag, tau.real)
    return _compose(_rotation_about_i(phi), shift)


def _map_all(m, vertices) -> tuple:
    return tuple(mobius_apply(m, v) for v in vertices)


# ---------------------------------------------------------------------------
# Klein subdivision


@dataclass(frozen=True)
class Cell:
    """A candidate: small geodesic triangle with its area and Klein centroid."""

    center: complex
    area: float
    cusp: bool
    diameter: float
    region: str
    index: int


def _norm(k: complex, ideal: bool) -> float:
    return 0.0 if ideal else math.sqrt(max(0.0, 1.0 - abs(k) ** 2))


def _cosh_klein(k1, n1, k2, n2) -> float:
    return (1.0 - (k1.real * k2.real + k1.imag * k2.imag)) / (n1 * n2)


def klein_triangle_area(ks: Sequence[complex], ns: Sequence[float]) -> float:
    """Area of a geodesic triangle from Klein vertices (norm 0 marks an ideal vertex).

    Uses ``tan(A/2) = |det| / (n1 n2 n3 + n1 c23 + n2 c13 + n3 c12)`` on the
    homogeneous vectors ``(x, y, 1)`` with ``c_ij = 1 - k_i . k_j``.
    """
    (k1, k2, k3), (n1, n2, n3) = ks, ns
    det = (k2.real - k1.real) * (k3.imag - k1.imag) - (k3.real - k1.real) * (k2.imag - k1.imag)

    def c(a, b):
        return 1.0 - (a.real * b.real + a.imag * b.imag)

    den = n1 * n2 * n3 + n1 * c(k2, k3) + n2 * c(k1, k3) + n3 * c(k1, k2)
    return 2.0 * math.atan2(abs(det), den)


def polygon_cells(vertices: Sequence[complex], h: float, region: str = "", cusp_area: float | None = None
                  ) -> list[Cell]:
    """Split a convex polygon into candidate cells of diameter at most ``h/2``.

    Cells touching an ideal vertex have infinite diameter; they are split
    until their area drops below ``cusp_area`` and flagged as cusp cells.
    Cells farther from ``i`` than every finite vertex that are still wider
    than ``h/2`` when their area falls below ``cusp_area`` lie deep in a
    cusp and are flagged the same way.
    """
    if cusp_area is None:
        cusp_area = 0.05 * h * h
    ks = [to_klein(v) for v in vertices]
    ideal = [is_ideal(v) for v in vertices]
    # Klein norm below which a point is farther from i than every finite vertex
    reach = max((hyp_distance(1j, v) for v in vertices if not is_ideal(v)), default=0.0) + h
    deep = 1.0 / math.cosh(reach)
    apex = sum(ks) / len(ks)
    out: list[Cell] = []
    stack = []
    for i in range(len(ks) - 1, -1, -1):
        j = (i + 1) % len(ks)
        stack.append(((apex, ks[i], ks[j]), (False, ideal[i], ideal[j]), 0))
    while stack:
        tri, flags, depth = stack.pop()
        ns = [_norm(k, f) for k, f in zip(tri, flags)]
        area = klein_triangle_area(tri, ns)
        if area <= 0.0:
            continue
        cusp = any(flags)
        if cusp:
            diam = math.inf
            stop = area <= cusp_area or depth >= MAX_DEPTH
        else:
            sides = [math.acosh(max(1.0, _cosh_klein(tri[a], ns[a], tri[b], ns[b])))
                     for a, b in ((1, 2), (0, 2), (0, 1))]
            diam = max(sides)
            stop = diam <= h / 2 or depth >= 3 * MAX_DEPTH
            if not diam <= h / 2 and area <= cusp_area and max(ns) < deep:
                # beyond every finite vertex: Klein halving no longer shrinks it
                stop = cusp = True
        if stop:
            center = from_klein(sum(tri) / 3)
            out.append(Cell(center, area, cusp, diam, region, len(out)))
            continue
        if not cusp:
            # bisect the longest side (opposite vertex a) so slivers stay cheap
            # near-ties resolved by position so rounding cannot change the split
            a = next(k for k in range(3) if sides[k] >= diam * (1 - 1e-9))
            b, c = (a + 1) % 3, (a + 2) % 3
            mid = (tri[b] + tri[c]) / 2
            stack.append(((tri[a], mid, tri[c]), (False, False, False), depth + 1))
            stack.append(((tri[a], tri[b], mid), (False, False, False), depth + 1))
            continue
        m01, m12, m02 = (tri[0] + tri[1]) / 2, (tri[1] + tri[2]) / 2, (tri[0] + tri[2]) / 2
        kids = [
            ((tri[0], m01, m02), (flags[0], False, False)),
            ((m01, tri[1], m12), (False, flags[1], False)),
            ((m02, m12, tri[2]), (False, False, flags[2])),
            ((m01, m12, m02), (False, False, False)),
        ]
        for t, f in reversed(kids):
            stack.append((t, f, depth + 1))
    return out


def piece_cells(piece: Piece, h: float, cusp_area: float | None = None) -> list[Cell]:
    cells: list[Cell] = []
    for name, verts in piece.regions:
        cells.extend(polygon_cells(verts, h, name, cusp_area))
    return cells


# ---------------------------------------------------------------------------
# Sampling


def _net(cells: list[Cell], h: float):
    pts = [c.center for c in cells]
    D = hyp_distance_matrix(pts)
    cand = space_from_arrays([str(i) for i in range(len(cells))], D,
                             np.array([c.area for c in cells], dtype=float), check=False)
    centers = greedy_epsilon_net(cand, h)
    approx = net_measure(cand, centers, h)
    return centers, np.asarray(approx.mass, dtype=float)


def _seam_points(seam: Seam, h: float, reach: Sequence[complex]) -> list[complex]:
    """Points along a shared side at spacing ``h/2`` from its anchor end."""
    step = h / 2
    u, v = (seam.start, seam.end) if seam.anchor == "start" else (seam.end, seam.start)
    if is_ideal(u):
        u, v = v, u
    if not is_ideal(u):
        if not is_ideal(v):
            length = hyp_distance(u, v)
            k = int(math.floor(length / step + 1e-9))
            pts = [point_along(u, v, j * step) for j in range(k + 1)]
            if length - k * step > 1e-9:
                pts.append(v)
            return pts
        T = max((hyp_distance(u, p) for p in reach), default=0.0) + h
        k = int(math.ceil(T / step))
        return [point_along(u, v, j * step) for j in range(k + 1)]
    # both ends ideal: anchor at the point of the side closest to i
    g = geodesic(u, v)
    if g[0] == 0.0:
        top = complex(-g[2], 1.0)
    else:
        c = -g[1] / 2.0
        top = complex(c, math.sqrt(c * c - g[2]))

    def at(t):
        return top if t == 0 else point_along(top, v if t > 0 else u, abs(t))

    lo, hi = -60.0, 60.0
    for _ in range(200):
        a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if hyp_distance(1j, at(a)) < hyp_distance(1j, at(b)):
            hi = b
        else:
            lo = a
    anchor = at((lo + hi) / 2)
    T = max((hyp_distance(anchor, p) for p in reach), default=0.0) + h
    k = int(math.ceil(T / step))
    back = [point_along(anchor, u, j * step) for j in range(k, 0, -1)]
    return back + [anchor] + [point_along(anchor, v, j * step) for j in range(1, k + 1)]


def sample_surface(pieces: Sequence[Piece], seams: Sequence[Seam] = (), density: float = DEFAULT_DENSITY,
                   cusp_area: float | None = None) -> SampledSurface:
    """Sample pieces and glue them along shared sides.

    Args:
        pieces: convex pieces in their own coordinates.
        seams: sides shared by two pieces, drawn with the same coordinates
            in both (as for the two halves of a doubled polygon).
        density: samples per unit length; the net spacing is ``1/density``.
        cusp_area: area below which cusp cells stop splitting.

    Returns:
        The sampled surface. ``provenance["mesh_bound"]`` bounds the distance
        from any surface point to its sample center plus the seam
        discretization error; ``provenance["cusp_mass"]`` is the mass of
        cells touching an ideal vertex, which the mesh bound does not cover.
    """
    if not density > 0:
        raise ValueError("density must be positive")
    h = 1.0 / density
    labels: list[str] = []
    points: list[complex] = []
    piece_of: list[int] = []
    masses: list[float] = []
    blocks = []
    cusp_mass = 0.0
    max_diam = 0.0
    total_area = 0.0
    all_cells = []
    for p_idx, piece in enumerate(pieces):
        cells = piece_cells(piece, h, cusp_area)
        all_cells.append(tuple(cells))
        centers, mass = _net(cells, h)
        total_area += math.fsum(c.area for c in cells)
        cusp_mass += math.fsum(c.area for c in cells if c.cusp)
        max_diam = max([max_diam] + [c.diameter for c in cells if not c.cusp])
        blocks.append([cells[i] for i in centers])
        for i, m in zip(centers, mass):
            c = cells[i]
            labels.append(f"{piece.name}.{c.region}{c.index}")
            points.append(c.center)
            piece_of.append(p_idx)
            masses.append(float(m))
    # seam nodes per piece
    seam_nodes: list[list[complex]] = [[] for _ in pieces]
    links = []
    for s in seams:
        reach = [c.center for c in blocks[s.a]] + [c.center for c in blocks[s.b]]
        pts = _seam_points(s, h, reach)
        ia = len(seam_nodes[s.a])
        ib = len(seam_nodes[s.b])
        seam_nodes[s.a].extend(pts)
        seam_nodes[s.b].extend(pts)
        links.extend((s.a, ia + j, s.b, ib + j) for j in range(len(pts)))
    sizes = [len(b) + len(sn) for b, sn in zip(blocks, seam_nodes)]
    offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    N = int(offsets[-1])
    G = np.full((N, N), np.inf)
    keep = []
    for p_idx, (blk, sn) in enumerate(zip(blocks, seam_nodes)):
        pts = [c.center for c in blk] + list(sn)
        o = offsets[p_idx]
        G[o:o + len(pts), o:o + len(pts)] = hyp_distance_matrix(pts)
        keep.extend(range(o, o + len(blk)))
    for a, ia, b, ib in links:
        u = offsets[a] + len(blocks[a]) + ia
        v = offsets[b] + len(blocks[b]) + ib
        G[u, v] = G[v, u] = 0.0
    D = shortest_paths(G)[np.ix_(keep, keep)]
    D = np.minimum(D, D.T)
    np.fill_diagonal(D, 0.0)
    space = make_space(labels, D, masses, exact=False)
    seam_step = h / 2 if seams else 0.0
    provenance = {
        "pieces": [p.name for p in pieces],
        "regions": [[r[0] for r in p.regions] for p in pieces],
        "identifications": [(s.a, s.b) for s in seams],
        "density": density,
        "spacing": h,
        "max_cell_diameter": max_diam,
        "seam_spacing": seam_step,
        "mesh_bound": h + max_diam + seam_step,
        "cusp_mass": cusp_mass,
        "area": total_area,
    }
    return SampledSurface(space, provenance, tuple(points), tuple(piece_of), tuple(all_cells))


def uncovered_mass(surface: SampledSurface, radius: float) -> float:
    """Candidate mass farther than ``radius`` from every sample of its own piece."""
    total = 0.0
    for p_idx, cells in enumerate(surface.candidates):
        centers = [z for z, q in zip(surface.points, surface.piece_of) if q == p_idx]
        if not cells:
            continue
        if not centers:
            total += math.fsum(c.area for c in cells)
            continue
        pts = [c.center for c in cells]
        z = np.asarray(pts, dtype=complex)[:, None]
        w = np.asarray(centers, dtype=complex)[None, :]
        d = 2.0 * np.arcsinh(np.abs(z - w) / (2.0 * np.sqrt(z.imag * w.imag)))
        far = d.min(axis=1) >= radius
        total += math.fsum(c.area for c, f in zip(cells, far) if f)
    return total


# ---------------------------------------------------------------------------
# Pants


SEAM_ANCHORS = {"a3": "start", "a2": "end", "a1": "end"}


def _pants_from_layout(layout: HexagonLayout, regions: Sequence[tuple[str, Sequence[complex]]], m,
                       density: float) -> SampledSurface:
    regs = tuple((name, _map_all(m, verts)) for name, verts in regions)
    pieces = [Piece("h1", regs), Piece("h2", regs)]
    seams = []
    for name in ("a3", "a1", "a2"):
        if name not in layout.edges:
            continue
        u, v = layout.edge(name)
        seams.append(Seam(0, 1, mobius_apply(m, u), mobius_apply(m, v), SEAM_ANCHORS[name]))
    surf = sample_surface(pieces, seams, density)
    surf.provenance["hexagon"] = layout.spec.b
    return surf


def build_pants(lengths: Sequence[float], density: float = DEFAULT_DENSITY, frame=None) -> SampledSurface:
    """Pair of pants with boundary lengths ``(l1, l2, l3)`` (0 = cusp).

    Two copies of the right-angled hexagon with ``b_i = l_i / 2`` are glued
    along their ``a`` sides; the copies are labeled ``h1`` and ``h2``.

    Args:
        lengths: boundary lengths.
        density: samples per unit length.
        frame: optional starting frame of the hexagon embedding; the sample
            does not depend on it beyond rounding.
    """
    l1, l2, l3 = (float(x) for x in lengths)
    spec = HexagonSpec(l1 / 2, l2 / 2, l3 / 2)
    layout = layout_hexagon(spec, frame=frame)
    verts = layout.polygon.vertices
    m = normalizing_map(verts)
    return _pants_from_layout(layout, [("H", verts)], m, density)


def involution(surface: SampledSurface) -> list[int]:
    """Permutation exchanging the ``h1`` and ``h2`` copies of a pants sample."""
    labels = surface.space.labels
    pos = {l: i for i, l in enumerate(labels)}
    out = []
    for l in labels:
        head, rest = l.split(".", 1)
        other = {"h1": "h2", "h2": "h1"}[head]
        out.append(pos[f"{other}.{rest}"])
    return out


# ---------------------------------------------------------------------------
# Quasi-isometries


@dataclass(frozen=True, eq=False)
class QuasiIsometryBound:
    """Closed-form bound and the witness built from the map.

    Attributes:
        bound: ``max{(1 - 1/q^2) mu_R(R), (1 - 1/q^2) mu_S(S), diam(S)(q - 1)}``.
        delta: gluing slack used by the witness.
        witness: the gluing witness (``L`` infinite, nothing removed).
        certified: witness objective, recomputed after validation.
        certifies: ``certified <= bound + 1e-6``.
        distortion: largest ``|d_R - d_S o map|``.
    """

    bound: float
    delta: float
    witness: RhoWitness
    certified: float
    certifies: bool
    distortion: float


def _space(x) -> FiniteDistanceMeasureSpace:
    return x.space if isinstance(x, SampledSurface) else x


def quasi_isometry_rho_bound(R, S, q: float, mapping: Sequence[int], tol: float = 1e-9) -> QuasiIsometryBound:
    """Bound ``d_rho(R, S)`` through a q-quasi-isometry given on samples.

    The map must be a bijection of samples with
    ``d_R/q <= d_S o map <= q d_R`` and mass ratios within ``[1/q^2, q^2]``.
    The witness glues ``x`` to ``map(x)`` with slack
    ``delta = diam(S)(q - 1)``, raised to the actual distortion if that is
    larger, so both inclusions stay isometric.

    Raises:
        QuasiIsometryError: with the offending pair or point.
    """
    X, Y = _space(R), _space(S)
    if q < 1:
        raise ValueError("q must be at least 1")
    mp = [int(j) for j in mapping]
    if len(mp) != X.n or sorted(mp) != list(range(Y.n)):
        raise QuasiIsometryError("the map must be a bijection of samples", ())
    DX = np.asarray(X.dist, dtype=float)
    DY = np.asarray(Y.dist, dtype=float)[np.ix_(mp, mp)]
    slack = tol * np.maximum(1.0, DX)
    low = DX / q - DY > slack
    high = DY - q * DX > slack
    bad = np.argwhere(low | high)
    if len(bad):
        i, j = (int(v) for v in bad[0])
        raise QuasiIsometryError(f"distance condition fails at ({X.labels[i]}, {X.labels[j]})", (i, j))
    mx = np.asarray(X.mass, dtype=float)
    my = np.asarray(Y.mass, dtype=float)[mp]
    q2 = q * q
    for i in range(X.n):
        if my[i] > q2 * mx[i] * (1 + tol) + tol or mx[i] > q2 * my[i] * (1 + tol) + tol:
            raise QuasiIsometryError(f"mass ratio outside [1/q^2, q^2] at {X.labels[i]}", (i,))
    diam_s = float(DY.max()) if Y.n else 0.0
    bound = max((1 - 1 / q2) * float(mx.sum()), (1 - 1 / q2) * float(my.sum()), diam_s * (q - 1))
    dist = float(np.abs(DX - DY).max()) if X.n else 0.0
    delta = max(diam_s * (q - 1), dist)
    g = glued_distance(X, Y, GluingSpec.build([(i, mp[i]) for i in range(X.n)], delta))
    n = X.n
    L = min(largest_valid_level(X, g.dist, list(range(n)), tol=tol),
            largest_valid_level(Y, g.dist, list(range(n, n + Y.n)), tol=tol))
    w = RhoWitness(g, L, 0.0)
    certified = float(rho_upper_from_witness(X, Y, w, tol))
    return QuasiIsometryBound(bound, delta, w, certified, certified <= bound + 1e-6, dist)


def scaled_surface(surface: SampledSurface, distance_factor: float, mass_factor: float) -> SampledSurface:
    """Same samples with distances and masses multiplied by constants."""
    sp = surface.space
    D = np.asarray(sp.dist, dtype=float) * distance_factor
    M = np.asarray(sp.mass, dtype=float) * mass_factor
    space = make_space(sp.labels, D, M, exact=False)
    prov = dict(surface.provenance)
    prov["scaled"] = (distance_factor, mass_factor)
    return SampledSurface(space, prov, surface.points, surface.piece_of, surface.candidates)


# ---------------------------------------------------------------------------
# Degeneration


DEGENERATION_BUDGET = SearchBudget(max_matchings=200, exhaustive_limit=30, max_deltas=4, max_removed=2,
                                   local_steps=6)


def degenerate_pair(spec: HexagonSpec, density: float = DEFAULT_DENSITY
                    ) -> tuple[SampledSurface, SampledSurface]:
    """Pants samples of ``(b1, b2, b3)`` and ``(b1, 0, b3)`` on a shared refinement.

    Both hexagons are embedded with their common sides aligned and cut into
    the intersection and the two differences; intersection candidates come
    first, so both samples share every intersection center (same labels and
    coordinates).
    """
    limit = HexagonSpec(spec.b1, 0.0, spec.b3)
    H1, H2, _ = common_layouts(spec, limit)
    R1, R2 = H1.region(), H2.region()
    inter = intersect_regions(R1, R2)
    m = normalizing_map(H1.polygon.vertices)
    out = []
    for H, A, B in ((H1, R1, R2), (H2, R2, R1)):
        regions = []
        if spec.b2 == 0 or inter is None:
            regions.append(("H", H.polygon.vertices))
        else:
            regions.append(("I", inter.vertices))
            for k, r in enumerate(difference_regions(A, B)):
                regions.append((f"D{k}_", r.vertices))
        out.append(_pants_from_layout(H, regions, m, density))
    return out[0], out[1]


@dataclass(frozen=True)
class DegenerationRow:
    """One row of the degeneration table."""

    b2: float
    lower: float
    upper: float
    mesh_bound: float
    cusp_mass: float
    symmetric_difference: float
    size: int
    limit_size: int
    evaluated: int


def _nearest_matching(X: SampledSurface, Y: SampledSurface, h: float) -> tuple:
    pairs = []
    used = set()
    for i, (z, p) in enumerate(zip(X.points, X.piece_of)):
        best = None
        for j, (w, q) in enumerate(zip(Y.points, Y.piece_of)):
            if q != p or j in used:
                continue
            d = hyp_distance(z, w)
            if d < h and (best is None or d < best[0]):
                best = (d, j)
        if best is not None:
            used.add(best[1])
            pairs.append((i, best[1]))
    return tuple(pairs)


def degeneration_row(b2: float, b1: float = 1.0, b3: float = 1.0, density: float = DEFAULT_DENSITY,
                     budget: SearchBudget = DEGENERATION_BUDGET, seed: int = 0) -> tuple[DegenerationRow, RhoEstimate]:
    spec = HexagonSpec(b1, b2, b3)
    P, P0 = degenerate_pair(spec, density)
    init = [_nearest_matching(P, P0, 1.0 / density)]
    est = rho_search(P.space, P0.space, budget=budget, seed=seed, initial=init)
    area = symmetric_difference_area(spec, HexagonSpec(b1, 0.0, b3)).area
    mesh = max(P.mesh, P0.mesh)
    row = DegenerationRow(b2, float(est.lower), float(est.upper), mesh, P0.provenance["cusp_mass"],
                          2 * area, P.space.n, P0.space.n, est.evaluated)
    return row, est


def degeneration_family(b2_values: Sequence[float], b1: float = 1.0, b3: float = 1.0,
                        density: float = DEFAULT_DENSITY, budget: SearchBudget = DEGENERATION_BUDGET,
                        seed: int = 0) -> list[DegenerationRow]:
    """``d_rho`` upper bounds from the ``(b1, b2, b3)`` pants to the ``b2 = 0`` pants.

    Rows are independent and returned sorted by decreasing ``b2``.
    """
    vals = sorted((float(b) for b in b2_values), reverse=True)
    if any(b < 0 for b in vals):
        raise ValueError("b2 values must be nonnegative")
    return [degeneration_row(b, b1, b3, density, budget, seed)[0] for b in vals]


def refinement_witness(piece: Piece, density_coarse: float, density_fine: float) -> dict:
    """Compare nets of one piece at two densities through a common middle space.

    Both nets are drawn from the candidates of the finer density. The middle
    space is the union of the two center sets with hyperbolic distances;
    each net is glued to it at its own centers (slack 0) and the two
    witnesses are composed. Each net is within its spacing of the candidate
    measure, so the composed value is at most the sum of the two spacings.

    Returns:
        ``upper`` (validated composed objective), ``bound`` (twice the
        coarse mesh), and the two sample spaces.
    """
    from ..ghlp import compose_witnesses

    h_c, h_f = 1.0 / density_coarse, 1.0 / density_fine
    cells = piece_cells(piece, min(h_c, h_f))
    D = hyp_distance_matrix([c.center for c in cells])
    cand = space_from_arrays([f"c{i}" for i in range(len(cells))], D,
                             np.array([c.area for c in cells], dtype=float), check=False)
    nets = []
    for h in (h_c, h_f):
        centers = greedy_epsilon_net(cand, h)
        nets.append((centers, net_measure(cand, centers, h)))
    union = sorted(set(nets[0][0]) | set(nets[1][0]))
    middle = make_space([cand.labels[i] for i in union], D[np.ix_(union, union)], [0.0] * len(union),
                        exact=False)
    pos = {c: k for k, c in enumerate(union)}
    witnesses = []
    for centers, sub in nets:
        g = glued_distance(sub, middle, GluingSpec.build([(k, pos[c]) for k, c in enumerate(centers)], 0.0))
        witnesses.append(RhoWitness(g, math.inf, 0.0))
    w = compose_witnesses(witnesses[0], witnesses[1].transposed())
    upper = float(rho_upper_from_witness(nets[0][1], nets[1][1], w))
    max_diam = max(c.diameter for c in cells if not c.cusp)
    return {"upper": upper, "bound": 2 * (h_c + max_diam), "coarse": nets[0][1], "fine": nets[1][1],
            "witness": w}
