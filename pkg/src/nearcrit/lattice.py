"""Triangular-lattice geometry: the triangle domain, hex adjacency, regions.

Sites are hexagonal cells of a honeycomb, identified with points of the
triangular lattice in axial coordinates (q, r).  The planar embedding puts
adjacent cell centers at unit distance; row r sits at height r*sqrt(3)/2.

The triangle domain of even side n holds rows r = 0 .. n-2 from the bottom,
row r holding n-r cells, centered on the vertical axis.  The top row has two
cells, so the black and white boundary arcs meet at a single dual vertex at
the apex and the whole configuration is antisymmetric under x-reflection
combined with a color swap.  (A single apex cell would sit at x = 0 and
could not be assigned a boundary color without breaking that symmetry.)

Boundary cells are the bottom row plus the first and last cell of every
other row; they are colored black for negative x and white for positive x.
No boundary cell center lies on the axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

import numpy as np

SQRT3 = math.sqrt(3.0)

# Axial offsets of the 6 neighbors in clockwise order starting East:
# E, SE, SW, W, NW, NE.  Embedded angles: 0, -60, -120, 180, 120, 60 degrees.
HEX_OFFSETS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))

INTERIOR = 0
BLACK_BOUNDARY = 1
WHITE_BOUNDARY = 2


class SiteCoord(NamedTuple):
    """Axial coordinate of a lattice site (hexagonal cell)."""

    q: int
    r: int


@dataclass(frozen=True)
class Disc:
    cx: float
    cy: float
    radius: float


@dataclass(frozen=True)
class Annulus:
    cx: float
    cy: float
    r_inner: float
    r_outer: float


@dataclass(frozen=True)
class SubTriangle:
    """Upward equilateral triangle, `corner` = bottom-left corner point."""

    corner_x: float
    corner_y: float
    side: float


@dataclass(frozen=True)
class Rect:
    x_lo: float
    x_hi: float
    y_lo: float
    y_hi: float


Region = Union[Disc, Annulus, SubTriangle, Rect]


class TriangleDomain:
    """Immutable triangle domain of even side n with colored boundary.

    All arrays are dense over site indices; the index order is row-major
    from the bottom row up (row r, then q ascending).  Geometry is stored
    unrescaled (unit lattice spacing); `rescaled_centers` divides by n so
    the domain corners map to (-1/2, 0), (1/2, 0), (0, sqrt(3)/2).
    """

    def __init__(self, n: int):
        if n < 2 or n % 2 != 0:
            raise ValueError(f"side length must be even and >= 2, got {n}")
        self.n = n
        rows = n - 1  # row r holds n - r cells, r = 0 .. n-2
        counts = np.array([n - r for r in range(rows)], dtype=np.int64)
        self.row_start = np.concatenate([[0], np.cumsum(counts)]).astype(np.int64)
        self.n_sites = int(self.row_start[-1])

        site_q = np.concatenate([np.arange(c, dtype=np.int32) for c in counts])
        site_r = np.repeat(np.arange(rows, dtype=np.int32), counts)
        self.site_q = site_q
        self.site_r = site_r

        # Embedding: x = q + r/2 - (n-1)/2, y = r*sqrt(3)/2.
        x = site_q + site_r / 2.0 - (n - 1) / 2.0
        y = site_r * (SQRT3 / 2.0)
        self.centers = np.stack([x, y], axis=1)

        bclass = np.zeros(self.n_sites, dtype=np.uint8)
        left_slant = np.zeros(self.n_sites, dtype=np.uint8)
        right_slant = np.zeros(self.n_sites, dtype=np.uint8)
        for r in range(rows):
            lo, hi = int(self.row_start[r]), int(self.row_start[r + 1])
            if r == 0:
                bclass[lo:hi] = np.where(x[lo:hi] < 0, BLACK_BOUNDARY, WHITE_BOUNDARY)
            else:
                bclass[lo] = BLACK_BOUNDARY
                bclass[hi - 1] = WHITE_BOUNDARY
            left_slant[lo] = 1
            right_slant[hi - 1] = 1
        self.boundary_class = bclass
        self.left_slant = left_slant
        self.right_slant = right_slant

        nbr = np.full((self.n_sites, 6), -1, dtype=np.int32)
        for k, (dq, dr) in enumerate(HEX_OFFSETS):
            nq = site_q + dq
            nr = site_r + dr
            ok = (nr >= 0) & (nr < rows)
            nr_c = np.clip(nr, 0, rows - 1)
            in_row = ok & (nq >= 0) & (nq < counts[nr_c])
            idx = self.row_start[nr_c] + nq
            nbr[:, k] = np.where(in_row, idx, -1)
        self.neighbor_table = nbr

        self.interior_sites = np.flatnonzero(bclass == INTERIOR).astype(np.int32)
        self.n_interior = int(self.interior_sites.size)
        # Dual vertex between the two central bottom cells is the walk start;
        # its left cell is the black one at x = -1/2.
        self.start_left_site = self.site_index(n // 2 - 1, 0)

        self._dual = None
        for a in (self.row_start, self.site_q, self.site_r, self.centers,
                  self.boundary_class, self.left_slant, self.right_slant,
                  self.neighbor_table, self.interior_sites):
            a.flags.writeable = False

    # -- indexing ----------------------------------------------------------

    def in_domain(self, q: int, r: int) -> bool:
        return 0 <= r < self.n - 1 and 0 <= q < self.n - r

    def site_index(self, q: int, r: int) -> int:
        """Dense index of site (q, r), or -1 if outside the domain."""
        if not self.in_domain(q, r):
            return -1
        return int(self.row_start[r]) + q

    def site_coord(self, idx: int) -> SiteCoord:
        return SiteCoord(int(self.site_q[idx]), int(self.site_r[idx]))

    @property
    def rescaled_centers(self) -> np.ndarray:
        return self.centers / self.n

    def __repr__(self):
        return f"TriangleDomain(n={self.n}, sites={self.n_sites})"

    # -- dual (honeycomb) vertex graph, built on demand --------------------

    @property
    def dual(self) -> "DualGraph":
        if self._dual is None:
            self._dual = DualGraph(self)
        return self._dual


class DualGraph:
    """Honeycomb vertices with all three incident cells inside the domain.

    Vertex kinds: kind 0 is the circumcenter of cells {(q,r),(q+1,r),(q,r+1)}
    (an upward lattice face), kind 1 of {(q+1,r),(q,r+1),(q+1,r+1)}.  Used by
    flood-fill classification of path-avoiding regions; the start and apex
    vertices have a phantom cell and are deliberately absent, so a complete
    interface path always separates the graph into left and right parts.
    """

    def __init__(self, dom: TriangleDomain):
        n = dom.n
        self.dom = dom
        # face id lookup: [kind, r+1, q] -> vertex index (r = -1 allowed
        # so path faces below the bottom row map cleanly to "absent").
        self.face_index = np.full((2, n + 1, n), -1, dtype=np.int32)
        verts = []
        for r in range(-1, n - 1):
            for q in range(n):
                a = dom.site_index(q, r)
                b = dom.site_index(q + 1, r)
                c = dom.site_index(q, r + 1)
                d = dom.site_index(q + 1, r + 1)
                if a >= 0 and b >= 0 and c >= 0:
                    self.face_index[0, r + 1, q] = len(verts)
                    verts.append((0, q, r, (a, b, c)))
                if b >= 0 and c >= 0 and d >= 0:
                    self.face_index[1, r + 1, q] = len(verts)
                    verts.append((1, q, r, (b, c, d)))
        self.n_vertices = len(verts)

        pos = np.empty((self.n_vertices, 2))
        adj = np.full((self.n_vertices, 3), -1, dtype=np.int32)
        touches_black = np.zeros(self.n_vertices, dtype=np.uint8)
        touches_white = np.zeros(self.n_vertices, dtype=np.uint8)
        bclass = dom.boundary_class
        for i, (kind, q, r, cells) in enumerate(verts):
            x0 = q + r / 2.0 - (n - 1) / 2.0
            y0 = r * (SQRT3 / 2.0)
            if kind == 0:
                pos[i] = (x0 + 0.5, y0 + SQRT3 / 6.0)
                nbrs = ((1, q, r), (1, q - 1, r), (1, q, r - 1))
            else:
                pos[i] = (x0 + 1.0, y0 + SQRT3 / 3.0)
                nbrs = ((0, q, r + 1), (0, q + 1, r), (0, q, r))
            for j, (kk, qq, rr) in enumerate(nbrs):
                if 0 <= rr + 1 <= n and 0 <= qq < n:
                    adj[i, j] = self.face_index[kk, rr + 1, qq]
            for cell in cells:
                if bclass[cell] == BLACK_BOUNDARY:
                    touches_black[i] = 1
                elif bclass[cell] == WHITE_BOUNDARY:
                    touches_white[i] = 1
        self.positions = pos
        self.adjacency = adj
        self.touches_black = touches_black
        self.touches_white = touches_white


def build_domain(n: int) -> TriangleDomain:
    """Build the triangle domain of even side length n >= 2."""
    return TriangleDomain(n)


def neighbors(domain: TriangleDomain, site) -> list:
    """The 6 neighbors of a site in fixed clockwise order.

    `site` is a SiteCoord or (q, r) pair inside the domain.  Returns a list
    of (SiteCoord, in_domain) pairs, one per hex direction; coordinates of
    out-of-domain neighbors are still reported with flag False.
    """
    q, r = site
    if not domain.in_domain(q, r):
        raise ValueError(f"site {(q, r)} outside domain")
    out = []
    for dq, dr in HEX_OFFSETS:
        nq, nr = q + dq, r + dr
        out.append((SiteCoord(nq, nr), domain.in_domain(nq, nr)))
    return out


def validate_region(region: Region) -> None:
    if isinstance(region, Disc):
        if not (region.radius >= 0 and math.isfinite(region.radius)):
            raise ValueError(f"disc radius must be >= 0, got {region.radius}")
    elif isinstance(region, Annulus):
        if not (0 <= region.r_inner < region.r_outer):
            raise ValueError(
                f"annulus needs 0 <= r_inner < r_outer, got "
                f"({region.r_inner}, {region.r_outer})")
    elif isinstance(region, SubTriangle):
        if not (region.side > 0):
            raise ValueError(f"triangle side must be positive, got {region.side}")
    elif isinstance(region, Rect):
        if not (region.x_lo <= region.x_hi and region.y_lo <= region.y_hi):
            raise ValueError("rectangle bounds must be ordered")
    else:
        raise ValueError(f"unknown region {region!r}")


def region_contains(region: Region, xy: np.ndarray) -> np.ndarray:
    """Membership mask for an (m, 2) array of rescaled points (closed sets)."""
    x, y = xy[..., 0], xy[..., 1]
    if isinstance(region, Disc):
        d2 = (x - region.cx) ** 2 + (y - region.cy) ** 2
        return d2 <= region.radius ** 2
    if isinstance(region, Annulus):
        d2 = (x - region.cx) ** 2 + (y - region.cy) ** 2
        return (d2 >= region.r_inner ** 2) & (d2 <= region.r_outer ** 2)
    if isinstance(region, SubTriangle):
        xp = x - region.corner_x
        yp = y - region.corner_y
        s = region.side
        return (yp >= 0) & (yp <= SQRT3 * xp) & (yp <= SQRT3 * (s - xp))
    if isinstance(region, Rect):
        return (x >= region.x_lo) & (x <= region.x_hi) & \
               (y >= region.y_lo) & (y <= region.y_hi)
    raise ValueError(f"unknown region {region!r}")


def sites_in_region(domain: TriangleDomain, region: Region) -> np.ndarray:
    """Indices of sites whose rescaled centers lie in the region, ascending."""
    validate_region(region)
    mask = region_contains(region, domain.rescaled_centers)
    return np.flatnonzero(mask).astype(np.int32)
