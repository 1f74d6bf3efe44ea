"""The interface exploration walk and all path-level statistics.

The interface is a walk on honeycomb vertices (the dual of the triangular
lattice) from the dual vertex between the two central bottom cells to the
apex vertex between the two top cells.  The walk keeps black cells on its
left and white cells on its right: at each vertex the cell straight ahead
decides the turn -- black ahead means a 60-degree turn to the right, white
a 60-degree turn to the left.

Walk state is the pair (L, k): L is the cell on the left of the current
edge and the right cell is neighbor k of L (clockwise neighbor order).  The
cell ahead is neighbor k-1 of L.  If it is black the state becomes
(ahead, k+1); if white, (L, k-1).  The walk terminates exactly when the
ahead cell falls outside the domain, which by the boundary coloring can
only happen at the apex.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from numba import njit

from .lattice import (SQRT3, BLACK_BOUNDARY, WHITE_BOUNDARY, Disc, Rect,
                      SubTriangle, TriangleDomain, region_contains)
from .sampling import Coloring, CouplingField, flip_schedule, subsystem_rng
from .stats import Estimate

# Face reached after a step from state (L=(q,r), k): kind, dq, dr.
_FACE_KIND = np.array([0, 1, 0, 1, 0, 1], dtype=np.int8)
_FACE_DQ = np.array([0, 0, 0, -1, -1, -1], dtype=np.int32)
_FACE_DR = np.array([0, -1, -1, -1, 0, 0], dtype=np.int32)


class SideOutcome(Enum):
    LEFT = "left"
    RIGHT = "right"
    TIE = "tie"


class DiscSide(Enum):
    LEFT = "left"
    RIGHT = "right"
    HIT = "hit"


class TriangleStatus(Enum):
    NOT_GOOD = "not_good"
    GOOD = "good"
    VERY_GOOD = "very_good"


@njit(cache=True)
def _walk(nbr, site_q, site_r, black, left_flag, right_flag,
          start_left, max_steps, face_kind, face_dq, face_dr):
    lefts = np.empty(max_steps, dtype=np.int32)
    rights = np.empty(max_steps, dtype=np.int32)
    vkind = np.empty(max_steps + 1, dtype=np.int8)
    vq = np.empty(max_steps + 1, dtype=np.int32)
    vr = np.empty(max_steps + 1, dtype=np.int32)

    L = start_left
    k = 0
    # start vertex below the bottom edge, incident to L and R only
    vkind[0] = 1
    vq[0] = site_q[L]
    vr[0] = -1
    first_left = np.int64(-1)
    first_right = np.int64(-1)
    R = nbr[L, 0]
    if left_flag[L] or left_flag[R]:
        first_left = 0
    if right_flag[L] or right_flag[R]:
        first_right = 0

    step = 0
    while True:
        if step >= max_steps:
            return lefts, rights, vkind, vq, vr, first_left, first_right, -1
        R = nbr[L, k]
        front = nbr[L, (k + 5) % 6]
        lefts[step] = L
        rights[step] = R
        vkind[step + 1] = face_kind[k]
        vq[step + 1] = site_q[L] + face_dq[k]
        vr[step + 1] = site_r[L] + face_dr[k]
        step += 1
        touch_l = left_flag[L] or left_flag[R] or (front >= 0 and left_flag[front])
        touch_r = right_flag[L] or right_flag[R] or (front >= 0 and right_flag[front])
        if touch_l and first_left < 0:
            first_left = step
        if touch_r and first_right < 0:
            first_right = step
        if front < 0:
            return lefts[:step], rights[:step], vkind[:step + 1], vq[:step + 1], \
                vr[:step + 1], first_left, first_right, step
        if black[front]:
            L = front
            k = (k + 1) % 6
        else:
            k = (k + 5) % 6


@dataclass
class InterfacePath:
    """A terminated interface walk with per-step cells and visited vertices.

    `lefts[i]` / `rights[i]` are the black / white cells flanking step i.
    Vertex arrays have length ell + 1 and include the start vertex; vertex
    kind 0 sits at (x(q,r) + 1/2, y(r) + sqrt3/6), kind 1 at
    (x(q,r) + 1, y(r) + sqrt3/3) in unrescaled coordinates.
    """

    domain: TriangleDomain
    lefts: np.ndarray
    rights: np.ndarray
    vkind: np.ndarray
    vq: np.ndarray
    vr: np.ndarray
    first_left: int
    first_right: int
    revealed_sites: np.ndarray = field(repr=False, default=None)
    revealed_black: np.ndarray = field(repr=False, default=None)
    terminated_at: str = "apex"
    _positions: np.ndarray = field(repr=False, default=None)

    @property
    def ell(self) -> int:
        return int(self.lefts.size)

    @property
    def ell_plus(self) -> int:
        return int(np.count_nonzero(self.revealed_black))

    @property
    def ell_minus(self) -> int:
        return int(self.revealed_sites.size - self.ell_plus)

    def vertex_positions(self, rescaled: bool = True) -> np.ndarray:
        """(ell+1, 2) planar positions of the visited dual vertices."""
        if self._positions is None:
            n = self.domain.n
            x = self.vq + self.vr / 2.0 - (n - 1) / 2.0
            y = self.vr * (SQRT3 / 2.0)
            b = self.vkind == 1
            x = np.where(b, x + 1.0, x + 0.5)
            y = np.where(b, y + SQRT3 / 3.0, y + SQRT3 / 6.0)
            self._positions = np.stack([x, y], axis=1)
        if rescaled:
            return self._positions / self.domain.n
        return self._positions

    def face_indices(self) -> np.ndarray:
        """Dual-graph vertex index per visited vertex (-1 for rim vertices)."""
        dual = self.domain.dual
        return dual.face_index[self.vkind.astype(np.int64),
                               self.vr.astype(np.int64) + 1,
                               self.vq.astype(np.int64)]


def _effective_black(domain: TriangleDomain, raw_black: np.ndarray) -> np.ndarray:
    """Raw color mask with the boundary coloring forced on top."""
    eff = np.asarray(raw_black, dtype=np.uint8).copy()
    eff[domain.boundary_class == BLACK_BOUNDARY] = 1
    eff[domain.boundary_class == WHITE_BOUNDARY] = 0
    return eff


def _explore_masked(domain: TriangleDomain, raw_black: np.ndarray) -> InterfacePath:
    eff = _effective_black(domain, raw_black)
    max_steps = 3 * domain.n_sites + 8 * domain.n + 16
    lefts, rights, vkind, vq, vr, fl, fr, nsteps = _walk(
        domain.neighbor_table, domain.site_q, domain.site_r, eff,
        domain.left_slant, domain.right_slant, domain.start_left_site,
        max_steps, _FACE_KIND, _FACE_DQ, _FACE_DR)
    if nsteps < 0:
        raise RuntimeError("exploration exceeded the step bound; walk corrupt")
    revealed = np.unique(np.concatenate([lefts, rights]))
    return InterfacePath(domain, lefts, rights, vkind, vq, vr,
                         int(fl), int(fr),
                         revealed_sites=revealed,
                         revealed_black=eff[revealed].astype(bool))


def explore(domain: TriangleDomain, coloring: Coloring) -> InterfacePath:
    """Run the interface exploration for one coloring.

    Boundary cells take their forced colors; interior cells come from the
    coloring.  For a Lazy coloring the revealed map is filled in with
    exactly the cells the path became adjacent to.
    """
    if coloring.domain is not domain and coloring.domain.n != domain.n:
        raise ValueError("coloring belongs to a different domain")
    sl = domain.start_left_site
    if domain.boundary_class[sl] != BLACK_BOUNDARY or \
            domain.boundary_class[domain.neighbor_table[sl, 0]] != WHITE_BOUNDARY:
        raise ValueError("bottom boundary has no black/white split at the origin")
    path = _explore_masked(domain, coloring.black_array())
    if not coloring.is_dense:
        raw = coloring.black_array()
        for s in path.revealed_sites.tolist():
            coloring.revealed.setdefault(int(s), bool(raw[s]))
    return path


def explore_reference(domain: TriangleDomain, coloring: Coloring) -> InterfacePath:
    """Pure-Python exploration, one color query per newly revealed cell.

    Slow; used as an independent oracle for the compiled walk and as the
    honest consumer of Lazy colorings.  Asserts the black-left / white-right
    invariant at every step.
    """
    bclass = domain.boundary_class

    def is_black(site: int) -> bool:
        if bclass[site] == BLACK_BOUNDARY:
            return True
        if bclass[site] == WHITE_BOUNDARY:
            return False
        return coloring.is_black(site)

    nbr = domain.neighbor_table
    L = domain.start_left_site
    k = 0
    lefts, rights = [], []
    verts = [(1, int(domain.site_q[L]), -1)]
    first_left = first_right = -1
    R = int(nbr[L, 0])

    def touch(step, cells):
        nonlocal first_left, first_right
        for c in cells:
            if c < 0:
                continue
            if domain.left_slant[c] and first_left < 0:
                first_left = step
            if domain.right_slant[c] and first_right < 0:
                first_right = step

    touch(0, (L, R))
    step = 0
    while True:
        R = int(nbr[L, k])
        front = int(nbr[L, (k + 5) % 6])
        assert is_black(L) and not is_black(R), "black-left invariant violated"
        lefts.append(L)
        rights.append(R)
        verts.append((int(_FACE_KIND[k]), int(domain.site_q[L] + _FACE_DQ[k]),
                      int(domain.site_r[L] + _FACE_DR[k])))
        step += 1
        touch(step, (L, R, front))
        if front < 0:
            break
        if is_black(front):
            L, k = front, (k + 1) % 6
        else:
            k = (k + 5) % 6

    lefts = np.asarray(lefts, dtype=np.int32)
    rights = np.asarray(rights, dtype=np.int32)
    vk, vq, vr = (np.asarray(a, dtype=t) for a, t in
                  zip(zip(*verts), (np.int8, np.int32, np.int32)))
    revealed = np.unique(np.concatenate([lefts, rights]))
    return InterfacePath(domain, lefts, rights, vk, vq, vr,
                         first_left, first_right,
                         revealed_sites=revealed,
                         revealed_black=np.array([is_black(int(s)) for s in revealed]))


def side_outcome(path: InterfacePath) -> SideOutcome:
    """Which open side the path touched first (tie on simultaneous/apex-only)."""
    fl = path.first_left if path.first_left >= 0 else math.inf
    fr = path.first_right if path.first_right >= 0 else math.inf
    if fr < fl:
        return SideOutcome.RIGHT
    if fl < fr:
        return SideOutcome.LEFT
    return SideOutcome.TIE


def outcome_value(outcome: SideOutcome) -> float:
    """Crossing-indicator value with the tie-splitting rule."""
    return {SideOutcome.LEFT: 0.0, SideOutcome.TIE: 0.5, SideOutcome.RIGHT: 1.0}[outcome]


def asymmetry(path: InterfacePath) -> tuple[int, int, int]:
    """(distinct black revealed, distinct white revealed, step count)."""
    return path.ell_plus, path.ell_minus, path.ell


def box_count(path: InterfacePath, lam: int) -> int:
    """Cells of the lam x lam sub-triangle grid visited by the rescaled path."""
    if lam < 1:
        raise ValueError(f"lambda must be >= 1, got {lam}")
    pos = path.vertex_positions()
    x, y = pos[:, 0], pos[:, 1]
    c_c = y * (2.0 / SQRT3)
    c_b = (1.0 - c_c) / 2.0 + x
    c_a = (1.0 - c_c) / 2.0 - x
    ids = 0
    for c in (c_a, c_b, c_c):
        f = np.clip(np.floor(lam * c).astype(np.int64), 0, lam - 1)
        ids = ids * lam + f
    return int(np.unique(ids).size)


# -- region side classification ------------------------------------------


def _dist_to_unit_triangle_sides(cx: float, cy: float) -> float:
    d_bottom = cy
    d_left = (SQRT3 * cx - cy + SQRT3 / 2.0) / 2.0
    d_right = (-SQRT3 * cx - cy + SQRT3 / 2.0) / 2.0
    return min(d_bottom, d_left, d_right)


def _path_hits_disc(pos: np.ndarray, disc: Disc) -> bool:
    c = np.array([disc.cx, disc.cy])
    d0 = pos - c
    if np.any(np.einsum("ij,ij->i", d0, d0) <= disc.radius ** 2):
        return True
    a, b = pos[:-1], pos[1:]
    ab = b - a
    denom = np.einsum("ij,ij->i", ab, ab)
    denom[denom == 0] = 1.0
    t = np.clip(np.einsum("ij,ij->i", c - a, ab) / denom, 0.0, 1.0)
    near = a + t[:, None] * ab
    d = near - c
    return bool(np.any(np.einsum("ij,ij->i", d, d) <= disc.radius ** 2))


@njit(cache=True)
def _flood_component(adj, blocked, seeds):
    n = adj.shape[0]
    state = np.zeros(n, dtype=np.uint8)  # 1 = queued/visited
    stack = np.empty(n, dtype=np.int64)
    top = 0
    for s in seeds:
        if not blocked[s] and state[s] == 0:
            state[s] = 1
            stack[top] = s
            top += 1
    while top > 0:
        top -= 1
        v = stack[top]
        for j in range(3):
            w = adj[v, j]
            if w >= 0 and not blocked[w] and state[w] == 0:
                state[w] = 1
                stack[top] = w
                top += 1
    return state


def _side_by_parity(pos: np.ndarray, cx: float, cy: float) -> DiscSide:
    # extend the polyline vertically below the start and above the apex,
    # then count crossings of the rightward ray from (cx, cy)
    ext = np.vstack([[pos[0, 0], -10.0], pos, [pos[-1, 0], 10.0]])
    y0, y1 = ext[:-1, 1], ext[1:, 1]
    x0, x1 = ext[:-1, 0], ext[1:, 0]
    straddle = (y0 > cy) != (y1 > cy)
    with np.errstate(divide="ignore", invalid="ignore"):
        xc = x0 + (x1 - x0) * (cy - y0) / (y1 - y0)
    crossings = int(np.count_nonzero(straddle & (xc > cx)))
    return DiscSide.LEFT if crossings % 2 == 1 else DiscSide.RIGHT


def region_side(path: InterfacePath, disc: Disc) -> DiscSide:
    """Classify a disc as left of the path, right of it, or hit by it.

    The disc must sit strictly inside the unit triangle.  Classification is
    by flood fill over the dual-vertex graph with the path vertices removed:
    the disc's component touches only black boundary cells (left) or only
    white ones (right).
    """
    if _dist_to_unit_triangle_sides(disc.cx, disc.cy) <= disc.radius:
        raise ValueError("disc touches or leaves the domain boundary")
    pos = path.vertex_positions()
    if _path_hits_disc(pos, disc):
        return DiscSide.HIT

    dual = path.domain.dual
    blocked = np.zeros(dual.n_vertices, dtype=np.bool_)
    faces = path.face_indices()
    blocked[faces[faces >= 0]] = True

    rescaled = dual.positions / path.domain.n
    d2 = (rescaled[:, 0] - disc.cx) ** 2 + (rescaled[:, 1] - disc.cy) ** 2
    seeds = np.flatnonzero((d2 <= disc.radius ** 2) & ~blocked)
    if seeds.size == 0:
        return _side_by_parity(pos, disc.cx, disc.cy)
    comp = _flood_component(dual.adjacency, blocked, seeds)
    in_comp = comp == 1
    black = bool(np.any(dual.touches_black[in_comp]))
    white = bool(np.any(dual.touches_white[in_comp]))
    if black and white:
        raise RuntimeError("disc component touches both boundary colors")
    if black:
        return DiscSide.LEFT
    if white:
        return DiscSide.RIGHT
    # fully enclosed pocket: fall back to geometric parity
    return _side_by_parity(pos, disc.cx, disc.cy)


def pivotal_sweep(fld: CouplingField, p_hi: float, disc: Disc) -> list:
    """Raise p from 1/2 to p_hi one site flip at a time and record the
    flips at which the interface jumps across the disc without hitting it.

    Returns a list of (p, site, from_side, to_side) with sides in
    {DiscSide.LEFT, DiscSide.RIGHT}.
    """
    if p_hi < 0.5:
        raise ValueError(f"p_hi must be >= 1/2, got {p_hi}")
    domain = fld.domain
    black = (fld.u < 0.5).copy()
    path = _explore_masked(domain, black)
    side = region_side(path, disc)
    jumps = []
    for u_x, site in flip_schedule(fld, 0.5, p_hi):
        black[site] = True
        new_path = _explore_masked(domain, black)
        if new_path.ell == path.ell and np.array_equal(new_path.lefts, path.lefts):
            continue
        new_side = region_side(new_path, disc)
        if (side != new_side and side != DiscSide.HIT and new_side != DiscSide.HIT):
            jumps.append((float(u_x), int(site), side, new_side))
        side = new_side
        path = new_path
    return jumps


# -- good / very-good triangles ------------------------------------------


@dataclass
class GoodTriangleReport:
    triangle: SubTriangle
    a: float
    status: TriangleStatus
    sigma_index: int | None = None
    entry_index: int | None = None
    a0: tuple | None = None
    a1: tuple | None = None
    a2: tuple | None = None
    d_sites: np.ndarray | None = None
    arc1_sites: np.ndarray | None = None
    arc2_sites: np.ndarray | None = None
    arc3_sites: np.ndarray | None = None

    @property
    def is_good(self) -> bool:
        return self.status in (TriangleStatus.GOOD, TriangleStatus.VERY_GOOD)


def _crossings_of_level(pos, y_level, x_lo, x_hi, i0=0, i1=None):
    """Step indices and x's where the polyline crosses a horizontal segment."""
    y = pos[:, 1]
    x = pos[:, 0]
    if i1 is None:
        i1 = pos.shape[0] - 1
    y0, y1 = y[i0:i1], y[i0 + 1:i1 + 1]
    straddle = (y0 <= y_level) != (y1 <= y_level)
    idx = np.flatnonzero(straddle)
    if idx.size == 0:
        return idx, np.empty(0)
    x0 = x[i0:i1][idx]
    x1 = x[i0 + 1:i1 + 1][idx]
    xc = x0 + (x1 - x0) * (y_level - y0[idx]) / (y1[idx] - y0[idx])
    keep = (xc >= x_lo) & (xc <= x_hi)
    return idx[keep] + i0, xc[keep]


def _slant_crossings(pos, wx, wy, eta, y_min, left: bool, i0=0):
    """Step indices where the polyline crosses a slant side of t' (y >= y_min)."""
    x = pos[i0:, 0]
    y = pos[i0:, 1]
    if left:
        g = (y - wy) - SQRT3 * (x - wx + eta / 2.0)
    else:
        g = (y - wy) - SQRT3 * (wx + eta / 2.0 - x)
    g0, g1 = g[:-1], g[1:]
    straddle = (g0 <= 0) != (g1 <= 0)
    idx = np.flatnonzero(straddle)
    if idx.size == 0:
        return idx
    t = g0[idx] / (g0[idx] - g1[idx])
    yc = y[idx] + t * (y[idx + 1] - y[idx])
    apex_y = wy + eta * SQRT3 / 2.0
    keep = (yc >= y_min) & (yc <= apex_y + 1e-12)
    return idx[keep] + i0


def good_triangle_status(path: InterfacePath, t: SubTriangle, a: float = 0.2) -> GoodTriangleReport:
    """Evaluate the good / very-good status of a small upward triangle.

    Geometry inside t (side eta, bottom-middle w): the rectangle
    r = [-a*eta, a*eta] x [0, eta/4] sits on the bottom edge, m and b are
    its horizontal cross-sections at heights eta/8 and eta/4, and t' is the
    part of t above m.  Good: the path's first visit to t - r crosses b,
    having entered r from below and hit m without leaving r in between.
    Very good: the continuation then touches the bottom-right piece of t'
    (between the rightmost m-crossing and the corner) before the rest of
    the t' boundary.
    """
    n = path.domain.n
    eta = t.side
    if eta * n < 8:
        raise ValueError(f"triangle side {eta} is below 8 lattice units at n={n}")
    if not (0 < a < 0.4):
        raise ValueError(f"geometry parameter a must be in (0, 0.4), got {a}")
    wx = t.corner_x + eta / 2.0
    wy = t.corner_y
    apex = (wx, wy + eta * SQRT3 / 2.0)
    for px, py in ((t.corner_x, wy), (t.corner_x + eta, wy), apex):
        if _dist_to_unit_triangle_sides(px, py) < -1e-9:
            raise ValueError("triangle leaves the unit-triangle domain")

    y_m = wy + eta / 8.0
    y_b = wy + eta / 4.0
    x_lo = wx - a * eta
    x_hi = wx + a * eta
    hw = eta * (0.5 - 1.0 / (8.0 * SQRT3))  # half-width of t at the m level
    a0 = (wx + hw, y_m)

    pos = path.vertex_positions()
    in_t = region_contains(t, pos)
    in_r = region_contains(Rect(x_lo, x_hi, wy, y_b), pos)
    in_tmr = in_t & ~in_r

    report = GoodTriangleReport(t, a, TriangleStatus.NOT_GOOD, a0=a0)
    if not in_tmr.any():
        return report
    sigma = int(np.argmax(in_tmr))
    if sigma == 0 or not in_r[sigma - 1]:
        return report
    # entering t - r must happen through b
    y0, y1 = pos[sigma - 1, 1], pos[sigma, 1]
    if not ((y0 <= y_b) != (y1 <= y_b)):
        return report
    xc = pos[sigma - 1, 0] + (pos[sigma, 0] - pos[sigma - 1, 0]) * \
        (y_b - y0) / (y1 - y0)
    if not (x_lo <= xc <= x_hi):
        return report
    # first-ever residence in r must be contiguous up to sigma
    e0 = int(np.argmax(in_r))
    if e0 >= sigma or not in_r[e0:sigma].all():
        return report
    m_idx, m_x = _crossings_of_level(pos, y_m, x_lo, x_hi, i0=e0, i1=sigma)
    if m_idx.size == 0:
        return report

    a1x = float(m_x.max())
    a2x = float(m_x.min())
    report.status = TriangleStatus.GOOD
    report.sigma_index = sigma
    report.entry_index = e0
    report.a1 = (a1x, y_m)
    report.a2 = (a2x, y_m)

    # very good: continuation touches boundary arc 1 before arc 2
    arc1_idx, _ = _crossings_of_level(pos, y_m, a1x + 1e-12, wx + hw, i0=sigma)
    arc2_bot, _ = _crossings_of_level(pos, y_m, wx - hw, a2x - 1e-12, i0=sigma)
    arc2_l = _slant_crossings(pos, wx, wy, eta, y_m, left=True, i0=sigma)
    arc2_r = _slant_crossings(pos, wx, wy, eta, y_m, left=False, i0=sigma)
    hit1 = int(arc1_idx.min()) if arc1_idx.size else None
    cands = [int(ix.min()) for ix in (arc2_bot, arc2_l, arc2_r) if ix.size]
    hit2 = min(cands) if cands else None
    if hit1 is not None and (hit2 is None or hit1 < hit2):
        report.status = TriangleStatus.VERY_GOOD

    _attach_d_region(path, report, wx, wy, eta, y_m, a1x, hw)
    return report


def _attach_d_region(path, report, wx, wy, eta, y_m, a1x, hw):
    """Compute the unexplored component of t' above the explored prefix."""
    dom = path.domain
    rc = dom.rescaled_centers
    in_t = region_contains(report.triangle, rc)
    in_tp = in_t & (rc[:, 1] >= y_m)
    sigma = report.sigma_index
    prefix = np.unique(np.concatenate([path.lefts[:sigma], path.rights[:sigma]]))
    unexplored = in_tp.copy()
    unexplored[prefix] = False

    cand = np.flatnonzero(unexplored)
    if cand.size == 0:
        return
    top = cand[np.argmax(rc[cand, 1])]
    seen = np.zeros(dom.n_sites, dtype=bool)
    seen[top] = True
    queue = deque([int(top)])
    nbr = dom.neighbor_table
    while queue:
        s = queue.popleft()
        for k in range(6):
            w = int(nbr[s, k])
            if w >= 0 and unexplored[w] and not seen[w]:
                seen[w] = True
                queue.append(w)
    d_sites = np.flatnonzero(seen).astype(np.int32)
    report.d_sites = d_sites

    row_h = (SQRT3 / 2.0) / dom.n
    first_row = (rc[d_sites, 1] >= y_m) & (rc[d_sites, 1] < y_m + row_h)
    in_arc1_x = (rc[d_sites, 0] > a1x) & (rc[d_sites, 0] <= wx + hw)
    report.arc1_sites = d_sites[first_row & in_arc1_x]

    # black flank of the excursion inside t'
    e0 = report.entry_index
    flank = np.unique(path.lefts[e0:sigma])
    flank = flank[in_tp[flank]]
    report.arc3_sites = flank.astype(np.int32)

    # remaining outer rim of d (report metadata)
    on_rim = np.zeros(d_sites.size, dtype=bool)
    for j, s in enumerate(d_sites):
        for k in range(6):
            w = int(nbr[s, k])
            if w < 0 or not in_tp[w]:
                on_rim[j] = True
                break
    arc2 = d_sites[on_rim & ~(first_row & in_arc1_x)]
    report.arc2_sites = arc2


@njit(cache=True)
def _count_crossings(indptr, indices, is_source, is_target, black_mat):
    n_samples, n_cells = black_mat.shape
    hits = 0
    state = np.empty(n_cells, dtype=np.uint8)
    stack = np.empty(n_cells, dtype=np.int64)
    for s in range(n_samples):
        for i in range(n_cells):
            state[i] = 0
        top = 0
        found = False
        for i in range(n_cells):
            if is_source[i] and black_mat[s, i]:
                state[i] = 1
                stack[top] = i
                top += 1
                if is_target[i]:
                    found = True
        while top > 0 and not found:
            top -= 1
            v = stack[top]
            for jj in range(indptr[v], indptr[v + 1]):
                w = indices[jj]
                if state[w] == 0 and black_mat[s, w]:
                    state[w] = 1
                    if is_target[w]:
                        found = True
                        break
                    stack[top] = w
                    top += 1
        if found:
            hits += 1
    return hits


def f_hat(path: InterfacePath, report: GoodTriangleReport,
          samples: int, seed: int, stream_id: int = 0) -> Estimate:
    """Monte Carlo estimate of the critical crossing probability from the
    bottom-right arc of d to the explored black flank, resampling the
    unexplored cells of d with fresh p = 1/2 randomness.
    """
    if not report.is_good:
        raise ValueError("f_hat requires a Good triangle report")
    if report.d_sites is None or report.d_sites.size == 0:
        raise ValueError("degenerate d: no unexplored cells above m")
    if report.arc1_sites is None or report.arc3_sites is None or \
            report.arc3_sites.size == 0:
        raise ValueError("degenerate d: empty boundary arcs")

    dom = path.domain
    d_sites = report.d_sites
    local = -np.ones(dom.n_sites, dtype=np.int64)
    local[d_sites] = np.arange(d_sites.size)

    flank_adjacent = np.zeros(d_sites.size, dtype=np.uint8)
    nbr = dom.neighbor_table
    for s in report.arc3_sites.tolist():
        for k in range(6):
            w = int(nbr[s, k])
            if w >= 0 and local[w] >= 0:
                flank_adjacent[local[w]] = 1

    is_source = np.zeros(d_sites.size, dtype=np.uint8)
    is_source[local[report.arc1_sites]] = 1
    if is_source.sum() == 0:
        # the flank may reach into the arc-1 zone itself, making the
        # crossing certain; otherwise the source arc is walled off
        rc = dom.rescaled_centers
        wx = report.triangle.corner_x + report.triangle.side / 2.0
        hw = report.triangle.side * (0.5 - 1.0 / (8.0 * SQRT3))
        y_m = report.a1[1]
        row_h = (SQRT3 / 2.0) / dom.n
        fx = rc[report.arc3_sites, 0]
        fy = rc[report.arc3_sites, 1]
        if np.any((fx > report.a1[0]) & (fx <= wx + hw) &
                  (fy >= y_m) & (fy < y_m + row_h)):
            return Estimate(1.0, 0.0, samples)
        raise ValueError("degenerate d: source arc is empty")

    # adjacency of d cells in CSR form
    rows, cols = [], []
    for j, s in enumerate(d_sites.tolist()):
        for k in range(6):
            w = int(nbr[s, k])
            if w >= 0 and local[w] >= 0:
                rows.append(j)
                cols.append(local[w])
    order = np.lexsort((cols, rows))
    rows = np.asarray(rows, dtype=np.int64)[order]
    cols = np.asarray(cols, dtype=np.int64)[order]
    indptr = np.searchsorted(rows, np.arange(d_sites.size + 1))

    rng = subsystem_rng(seed, stream_id, tag=0xF)
    black = rng.random((samples, d_sites.size)) < 0.5
    hits = _count_crossings(indptr, cols, is_source, flank_adjacent,
                            black.astype(np.uint8))
    mean = hits / samples
    stderr = math.sqrt(mean * (1.0 - mean) / samples)
    return Estimate(mean, stderr, samples)


_OFFSET_INDEX = {off: k for k, off in
                 enumerate(((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)))}


def dump_path(path: InterfacePath) -> str:
    """Path dump: one `step_index q r direction` line per step, where (q, r)
    is the left cell and direction its clockwise neighbor index toward the
    right cell, then a trailer with the revealed counts and side outcome.
    """
    dom = path.domain
    lines = []
    for i, (left, right) in enumerate(zip(path.lefts.tolist(), path.rights.tolist())):
        dq = int(dom.site_q[right]) - int(dom.site_q[left])
        dr = int(dom.site_r[right]) - int(dom.site_r[left])
        lines.append(f"{i} {dom.site_q[left]} {dom.site_r[left]} "
                     f"{_OFFSET_INDEX[(dq, dr)]}")
    lines.append(f"# {path.ell_plus} {path.ell_minus} {path.ell} "
                 f"{side_outcome(path).value}")
    return "\n".join(lines) + "\n"


class DumpedPath:
    """Rendering view of a parsed path dump (positions only)."""

    def __init__(self, domain, positions, counters, outcome):
        self.domain = domain
        self._positions = positions
        self.ell_plus, self.ell_minus, self.ell = counters
        self.outcome = outcome

    def vertex_positions(self, rescaled: bool = True):
        return self._positions if rescaled else self._positions * self.domain.n


def parse_path_dump(domain: TriangleDomain, text: str) -> DumpedPath:
    """Rebuild the vertex polyline (and trailer) from a path dump."""
    verts = []
    counters = (0, 0, 0)
    outcome = None
    start = None
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            lp, lm, ell, out = line[1:].split()
            counters = (int(lp), int(lm), int(ell))
            outcome = SideOutcome(out)
            continue
        _, q, r, k = (int(tok) for tok in line.split())
        if start is None:
            start = (1, q, -1)
            verts.append(start)
        verts.append((int(_FACE_KIND[k]), q + int(_FACE_DQ[k]), r + int(_FACE_DR[k])))
    n = domain.n
    pos = np.empty((len(verts), 2))
    for i, (kind, q, r) in enumerate(verts):
        x = q + r / 2.0 - (n - 1) / 2.0
        y = r * (SQRT3 / 2.0)
        if kind == 1:
            pos[i] = (x + 1.0, y + SQRT3 / 3.0)
        else:
            pos[i] = (x + 0.5, y + SQRT3 / 6.0)
    return DumpedPath(domain, pos / n, counters, outcome)


def unit_triangulation(eta: float) -> list[SubTriangle]:
    """Row-major upward triangles of side eta tiling the unit triangle."""
    k = round(1.0 / eta)
    if abs(k * eta - 1.0) > 1e-9 or k < 1:
        raise ValueError(f"eta must divide 1 exactly, got {eta}")
    out = []
    for j in range(k):
        for i in range(k - j):
            out.append(SubTriangle(-0.5 + i * eta + j * eta / 2.0,
                                   j * eta * SQRT3 / 2.0, eta))
    return out
