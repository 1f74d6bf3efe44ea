"""Multi-arm annulus events: detection and Monte Carlo estimation.

Events live on free-boundary rhombus patches of the triangular lattice
(axial coordinates, side 2*n_outer + 1 around the center).  A circle of
radius n is the set of sites at hex graph distance exactly n from the
center; arms are monochromatic paths inside the closed annulus joining the
inner circle to the outer one.  For pattern [B,W,B,W] the detector checks
for anchored inner-circle sites whose colors change at least four times in
clockwise cyclic order, which on a planar triangulation is equivalent to
four vertex-disjoint alternating arms; `detect_arms_bruteforce` searches
for the disjoint paths literally and serves as the oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .mc import map_chunks
from .sampling import subsystem_rng
from .stats import Estimate, binomial_estimate

BLACK, WHITE, ABSENT = 1, 0, -1

_PATTERNS = {(1,): "b", (1, 0): "bw", (1, 0, 1, 0): "bwbw"}

# hex adjacency of the axial grid: (dq, dr) in
# (1,0),(1,-1),(0,-1),(-1,0),(-1,1),(0,1)
_HEX_STRUCTURE = np.array([[0, 1, 1],
                           [1, 1, 1],
                           [1, 1, 0]], dtype=bool)


@dataclass(frozen=True)
class ArmPattern:
    """Cyclic color sequence: [B], [B,W] or [B,W,B,W] (1=black, 0=white)."""

    colors: tuple

    def __post_init__(self):
        if tuple(self.colors) not in _PATTERNS:
            raise ValueError(f"unsupported arm pattern {self.colors}")

    @property
    def k(self) -> int:
        return len(self.colors)


ONE_ARM = ArmPattern((1,))
TWO_ARM = ArmPattern((1, 0))
FOUR_ARM = ArmPattern((1, 0, 1, 0))


@dataclass(frozen=True)
class ArmQuery:
    pattern: ArmPattern
    n_inner: int
    n_outer: int
    center: tuple = (0, 0)

    def __post_init__(self):
        # n_inner == n_outer >= 1 is the degenerate one-ring annulus, needed
        # by the quasi-multiplicativity middle factor when n2 = 2*n1
        if self.n_inner < 0 or self.n_outer < max(self.n_inner, 1):
            raise ValueError(
                f"need 0 <= n_inner <= n_outer >= 1, got "
                f"({self.n_inner}, {self.n_outer})")

    @property
    def inner_ring_radius(self) -> int:
        # n_inner = 0 means arms start at the neighbors of the center
        return max(1, self.n_inner)


class _PatchGeometry:
    """Cached ring/annulus masks for rhombus patches of a given radius."""

    _cache: dict = {}

    def __new__(cls, radius: int):
        if radius not in cls._cache:
            self = super().__new__(cls)
            self.radius = radius
            m = 2 * radius + 1
            q = np.arange(-radius, radius + 1)[:, None] * np.ones(m, dtype=np.int64)
            r = np.ones(m, dtype=np.int64)[:, None] * np.arange(-radius, radius + 1)
            self.q, self.r = q, r
            self.dist = (np.abs(q) + np.abs(r) + np.abs(q + r)) // 2
            x = q + r / 2.0
            y = r * (math.sqrt(3) / 2.0)
            self.angle = np.arctan2(y, x)
            self._rings = {}
            cls._cache[radius] = self
        return cls._cache[radius]

    def ring_order(self, rad: int) -> np.ndarray:
        """Flat indices of the ring at graph distance `rad`, clockwise."""
        if rad not in self._rings:
            flat = np.flatnonzero(self.dist.ravel() == rad)
            order = np.argsort(-self.angle.ravel()[flat], kind="stable")
            self._rings[rad] = flat[order]
        return self._rings[rad]


def random_patch(radius: int, p: float, seed: int, stream_id: int) -> np.ndarray:
    """Free-boundary rhombus patch of side 2*radius+1 colored i.i.d. at p."""
    m = 2 * radius + 1
    rng = subsystem_rng(seed, stream_id, tag=1)
    return (rng.random((m, m)) < p).astype(np.int8)


def extract_patch(domain, black_mask: np.ndarray, center_site: int,
                  radius: int) -> np.ndarray:
    """In-domain patch around a site; cells outside the domain are ABSENT."""
    m = 2 * radius + 1
    patch = np.full((m, m), ABSENT, dtype=np.int8)
    q0 = int(domain.site_q[center_site])
    r0 = int(domain.site_r[center_site])
    for dq in range(-radius, radius + 1):
        for dr in range(-radius, radius + 1):
            s = domain.site_index(q0 + dq, r0 + dr)
            if s >= 0:
                patch[dq + radius, dr + radius] = 1 if black_mask[s] else 0
    return patch


def _anchored_colors(patch: np.ndarray, query: ArmQuery) -> np.ndarray:
    """Colors of anchored inner-ring sites, in clockwise cyclic order.

    A site on the inner ring is anchored if its monochromatic component
    inside the closed annulus reaches the outer ring.
    """
    geo = _PatchGeometry((patch.shape[0] - 1) // 2)
    lo = query.inner_ring_radius
    hi = query.n_outer
    if geo.radius < hi:
        raise ValueError(f"patch radius {geo.radius} below n_outer {hi}")
    ball = geo.dist <= hi
    if np.any(patch[ball] == ABSENT):
        raise ValueError("patch does not cover the ball of radius n_outer")
    ann = (geo.dist >= lo) & (geo.dist <= hi)
    inner = geo.ring_order(lo)
    outer = geo.ring_order(hi)

    flat = patch.ravel()
    out = []
    anchored = {}
    for color in (1, 0):
        mask = ann & (patch == color)
        labels, _ = ndimage.label(mask, structure=_HEX_STRUCTURE)
        lf = labels.ravel()
        good = set(np.unique(lf[outer]).tolist()) - {0}
        anchored[color] = {int(i) for i in inner
                           if lf[i] != 0 and int(lf[i]) in good}
    for i in inner:
        if int(i) in anchored[1]:
            out.append(1)
        elif int(i) in anchored[0]:
            out.append(0)
    return np.asarray(out, dtype=np.int8)


def detect_arms(patch: np.ndarray, query: ArmQuery) -> bool:
    """True iff the patch realizes the arm event of the query."""
    seq = _anchored_colors(patch, query)
    k = query.pattern.k
    if k == 1:
        return bool(np.any(seq == 1))
    if k == 2:
        return bool(np.any(seq == 1) and np.any(seq == 0))
    if seq.size < 4 or not (np.any(seq == 1) and np.any(seq == 0)):
        return False
    changes = int(np.count_nonzero(seq != np.roll(seq, -1)))
    return changes >= 4


def detect_arms_bruteforce(patch: np.ndarray, query: ArmQuery) -> bool:
    """Exhaustive search for vertex-disjoint monochromatic arms.

    Independent oracle: enumerates starting sites on the inner ring in
    clockwise cyclic order with colors matching the pattern (up to cyclic
    rotation), then backtracks over simple paths to the outer ring.
    """
    geo = _PatchGeometry((patch.shape[0] - 1) // 2)
    lo = query.inner_ring_radius
    hi = query.n_outer
    ball = geo.dist <= hi
    if np.any(patch[ball] == ABSENT):
        raise ValueError("patch does not cover the ball of radius n_outer")
    ann = (geo.dist >= lo) & (geo.dist <= hi)
    inner = [int(i) for i in geo.ring_order(lo)]
    outer = set(int(i) for i in geo.ring_order(hi))
    flat = patch.ravel()
    m = patch.shape[0]

    nbr_flat = {}

    def neighbors_of(i):
        if i not in nbr_flat:
            qi, ri = divmod(i, m)
            out = []
            for dq, dr in ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1)):
                q2, r2 = qi + dq, ri + dr
                if 0 <= q2 < m and 0 <= r2 < m:
                    j = q2 * m + r2
                    if ann.ravel()[j]:
                        out.append(j)
            nbr_flat[i] = out
        return nbr_flat[i]

    def paths_to_outer(start, color, used):
        """Yield simple monochromatic paths (site sets) start -> outer ring."""
        stack = [(start, [start])]
        # depth-first over simple paths with backtracking handled by caller
        def rec(site, path, on_path):
            if site in outer:
                yield set(path)
                return
            for w in neighbors_of(site):
                if w in used or w in on_path or flat[w] != color:
                    continue
                on_path.add(w)
                path.append(w)
                yield from rec(w, path, on_path)
                path.pop()
                on_path.remove(w)
        yield from rec(start, [start], {start})

    def place(arm_idx, starts, colors, used):
        if arm_idx == len(starts):
            return True
        s = starts[arm_idx]
        for path in paths_to_outer(s, colors[arm_idx], used - {s}):
            if place(arm_idx + 1, starts, colors, used | path):
                return True
        return False

    k = query.pattern.k
    base = list(query.pattern.colors)
    rotations = {tuple(base[i:] + base[:i]) for i in range(k)}
    n = len(inner)
    if n < k:
        return False
    from itertools import combinations
    for combo in combinations(range(n), k):
        cols = tuple(int(flat[inner[i]]) for i in combo)
        if cols not in rotations:
            continue
        starts = [inner[i] for i in combo]
        if place(0, starts, list(cols), set(starts)):
            return True
    return False


def _arm_chunk(radius, p, query, seed, lo, hi):
    out = np.zeros(hi - lo, dtype=np.uint8)
    for i in range(lo, hi):
        patch = random_patch(radius, p, seed, i)
        out[i - lo] = detect_arms(patch, query)
    return out


def sample_arm_prob(p: float, query: ArmQuery, samples: int, seed: int,
                    workers: int = 1) -> Estimate:
    """Monte Carlo estimate of the arm-event probability at parameter p."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p}")
    chunks = map_chunks(_arm_chunk, (query.n_outer, p, query, seed),
                        samples, workers)
    hits = int(sum(int(c.sum()) for c in chunks))
    return binomial_estimate(hits, samples)


def quasi_mult_ratio(p: float, n1: int, n2: int, samples: int, seed: int,
                     pattern: ArmPattern = TWO_ARM, workers: int = 1):
    """Quasi-multiplicativity diagnostic for nested annuli.

    Returns (ratio, stderr) for
    P(A(n1/2)) * P(A(2*n1, n2)) / P(A(n2)); raises if the denominator
    estimate is zero.
    """
    if 2 * n1 > n2:
        raise ValueError(f"need 2*n1 <= n2, got ({n1}, {n2})")
    if n1 < 2:
        raise ValueError("n1 must be at least 2")
    e1 = sample_arm_prob(p, ArmQuery(pattern, 0, n1 // 2), samples, seed, workers)
    e2 = sample_arm_prob(p, ArmQuery(pattern, 2 * n1, n2), samples, seed + 1,
                         workers)
    e3 = sample_arm_prob(p, ArmQuery(pattern, 0, n2), samples, seed + 2, workers)
    if e3.mean == 0:
        raise ValueError("denominator arm probability estimated as zero")
    ratio = e1.mean * e2.mean / e3.mean
    rel = 0.0
    for e in (e1, e2, e3):
        if e.mean > 0:
            rel += (e.stderr / e.mean) ** 2
    return ratio, ratio * math.sqrt(rel)
