"""Seeded randomness: one uniform per site realizes every parameter p at once.

A CouplingField is a Philox-generated array of uniforms, keyed by
(master_seed, stream_id) so that any sample can be regenerated bit-exactly
regardless of worker scheduling.  A site is black at parameter p exactly
when its uniform is below p, which makes the coupling monotone: raising p
only adds black sites.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import TriangleDomain


@dataclass(frozen=True)
class CouplingField:
    domain: TriangleDomain
    u: np.ndarray
    master_seed: int
    stream_id: int


def sample_field(domain: TriangleDomain, master_seed: int, stream_id: int) -> CouplingField:
    """Draw the per-site uniforms for one sample.

    Philox is counter-based: the key is (master_seed, stream_id), so equal
    inputs give bit-identical arrays and distinct stream ids give
    statistically independent fields.
    """
    bitgen = np.random.Philox(key=np.array(
        [np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF),
         np.uint64(stream_id & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64))
    u = np.random.Generator(bitgen).random(domain.n_sites, dtype=np.float64)
    u.flags.writeable = False
    return CouplingField(domain, u, master_seed, stream_id)


def subsystem_rng(master_seed: int, stream_id: int, tag: int) -> np.random.Generator:
    """Independent Philox generator for auxiliary draws (e.g. resampling)."""
    bitgen = np.random.Philox(
        key=np.array([np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF),
                      np.uint64(stream_id & 0xFFFFFFFFFFFFFFFF)], dtype=np.uint64),
        counter=np.array([0, 0, 0, np.uint64(tag)], dtype=np.uint64))
    return np.random.Generator(bitgen)


class Coloring:
    """A black/white coloring of the sites, dense or lazy.

    The color convention is pure threshold: black iff u < p, with no special
    treatment of boundary sites (the explorer forces boundary colors
    itself).  A Dense coloring materializes the black mask up front; a Lazy
    coloring resolves sites on demand and memoizes what it revealed, which
    is the honest mirror of the exploration process.  One exploration per
    Lazy instance; concurrent samples must use distinct instances.
    """

    def __init__(self, domain: TriangleDomain, p: float, *,
                 black: np.ndarray | None = None,
                 fld: CouplingField | None = None):
        if not (0.0 <= p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {p}")
        if (black is None) == (fld is None):
            raise ValueError("exactly one of black=, fld= must be given")
        self.domain = domain
        self.p = p
        self._black = None
        self._field = fld
        self.revealed: dict[int, bool] = {}
        if black is not None:
            black = np.asarray(black, dtype=bool)
            if black.shape != (domain.n_sites,):
                raise ValueError("black mask has wrong shape")
            self._black = black

    @property
    def is_dense(self) -> bool:
        return self._black is not None

    def is_black(self, site: int) -> bool:
        if self._black is not None:
            return bool(self._black[site])
        site = int(site)
        got = self.revealed.get(site)
        if got is None:
            got = bool(self._field.u[site] < self.p)
            self.revealed[site] = got
        return got

    def black_array(self) -> np.ndarray:
        """Full black mask (materializes a Lazy view without memoizing)."""
        if self._black is not None:
            return self._black
        return self._field.u < self.p


def coloring_at(fld: CouplingField, p: float, *, lazy: bool = False) -> Coloring:
    """View of a coupling field at parameter p: black iff u < p."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p}")
    if lazy:
        return Coloring(fld.domain, p, fld=fld)
    return Coloring(fld.domain, p, black=fld.u < p)


def dense_coloring(domain: TriangleDomain, black: np.ndarray, p: float = 0.5) -> Coloring:
    """Explicit coloring from a black mask (p is carried as metadata only)."""
    return Coloring(domain, p, black=black)


@dataclass(frozen=True)
class FlipSchedule:
    """Sites flipped white-to-black as p sweeps (p_lo, p_hi], ascending."""

    thresholds: np.ndarray
    sites: np.ndarray
    p_lo: float
    p_hi: float

    def __len__(self):
        return int(self.sites.size)

    def __iter__(self):
        return zip(self.thresholds.tolist(), self.sites.tolist())


def flip_schedule(fld: CouplingField, p_lo: float, p_hi: float) -> FlipSchedule:
    """Sites with u in (p_lo, p_hi], sorted by threshold (ties by index)."""
    if not (0.0 <= p_lo <= p_hi <= 1.0):
        raise ValueError(f"need 0 <= p_lo <= p_hi <= 1, got ({p_lo}, {p_hi})")
    mask = (fld.u > p_lo) & (fld.u <= p_hi)
    sites = np.flatnonzero(mask).astype(np.int32)
    order = np.lexsort((sites, fld.u[sites]))
    return FlipSchedule(fld.u[sites][order], sites[order], p_lo, p_hi)
