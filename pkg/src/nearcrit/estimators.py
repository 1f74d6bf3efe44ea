"""Monte Carlo experiments: crossing probability, thresholds, correlation
length, exponent fits, asymmetry, regime sweep, the Z statistic, and the
exact small-domain enumeration oracle.

All experiments derive sample i from the coupling field keyed by
(master_seed, stream_offset + i), so tables are reproducible bit-exactly
for any worker count.  Threshold searches (p*, L) replace the exact infima
of the definitions by bracketing with 3-sigma significance and sample
escalation, which is the honest Monte Carlo substitute.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arms import FOUR_ARM, ArmQuery, sample_arm_prob
from .explorer import (TriangleStatus, box_count, _explore_masked, f_hat,
                       good_triangle_status, outcome_value, side_outcome,
                       unit_triangulation)
from .lattice import TriangleDomain, build_domain
from .mc import map_chunks
from .sampling import sample_field
from .stats import Estimate, PowerFit, fit_exponent, mean_estimate

@dataclass
class ExperimentResult:
    """One experiment's output table plus its provenance.

    `wall_time` is measurement metadata and is never serialized: a rerun
    with the same master seed must reproduce the written table bit-exactly.
    """

    experiment: str
    params: dict
    header: list
    rows: list
    master_seed: int
    wall_time: float = 0.0


_domain_cache: dict[int, TriangleDomain] = {}


def _domain(n: int) -> TriangleDomain:
    if n not in _domain_cache:
        _domain_cache[n] = build_domain(n)
    return _domain_cache[n]


# -- crossing probability ---------------------------------------------------


def _crossing_chunk(n, p, seed, stream_offset, lo, hi):
    dom = _domain(n)
    out = np.empty(hi - lo, dtype=np.float64)
    for i in range(lo, hi):
        fld = sample_field(dom, seed, stream_offset + i)
        path = _explore_masked(dom, fld.u < p)
        out[i - lo] = outcome_value(side_outcome(path))
    return out


def estimate_R(p: float, n: int, samples: int, seed: int, *,
               stream_offset: int = 0, workers: int = 1) -> Estimate:
    """Crossing probability R(p, n): mean outcome with ties counted 1/2."""
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p}")
    chunks = map_chunks(_crossing_chunk, (n, p, seed, stream_offset),
                        samples, workers)
    values = np.concatenate(chunks)
    rhat = float(values.sum()) / samples
    return Estimate(rhat, math.sqrt(max(rhat * (1 - rhat), 0.0) / samples), samples)


def crossing_outcomes(p: float, n: int, samples: int, seed: int, *,
                      stream_offset: int = 0, workers: int = 1) -> np.ndarray:
    """Per-sample outcome values (0, 1/2, 1) in sample order."""
    chunks = map_chunks(_crossing_chunk, (n, p, seed, stream_offset),
                        samples, workers)
    return np.concatenate(chunks) if chunks else np.empty(0)


# -- exact enumeration oracle ------------------------------------------------


def enumerate_exact(n: int, p: float) -> tuple[float, float]:
    """Exact R(p, n) and E[path length] by summing over all interior colorings.

    Only feasible for small domains; rejected above 20 interior sites.
    """
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"p must lie in [0, 1], got {p}")
    dom = _domain(n)
    interior = dom.interior_sites
    k = interior.size
    if k > 20:
        raise ValueError(f"{k} interior sites exceed the enumeration cap of 20")
    r_total = 0.0
    ell_total = 0.0
    black = np.zeros(dom.n_sites, dtype=bool)
    for code in range(1 << k):
        bits = (code >> np.arange(k)) & 1
        black[interior] = bits.astype(bool)
        nb = int(bits.sum())
        w = (p ** nb) * ((1.0 - p) ** (k - nb))
        if w == 0.0:
            continue
        path = _explore_masked(dom, black)
        r_total += w * outcome_value(side_outcome(path))
        ell_total += w * path.ell
    return r_total, ell_total


# -- threshold searches ------------------------------------------------------


@dataclass(frozen=True)
class BracketResult:
    """Outcome of a significance-bracketed search."""

    value: float
    lo: float
    hi: float
    resolved: bool
    probes: int = 0


class _ProbeBudget:
    """Escalating sample schedule with a disjoint stream per probe round."""

    def __init__(self, base_samples, max_doublings, workers):
        self.base = base_samples
        self.max_doublings = max_doublings
        self.workers = workers
        self.offset = 0
        self.probes = 0

    def classify(self, fn, threshold):
        """fn(samples, offset) -> outcome values; classify mean vs threshold
        at 3 sigma, escalating by doubling.  Returns +1, -1 or 0."""
        values = np.empty(0)
        samples = self.base
        for _ in range(self.max_doublings + 1):
            new = fn(samples, self.offset)
            self.offset += samples
            self.probes += 1
            values = np.concatenate([values, new])
            m = float(values.mean())
            se = math.sqrt(max(m * (1 - m), 1e-12) / values.size)
            if m - threshold > 3 * se:
                return 1
            if threshold - m > 3 * se:
                return -1
            samples = values.size  # double the pool
        return 0


def estimate_pstar(n: int, eps: float, samples_per_probe: int, tolerance: float,
                   seed: int, *, max_doublings: int = 6,
                   workers: int = 1) -> BracketResult:
    """Bisection for p*(n, eps) = inf {p : R(p, n) > 1/2 + eps}.

    Each probe classifies R(mid) against 1/2 + eps at 3 sigma with sample
    escalation; an unresolvable probe stops the search and flags the result.
    """
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    budget = _ProbeBudget(samples_per_probe, max_doublings, workers)
    lo, hi = 0.5, 1.0
    threshold = 0.5 + eps
    while hi - lo > tolerance:
        mid = 0.5 * (lo + hi)
        cls = budget.classify(
            lambda s, off: crossing_outcomes(mid, n, s, seed,
                                             stream_offset=off,
                                             workers=budget.workers),
            threshold)
        if cls > 0:
            hi = mid
        elif cls < 0:
            lo = mid
        else:
            return BracketResult(0.5 * (lo + hi), lo, hi, False, budget.probes)
    return BracketResult(0.5 * (lo + hi), lo, hi, True, budget.probes)


def estimate_L(p: float, eps: float, samples_per_probe: int, n_max: int,
               seed: int, *, max_doublings: int = 6,
               workers: int = 1) -> BracketResult:
    """Correlation length L(p, eps) = inf {even n : R(p, n) > 1/2 + eps}.

    Doubles n until R exceeds the threshold significantly, then bisects
    over even n.  `value` is the smallest even n classified above.
    """
    if not (0.5 < p <= 1.0):
        raise ValueError(f"p must exceed 1/2, got {p}")
    if not (0.0 < eps < 0.5):
        raise ValueError(f"eps must lie in (0, 1/2), got {eps}")
    budget = _ProbeBudget(samples_per_probe, max_doublings, workers)
    threshold = 0.5 + eps

    def classify(n):
        return budget.classify(
            lambda s, off: crossing_outcomes(p, n, s, seed,
                                             stream_offset=off,
                                             workers=budget.workers),
            threshold)

    n_lo = None  # largest n classified below
    n_hi = None  # smallest n classified above
    n = 2
    while n <= n_max:
        cls = classify(n)
        if cls == 0:
            return BracketResult(float(n), n_lo or 2, n, False, budget.probes)
        if cls > 0:
            n_hi = n
            break
        n_lo = n
        n *= 2
    if n_hi is None:
        return BracketResult(float(n_max), n_lo or 2, n_max, False, budget.probes)
    lo = n_lo if n_lo is not None else 0
    while n_hi - lo > 2:
        mid = lo + 2 * ((n_hi - lo) // 4)
        mid = max(lo + 2, min(mid, n_hi - 2))
        cls = classify(mid)
        if cls == 0:
            return BracketResult(float(n_hi), lo, n_hi, False, budget.probes)
        if cls > 0:
            n_hi = mid
        else:
            lo = mid
    return BracketResult(float(n_hi), lo, n_hi, True, budget.probes)


# -- scaling relation check --------------------------------------------------


@dataclass(frozen=True)
class ScalingRow:
    p: float
    corr_len: float
    resolved: bool
    a4: Estimate
    product: float


def scaling_check(p_list, eps: float, samples_per_probe: int, arm_samples: int,
                  seed: int, *, n_max: int = 4096,
                  workers: int = 1) -> tuple[list, float]:
    """Per p: the product (p - 1/2) * L^2 * P_{1/2}(A^4(L)).

    Returns (rows, max_over_min product ratio across resolved rows).
    """
    rows = []
    for j, p in enumerate(p_list):
        res = estimate_L(p, eps, samples_per_probe, n_max, seed + 7919 * j,
                         workers=workers)
        ell = int(res.value)
        a4 = sample_arm_prob(0.5, ArmQuery(FOUR_ARM, 0, ell), arm_samples,
                             seed + 7919 * j + 1, workers=workers)
        product = (p - 0.5) * ell ** 2 * a4.mean
        rows.append(ScalingRow(p, res.value, res.resolved, a4, product))
    products = [r.product for r in rows if r.resolved and r.product > 0]
    ratio = max(products) / min(products) if products else math.inf
    return rows, ratio


# -- path-statistics experiments ----------------------------------------------


def _path_stats_chunk(n, p, seed, stream_offset, lams, lo, hi):
    dom = _domain(n)
    nl = len(lams)
    out = np.empty((hi - lo, 4 + nl), dtype=np.float64)
    for i in range(lo, hi):
        fld = sample_field(dom, seed, stream_offset + i)
        path = _explore_masked(dom, fld.u < p)
        out[i - lo, 0] = path.ell
        out[i - lo, 1] = path.ell_plus
        out[i - lo, 2] = path.ell_minus
        out[i - lo, 3] = outcome_value(side_outcome(path))
        for j, lam in enumerate(lams):
            out[i - lo, 4 + j] = box_count(path, lam)
    return out


def path_statistics(n: int, p: float, samples: int, seed: int, *,
                    lams=(), stream_offset: int = 0,
                    workers: int = 1) -> np.ndarray:
    """Per-sample records: ell, ell_plus, ell_minus, outcome, box counts."""
    chunks = map_chunks(_path_stats_chunk,
                        (n, p, seed, stream_offset, tuple(lams)),
                        samples, workers)
    return np.concatenate(chunks, axis=0)


@dataclass(frozen=True)
class LengthRow:
    n: int
    p: float
    ell: Estimate


def length_experiment(n_list, p_list, samples: int, seed: int, *,
                      workers: int = 1) -> tuple[list, PowerFit]:
    """E[interface length] against n, with the fitted growth exponent."""
    if len(n_list) != len(p_list):
        raise ValueError("n_list and p_list must align")
    rows = []
    for j, (n, p) in enumerate(zip(n_list, p_list)):
        stats = path_statistics(n, p, samples, seed + 104729 * j, workers=workers)
        rows.append(LengthRow(n, p, mean_estimate(stats[:, 0])))
    pf = fit_exponent([(r.n, r.ell.mean, r.ell.stderr) for r in rows])
    return rows, pf


def dimension_experiment(n: int, p: float, lam_list, samples: int, seed: int, *,
                         workers: int = 1) -> tuple[list, PowerFit]:
    """E[box count] against lambda; lambda = 1 rows are excluded from the fit."""
    lams = [int(l) for l in lam_list]
    if any(l > n // 8 for l in lams):
        raise ValueError("lambda values must not exceed n/8")
    stats = path_statistics(n, p, samples, seed, lams=lams, workers=workers)
    rows = [(lam, mean_estimate(stats[:, 4 + j])) for j, lam in enumerate(lams)]
    pts = [(lam, e.mean, e.stderr) for lam, e in rows if lam > 1]
    return rows, fit_exponent(pts)


@dataclass(frozen=True)
class AsymmetrySummary:
    n: int
    p: float
    samples: int
    diff: dict
    diff_over_ell: dict
    diff_over_sqrt_ell: dict
    records: np.ndarray = field(repr=False, default=None)


_QUANTS = (0.1, 0.25, 0.5, 0.75, 0.9)


def _quantiles(values: np.ndarray) -> dict:
    qs = np.quantile(values, _QUANTS)
    out = {f"q{int(100 * q)}": float(v) for q, v in zip(_QUANTS, qs)}
    out["mean"] = float(values.mean())
    return out


def asymmetry_experiment(n: int, p: float, samples: int, seed: int, *,
                         workers: int = 1) -> AsymmetrySummary:
    """Quantiles of the revealed-cell color imbalance along the interface."""
    stats = path_statistics(n, p, samples, seed, workers=workers)
    ell = stats[:, 0]
    diff = stats[:, 1] - stats[:, 2]
    return AsymmetrySummary(n, p, samples,
                            _quantiles(diff),
                            _quantiles(diff / ell),
                            _quantiles(diff / np.sqrt(ell)),
                            records=stats)


# -- regime sweep -------------------------------------------------------------


@dataclass(frozen=True)
class RegimeRow:
    b: float
    n: int
    p: float
    r: Estimate


def regime_sweep(b_list, c: float, n_list, samples: int, seed: int, *,
                 workers: int = 1) -> list:
    """R(1/2 + c * n^-b, n) along n for each drift exponent b."""
    if c <= 0:
        raise ValueError("c must be positive")
    rows = []
    for bi, b in enumerate(b_list):
        if b < 0:
            raise ValueError("b must be non-negative")
        for ni, n in enumerate(n_list):
            p = min(1.0, 0.5 + c * float(n) ** (-b))
            est = estimate_R(p, n, samples, seed + 31 * bi + 977 * ni,
                             workers=workers)
            rows.append(RegimeRow(b, n, p, est))
    return rows


# -- Z statistic --------------------------------------------------------------


@dataclass(frozen=True)
class ZResult:
    estimate: Estimate
    n_good_mean: float
    n_short: int        # samples with fewer than K good triangles
    n_degenerate: int   # good triangles skipped for degenerate d
    per_sample: np.ndarray = field(repr=False, default=None)


def _z_chunk(n, p, eta, k_first, f_hat_samples, a_param, seed, lo, hi):
    dom = _domain(n)
    tris = unit_triangulation(eta)
    out = np.empty((hi - lo, 3), dtype=np.float64)
    for i in range(lo, hi):
        fld = sample_field(dom, seed, i)
        path = _explore_masked(dom, fld.u < p)
        z = 0.0
        n_good = 0
        n_degen = 0
        for t_idx, tri in enumerate(tris):
            if n_good >= k_first:
                break
            rep = good_triangle_status(path, tri, a_param)
            if not rep.is_good:
                continue
            try:
                est = f_hat(path, rep, f_hat_samples, seed,
                            stream_id=(i << 8) | t_idx)
            except ValueError:
                n_degen += 1
                continue
            n_good += 1
            z += (1.0 if rep.status is TriangleStatus.VERY_GOOD else 0.0) - est.mean
        out[i - lo] = (z, n_good, n_degen)
    return out


def z_statistic(n: int, p: float, eta: float, k_first: int, samples: int,
                f_hat_samples: int, seed: int, *, a_param: float = 0.2,
                workers: int = 1) -> ZResult:
    """Mean of Z = sum over the first K good triangles of
    [1(very good) - f_hat], averaged over independent interfaces."""
    if eta * n < 16:
        raise ValueError(f"eta * n must be >= 16, got {eta * n}")
    n_tris = len(unit_triangulation(eta))
    if k_first > n_tris:
        raise ValueError(f"K={k_first} exceeds the {n_tris} upward triangles")
    chunks = map_chunks(_z_chunk,
                        (n, p, eta, k_first, f_hat_samples, a_param, seed),
                        samples, workers)
    recs = np.concatenate(chunks, axis=0)
    return ZResult(mean_estimate(recs[:, 0]),
                   float(recs[:, 1].mean()),
                   int(np.count_nonzero(recs[:, 1] < k_first)),
                   int(recs[:, 2].sum()),
                   per_sample=recs)
