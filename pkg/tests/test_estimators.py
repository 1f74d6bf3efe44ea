import numpy as np
import pytest

from nearcrit import estimators as est
from nearcrit.estimators import (crossing_outcomes,
                                 enumerate_exact, estimate_L, estimate_R,
                                 estimate_pstar, path_statistics, regime_sweep,
                                 scaling_check, z_statistic)


def test_deterministic_crossings():
    assert estimate_R(1.0, 8, 200, 0).mean == 1.0
    assert estimate_R(0.0, 8, 200, 0).mean == 0.0


def test_critical_symmetry_small():
    r = estimate_R(0.5, 16, 4000, 123)
    assert abs(r.mean - 0.5) <= 3 * r.stderr


def test_enumerate_symmetry_and_extremes():
    for n in (2, 4, 6):
        r, _ = enumerate_exact(n, 0.5)
        assert np.isclose(r, 0.5)
    assert np.isclose(enumerate_exact(4, 1.0)[0], 1.0)
    assert np.isclose(enumerate_exact(6, 1.0)[0], 1.0)
    # T_2 has no interior sites: every outcome is the apex tie
    assert enumerate_exact(2, 1.0)[0] == 0.5


def test_enumerate_polynomial_identity():
    # with one interior site the crossing probability is exactly p
    for p in (0.3, 0.62, 0.9):
        r, ell = enumerate_exact(4, p)
        assert np.isclose(r, p)
        assert np.isclose(ell, 5.0)  # both branch paths have length 5


def test_enumerate_cap():
    with pytest.raises(ValueError):
        enumerate_exact(12, 0.5)


def test_mc_matches_enumeration():
    for n, p, seed in ((4, 0.7, 1), (6, 0.3, 2), (6, 0.55, 3)):
        exact, ell_exact = enumerate_exact(n, p)
        r = estimate_R(p, n, 20000, seed)
        assert abs(r.mean - exact) <= 3 * max(r.stderr, 1e-9)
        stats = path_statistics(n, p, 20000, seed + 10)
        ell = stats[:, 0]
        se = ell.std(ddof=1) / np.sqrt(ell.size)
        assert abs(ell.mean() - ell_exact) <= 3 * se


def test_pstar_matches_enumeration_root():
    # R(p, 4) = p exactly, so p*(4, 0.1) = 0.6; the probe at the root sits
    # exactly on the threshold and is rightly flagged unresolved, but the
    # bracket must still pin the root
    res = estimate_pstar(4, 0.1, 4000, 0.01, 5)
    assert res.lo <= 0.6 <= res.hi
    assert abs(res.value - 0.6) <= 0.01


def test_pstar_monotone_in_eps():
    a = estimate_pstar(16, 0.05, 1500, 0.01, 7)
    b = estimate_pstar(16, 0.2, 1500, 0.01, 8)
    assert a.value <= b.value + 0.02
    for r in (a, b):
        assert 0.5 < r.value < 1.0


def test_pstar_validation():
    with pytest.raises(ValueError):
        estimate_pstar(8, 0.7, 100, 0.01, 0)
    with pytest.raises(ValueError):
        estimate_pstar(8, 0.1, 100, -1.0, 0)


def test_corrlen_at_p_one():
    # R(1, 2) = 1/2 exactly (no interior), so the search lands on 4
    res = estimate_L(1.0, 0.1, 500, 64, 3)
    assert res.resolved and res.value == 4


def test_corrlen_monotone_in_p():
    hi = estimate_L(0.6, 0.1, 2500, 256, 11)
    lo = estimate_L(0.55, 0.1, 2500, 256, 12)
    assert hi.value <= lo.value


def test_corrlen_reproducible_across_seeds():
    a = estimate_L(0.56, 0.1, 3000, 256, 21)
    b = estimate_L(0.56, 0.1, 3000, 256, 22)
    assert abs(np.log2(a.value) - np.log2(b.value)) <= 1.0


def test_corrlen_validation():
    with pytest.raises(ValueError):
        estimate_L(0.4, 0.1, 100, 64, 0)


def test_corrlen_unresolved_at_n_max():
    # p barely above 1/2 cannot be resolved below a tiny n_max
    res = estimate_L(0.505, 0.1, 400, 8, 13)
    assert not res.resolved
    assert res.value <= 8


def test_scaling_check_single_row():
    rows, ratio = scaling_check([0.58], 0.1, 1500, 4000, 31)
    assert len(rows) == 1
    if rows[0].resolved:
        assert ratio == 1.0
        assert rows[0].product > 0


def test_length_experiment_boundary_regime():
    rows, fit = est.length_experiment([16, 32, 64], [1.0] * 3, 50, 41)
    assert 0.9 <= fit.slope <= 1.1


def test_dimension_validation():
    with pytest.raises(ValueError):
        est.dimension_experiment(32, 0.5, [8], 10, 0)


def test_dimension_lambda_one_excluded_from_fit():
    rows, fit = est.dimension_experiment(64, 0.5, [1, 2, 4, 8], 60, 7)
    assert rows[0][0] == 1 and rows[0][1].mean == 1.0
    # the fit uses only the lambda > 1 rows
    assert len(fit.points) == 3


def test_asymmetry_summary_shape():
    s = est.asymmetry_experiment(32, 0.5, 200, 51)
    assert set(s.diff) == {"q10", "q25", "q50", "q75", "q90", "mean"}
    assert s.records.shape == (200, 4)
    # critical balance: mean diff within 4 sigma of zero
    d = s.records[:, 1] - s.records[:, 2]
    assert abs(d.mean()) <= 4 * d.std(ddof=1) / np.sqrt(d.size)


def test_regime_sweep_extremes():
    rows = regime_sweep([10.0, 0.0], 0.08, [16, 32, 64], 1500, 61)
    for r in rows:
        if r.b == 10.0:
            assert abs(r.r.mean - 0.5) <= 3 * max(r.r.stderr, 1e-6)
    top = [r for r in rows if r.b == 0.0 and r.n == 64][0]
    assert top.r.mean > 0.9
    with pytest.raises(ValueError):
        regime_sweep([1.0], -1.0, [16], 10, 0)


def test_z_statistic_critical_and_variance():
    res = z_statistic(64, 0.5, 0.25, 4, 300, 32, 71)
    assert abs(res.estimate.mean) <= 3 * res.estimate.stderr + 1e-12
    z = res.per_sample[:, 0]
    assert z.var(ddof=1) <= 4 * 4
    with pytest.raises(ValueError):
        z_statistic(64, 0.5, 0.125, 4, 10, 8, 0)  # eta * n < 16
    with pytest.raises(ValueError):
        z_statistic(64, 0.5, 0.25, 99, 10, 8, 0)  # K too large


def test_worker_count_invariance():
    a = crossing_outcomes(0.52, 16, 1200, 91, workers=1)
    b = crossing_outcomes(0.52, 16, 1200, 91, workers=4)
    assert np.array_equal(a, b)
    sa = path_statistics(16, 0.5, 1200, 92, lams=(2, 4), workers=1)
    sb = path_statistics(16, 0.5, 1200, 92, lams=(2, 4), workers=4)
    assert np.array_equal(sa, sb)
