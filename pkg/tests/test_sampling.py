import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from nearcrit import build_domain, coloring_at, flip_schedule, sample_field
from nearcrit.sampling import Coloring, dense_coloring


def test_field_determinism(domain):
    dom = domain(16)
    a = sample_field(dom, 123456789, 42)
    b = sample_field(dom, 123456789, 42)
    assert np.array_equal(a.u, b.u)


def test_streams_differ(domain):
    dom = domain(16)
    a = sample_field(dom, 7, 0)
    b = sample_field(dom, 7, 1)
    assert np.mean(a.u != b.u) > 0.99


def test_uniform_mean(domain):
    dom = domain(64)
    fld = sample_field(dom, 11, 0)
    assert 0.45 <= fld.u.mean() <= 0.55


def test_uniform_ks(domain):
    # marginal sanity at desk scale; seeded, so the outcome is frozen
    dom = domain(64)
    u = np.concatenate([sample_field(dom, 5, s).u for s in range(4)])
    assert sps.kstest(u, "uniform").pvalue > 1e-3


@pytest.mark.parametrize("p", [-0.1, 1.5, np.nan])
def test_bad_p_rejected(domain, p):
    fld = sample_field(domain(4), 0, 0)
    with pytest.raises(ValueError):
        coloring_at(fld, p)


def test_extreme_colorings(domain):
    fld = sample_field(domain(8), 3, 0)
    assert not coloring_at(fld, 0.0).black_array().any()
    assert coloring_at(fld, 1.0).black_array().all()


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.integers(0, 2 ** 32))
@settings(max_examples=30)
def test_monotone_coupling(p1, p2, seed):
    dom = build_domain(8)
    fld = sample_field(dom, seed, 0)
    lo, hi = sorted((p1, p2))
    a = coloring_at(fld, lo).black_array()
    b = coloring_at(fld, hi).black_array()
    assert np.all(b[a])


def test_lazy_dense_agree(domain):
    dom = domain(12)
    fld = sample_field(dom, 9, 4)
    lazy = coloring_at(fld, 0.37, lazy=True)
    dense = coloring_at(fld, 0.37)
    rng = np.random.default_rng(0)
    for s in rng.integers(0, dom.n_sites, size=60):
        assert lazy.is_black(int(s)) == dense.is_black(int(s))
    assert set(lazy.revealed) <= set(range(dom.n_sites))
    assert all(lazy.revealed[s] == dense.is_black(s) for s in lazy.revealed)


def test_coloring_constructor_validation(domain):
    dom = domain(4)
    with pytest.raises(ValueError):
        Coloring(dom, 0.5)
    with pytest.raises(ValueError):
        dense_coloring(dom, np.ones(3, dtype=bool))


def test_flip_schedule_bounds(domain):
    fld = sample_field(domain(16), 2, 0)
    assert len(flip_schedule(fld, 0.3, 0.3)) == 0
    full = flip_schedule(fld, 0.0, 1.0)
    assert len(full) == fld.domain.n_sites
    assert np.all(np.diff(full.thresholds) > 0)
    with pytest.raises(ValueError):
        flip_schedule(fld, 0.7, 0.3)


def test_flip_schedule_reconstructs_coloring(domain):
    dom = domain(16)
    fld = sample_field(dom, 8, 1)
    black = coloring_at(fld, 0.4).black_array().copy()
    for _, site in flip_schedule(fld, 0.4, 0.9):
        black[site] = True
    assert np.array_equal(black, coloring_at(fld, 0.9).black_array())


def test_flip_count_binomial(domain):
    dom = domain(64)
    n = dom.n_sites
    count = len(flip_schedule(sample_field(dom, 31, 0), 0.5, 0.6))
    sigma = np.sqrt(n * 0.1 * 0.9)
    assert abs(count - 0.1 * n) <= 4 * sigma
