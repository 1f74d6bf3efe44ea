import numpy as np
import pytest

from nearcrit import build_domain, dense_coloring, sample_field

_DOMAINS = {}


@pytest.fixture
def domain():
    def get(n):
        if n not in _DOMAINS:
            _DOMAINS[n] = build_domain(n)
        return _DOMAINS[n]
    return get


@pytest.fixture
def dom8(domain):
    return domain(8)


@pytest.fixture
def all_black(domain):
    def make(n):
        d = domain(n)
        return dense_coloring(d, np.ones(d.n_sites, dtype=bool))
    return make


@pytest.fixture
def all_white(domain):
    def make(n):
        d = domain(n)
        return dense_coloring(d, np.zeros(d.n_sites, dtype=bool))
    return make


@pytest.fixture
def field_at(domain):
    def make(n, seed=0, stream=0):
        return sample_field(domain(n), seed, stream)
    return make
