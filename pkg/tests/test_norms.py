import numpy as np
import pytest

from toruslin import DomainSpec, LatticeSpec, sampled_lower_bound, sup_norm_bound
from toruslin.series import TruncatedSeries

from _oracles import random_series


def lat1():
    return LatticeSpec(1, 1, [[1.0], [0.3 + 1.1j]])


def lat2():
    return LatticeSpec(2, 1, [[1, 0], [0, 1],
                              [0.3 + 1.0j, 0.5 + 0.2j],
                              [0.7 + 0.1j, 0.2 + 1.0j]])


def test_pure_vertical_monomial():
    f = TruncatedSeries.monomial(1, 1, 0, (0,), (2,), 1.0, components=1)
    dom = DomainSpec(lat1(), 0.2, 0.5)
    bound = sup_norm_bound(f, dom)
    assert bound.value == pytest.approx(0.25)
    sampled = sampled_lower_bound(f, dom, points=64)
    assert sampled.value == pytest.approx(0.25, rel=1e-9)


def test_mixed_monomial_vertex_formula():
    f = TruncatedSeries.monomial(1, 1, 0, (1,), (2,), 1.0, components=1)
    dom = DomainSpec(lat1(), 0.1, 0.5)
    bound = sup_norm_bound(f, dom)
    assert bound.value == pytest.approx(np.exp(0.22 * np.pi) * 0.25)


def test_cauchy_coefficient_inequality():
    # every stored term's |c| sup|h^P| r^|Q| is below the triangle bound
    rng = np.random.default_rng(5)
    f = random_series(rng, 1, 1, vmax=6, hband=4, nterms=25)
    dom = DomainSpec(lat1(), 0.15, 0.7)
    total = sup_norm_bound(f, dom).value
    for _, P, Q, c in f.terms():
        piece = abs(c) * dom.sup_monomial(np.asarray(P, float)) * dom.r ** sum(Q)
        assert piece <= total * (1 + 1e-12)


@pytest.mark.parametrize("seed", range(4))
def test_soundness_random_domains(seed):
    rng = np.random.default_rng(100 + seed)
    lat = lat2() if seed % 2 else lat1()
    n = lat.n
    f = random_series(rng, n, 1, components=2, vmax=5, hband=3, nterms=20)
    domains = [
        DomainSpec(lat, 0.1, 0.4),
        DomainSpec(lat, 0.2, 0.6, word=((0, 1),)),
        DomainSpec(lat, 0.15, 0.5, word=((n - 1, -2),)),
        DomainSpec(lat, 0.1, 0.5, union_ell=1),
        DomainSpec(lat, 0.1, 0.5, hull=True),
    ]
    for dom in domains:
        upper = sup_norm_bound(f, dom).value
        lower = sampled_lower_bound(f, dom, points=512, seed=seed).value
        assert lower <= upper * (1 + 1e-12)


def test_unitary_translate_keeps_radius():
    # translate words do not change the r-power contribution
    f = TruncatedSeries.monomial(1, 1, 0, (0,), (3,), 2.0, components=1)
    base = DomainSpec(lat1(), 0.1, 0.5)
    moved = base.translated(0, 2)
    assert sup_norm_bound(f, base).value == pytest.approx(2.0 * 0.5 ** 3)
    assert sup_norm_bound(f, moved).value == pytest.approx(2.0 * 0.5 ** 3)
