"""Shared instance builders: the elliptic-golden torus and its families."""

import numpy as np

from toruslin import LatticeSpec, TruncatedSeries
from toruslin.deckmaps import DeckMap, conjugate_by_vertical
from toruslin.divisors import MultiplierData
from toruslin.linearize import DeckMapFamily, build_family

GOLDEN = (np.sqrt(5) - 1) / 2
E2 = 0.3 + 1.1j


def golden_lattice():
    return LatticeSpec(1, 1, [[1.0], [E2]])


def golden_data(mu_angle=GOLDEN):
    lat = golden_lattice()
    return lat, MultiplierData(lat.lam_matrix(),
                               [[np.exp(2j * np.pi * mu_angle)]])


def perturbation_records(rng, nterms=8, bound=1e-3, pmax=1, qrange=(2, 3)):
    recs = []
    for _ in range(nterms):
        k = int(rng.integers(0, 2))  # h component (0) or v component (1)
        P = (int(rng.integers(-pmax, pmax + 1)),)
        Q = (int(rng.integers(qrange[0], qrange[1] + 1)),)
        c = bound * complex(rng.uniform(0.1, 1.0), rng.uniform(-1.0, 1.0))
        c *= 1.0 / max(1.0, abs(c) / bound)
        recs.append((0, k, P, Q, c))
    return recs


def golden_family(rng=None, vmax=6, hband=6, **kw):
    lat, data = golden_data()
    recs = [] if rng is None else perturbation_records(rng, **kw)
    return build_family(lat, data, recs, vmax, hband, eps0=0.3, r0=0.6)


def conjugated_family(psi, vmax=6, hband=6):
    """Family Psi o diag o Psi^{-1}; its unique linearization is psi itself."""
    lat, data = golden_data()
    work = hband + 4 * vmax
    psi = psi.with_window(hband=work)
    zero_h = TruncatedSeries.zero(1, 1, 1, vmax, work)
    zero_v = TruncatedSeries.zero(1, 1, 1, vmax, work)
    maps, invs = [], []
    for i in range(1):
        diag = DeckMap(lam=data.lam[i], mu=data.mu[i],
                       pert_h=zero_h, pert_v=zero_v)
        diag_inv = DeckMap(lam=1 / data.lam[i], mu=1 / data.mu[i],
                           pert_h=zero_h, pert_v=zero_v)
        maps.append(conjugate_by_vertical(diag, psi))
        invs.append(conjugate_by_vertical(diag_inv, psi))
    return DeckMapFamily(lattice=lat, data=data, maps=maps, inv_maps=invs,
                         eps0=0.3, r0=0.6, hband=hband), psi
