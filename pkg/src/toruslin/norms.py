"""Certified sup-norm bounds for truncated series on Reinhardt domains.

The upper bound is the triangle inequality applied termwise: each monomial
contributes |coefficient| * sup|h^P| * r^|Q|, with the monomial sup taken
exactly at polytope vertices.  Since the vertical multipliers are unitary,
the same r-power is valid verbatim on every deck translate of the domain.
A quasi-random sampled maximum provides the matching lower bound used by
the soundness tests.
"""

from dataclasses import dataclass

import numpy as np

from .lattice import DomainSpec

TRIANGLE = "coefficient-triangle-bound"
SAMPLED = "sampled-lower-bound"


@dataclass(frozen=True)
class NormBound:
    domain: DomainSpec
    value: float
    kind: str


def sup_norm_bound(f, domain):
    """Triangle-inequality upper bound for sup |f| over the domain.

    Multi-component series are bounded in the max norm over components.
    """
    if domain.lattice.n != f.n:
        raise ValueError("series and domain live on different tori")
    worst = 0.0
    for k in range(f.components):
        exps, vals = f._arrays(k)
        if len(vals) == 0:
            continue
        sups = domain.sup_monomials(exps[:, :f.n].astype(float))
        rpow = float(domain.r) ** exps[:, f.n:].sum(axis=1)
        worst = max(worst, float((np.abs(vals) * sups * rpow).sum()))
    return NormBound(domain=domain, value=worst, kind=TRIANGLE)


def sup_norm_bound_union(f, domains):
    """Triangle bound for sup |f| over a union of domains (same r).

    The per-monomial sup over a union is the max of the per-domain sups, so
    this is tighter than the max of the per-domain triangle bounds.
    """
    r = domains[0].r
    if any(dom.r != r for dom in domains):
        raise ValueError("union bound expects a common polydisc radius")
    worst = 0.0
    for k in range(f.components):
        exps, vals = f._arrays(k)
        if len(vals) == 0:
            continue
        sups = np.max([dom.sup_monomials(exps[:, :f.n].astype(float))
                       for dom in domains], axis=0)
        rpow = float(r) ** exps[:, f.n:].sum(axis=1)
        worst = max(worst, float((np.abs(vals) * sups * rpow).sum()))
    return worst


def sampled_lower_bound(f, domain, points=2048, seed=20260811):
    """Max modulus over a seeded quasi-random sample of the closed domain."""
    rng = np.random.default_rng(seed)
    x = domain.sample_log_points(rng, points)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=x.shape)
    logh = x + 1j * theta
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(points, f.d))
    v = domain.r * np.exp(1j * phases)
    values = f.evaluate(logh, v)
    return NormBound(domain=domain,
                     value=float(np.abs(values).max(initial=0.0)),
                     kind=SAMPLED)
