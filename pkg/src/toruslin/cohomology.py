"""Vertical cohomological equations solved by small-divisor division.

The operator attached to generator i acts on a d-component series G by
``T_i(G) = G o tauhat_i - M_i G`` (or with the inverse diagonal map and
M_i^{-1}), which on coefficients is multiplication by
``lambda_i^P mu_i^Q - mu_{i,j}`` in component j.  Solving the family system
T_i(G) = F_i therefore divides, coefficient by coefficient, by the divisor
of the generator realizing the largest modulus; compatibility of the right
hand sides makes the choice immaterial and the solution unique.
"""

from dataclasses import dataclass, field

import numpy as np

from .divisors import ResonanceError, divisor_values
from .lattice import DomainSpec
from .norms import NormBound, sup_norm_bound
from .series import TruncatedSeries, compose_diagonal, scale_components

COMPAT_TOL = 1e-10


class CompatibilityError(ValueError):
    pass


def apply_vertical_operator(G, data, i, sign=1):
    """T_{+-i}(G) = G o tauhat_i^{+-1} - M_i^{+-1} G."""
    lam_i, mu_i = data.lam[i], data.mu[i]
    composed = compose_diagonal(G, lam_i, mu_i, sign)
    mu_pow = mu_i if sign > 0 else 1.0 / mu_i
    return composed - scale_components(G, mu_pow)


def compose_power(G, data, i, k):
    """G composed with tauhat_i^k for integer |k| <= 2."""
    out = G
    for _ in range(abs(k)):
        out = compose_diagonal(out, data.lam[i], data.mu[i], 1 if k > 0 else -1)
    return out


@dataclass
class CompatibleFamily:
    """Right-hand sides F_1..F_n with their certified domain tags."""

    rhs: list
    domains: list = field(default_factory=list)

    def __post_init__(self):
        base = self.rhs[0]
        for F in self.rhs:
            if (F.n, F.d, F.components) != (base.n, base.d, base.components):
                raise CompatibilityError("family members must share dimensions")
            if F.components != F.d:
                raise CompatibilityError("family members must have d components")
            if F.v_order() < 2:
                raise CompatibilityError("family members must vanish to order"
                                         " >= 2 in v")

    @property
    def n(self):
        return len(self.rhs)

    def scale(self):
        return max((F.max_abs() for F in self.rhs), default=0.0)

    def keys(self):
        seen = set()
        for F in self.rhs:
            seen.update(F.coeffs)
        return sorted(seen)


@dataclass(frozen=True)
class CompatibilityReport:
    max_abs: float
    max_rel: float
    worst_key: tuple | None

    def ok(self, tol=COMPAT_TOL):
        return self.max_rel <= tol


def check_compatibility(family, data, m=None, inverse=False):
    """Residuals of the pairwise coefficient identities.

    For every generator pair (a, b) and key (k, Q, P), the cross products
    ``divisor_a * F_b - divisor_b * F_a`` must vanish; degree m restricts the
    check to |Q| = m.  ``max_rel`` normalizes each residual by the size of
    the crossed terms, which is the meaningful gate when Laurent multipliers
    make coefficient magnitudes span many decades.
    """
    worst_abs, worst_rel, worst_key = 0.0, 0.0, None
    sgn = -1 if inverse else 1
    for key in family.keys():
        k, P, Q = key
        if m is not None and sum(Q) != m:
            continue
        facs = []
        for a in range(family.n):
            lam_pow = data.lam_pow([sgn * p for p in P])[a]
            mu_pow = data.mu_pow([sgn * q for q in Q])[a]
            target = data.mu[a, k] if sgn > 0 else 1.0 / data.mu[a, k]
            facs.append(lam_pow * mu_pow - target)
        coeffs = [F.coeffs.get(key, 0.0) for F in family.rhs]
        for a in range(family.n):
            for b in range(a + 1, family.n):
                cross_ab = facs[a] * coeffs[b]
                cross_ba = facs[b] * coeffs[a]
                res = abs(cross_ab - cross_ba)
                ref = max(abs(cross_ab), abs(cross_ba))
                rel = res / ref if ref > 0 else 0.0
                worst_abs = max(worst_abs, res)
                if rel > worst_rel:
                    worst_rel, worst_key = rel, key
    return CompatibilityReport(max_abs=worst_abs, max_rel=worst_rel,
                               worst_key=worst_key)


@dataclass
class SolutionCertificate:
    G: TruncatedSeries
    domain: DomainSpec
    bound: NormBound
    composed_bounds: list
    theoretical: float | None
    delta: float
    rho: float
    inverse: bool
    compat_residual: float
    divisors_used: dict


def _theoretical_bound(family, data, lattice, eps, r, delta, rho, constants):
    dom = DomainSpec(lattice, eps, r)
    max_f = max(sup_norm_bound(F, dom).value for F in family.rhs)
    gamma = constants.tau_eff + constants.nu
    return max_f * (constants.C1 / delta ** gamma + constants.C1 / rho ** gamma)


def solve_family(family, data, lattice, eps, r, delta, rho, inverse=False,
                 constants=None, compat_tol=COMPAT_TOL):
    """Solve T_i(G) = F_i for all generators at once.

    Each coefficient divides by the divisor of the generator where the
    divisor modulus is largest (smallest index on ties); the result is
    certified on the shrunk domain (eps - delta/kappa, r e^{-rho}).
    """
    kappa = lattice.decay_rate()
    if not 0 < delta < kappa * eps:
        raise ValueError("need 0 < delta < kappa*eps = %r" % (kappa * eps,))
    if rho <= 0:
        raise ValueError("need rho > 0")
    report = check_compatibility(family, data, inverse=inverse)
    if not report.ok(compat_tol):
        raise CompatibilityError(
            "family incompatible: relative residual %.3e exceeds %.3e at %s"
            % (report.max_rel, compat_tol, (report.worst_key,)))

    form = "inverse" if inverse else "weak"
    base = family.rhs[0]
    G = base._like(components=base.d)
    used = {}
    for key in family.keys():
        k, P, Q = key
        rec = divisor_values(data, P, Q, k, form=form)
        if rec.maxval == 0.0:
            raise ResonanceError(P, Q, k)
        iv = rec.argmax
        sgn = -1 if inverse else 1
        lam_pow = data.lam_pow([sgn * p for p in P])[iv]
        mu_pow = data.mu_pow([sgn * q for q in Q])[iv]
        target = data.mu[iv, k] if not inverse else 1.0 / data.mu[iv, k]
        divisor = lam_pow * mu_pow - target
        c = family.rhs[iv].coeffs.get(key, 0.0)
        if c:
            G.coeffs[key] = c / divisor
        used[key] = (iv, divisor)

    new_eps = eps - delta / kappa
    new_r = r * float(np.exp(-rho))
    dom = DomainSpec(lattice, new_eps, new_r)
    bound = sup_norm_bound(G, dom)
    composed = []
    for i in range(data.n):
        for sign in (1, -1):
            Gi = compose_diagonal(G, data.lam[i], data.mu[i], sign)
            composed.append(((i, sign), sup_norm_bound(Gi, dom)))
    theoretical = None
    if constants is not None:
        theoretical = _theoretical_bound(family, data, lattice, eps, r,
                                         delta, rho, constants)
    return SolutionCertificate(G=G, domain=dom, bound=bound,
                               composed_bounds=composed,
                               theoretical=theoretical, delta=delta, rho=rho,
                               inverse=inverse,
                               compat_residual=report.max_rel,
                               divisors_used=used)


def solve_single(F_i, i, data, lattice, eps, r, delta, rho, sign=1,
                 constants=None, fit=None):
    """Solve the single-generator equation T_{+-i}(G) = F_i by division.

    Under a strong Diophantine fit with no resonances, the output glues
    with the family solution on shared coefficients (tested, not assumed).
    """
    if F_i.components != F_i.d:
        raise CompatibilityError("rhs must have d components")
    if F_i.v_order() < 2:
        raise CompatibilityError("rhs must vanish to order >= 2 in v")
    if fit is not None and (fit.form != "strong" or fit.resonant):
        raise ValueError("solve_single requires a non-resonant strong fit")
    kappa = lattice.decay_rate()
    if not 0 < delta < kappa * eps:
        raise ValueError("need 0 < delta < kappa*eps")

    G = F_i._like(components=F_i.d)
    used = {}
    for key, c in sorted(F_i.coeffs.items()):
        k, P, Q = key
        if sum(Q) < 2:
            raise CompatibilityError("rhs carries |Q| < 2 coefficients")
        sgn = 1 if sign > 0 else -1
        lam_pow = data.lam_pow([sgn * p for p in P])[i]
        mu_pow = data.mu_pow([sgn * q for q in Q])[i]
        target = data.mu[i, k] if sgn > 0 else 1.0 / data.mu[i, k]
        divisor = lam_pow * mu_pow - target
        if divisor == 0.0:
            raise ResonanceError(P, Q, k, i)
        G.coeffs[key] = c / divisor
        used[key] = (i, divisor)

    new_eps = eps - delta / kappa
    new_r = r * float(np.exp(-rho))
    dom = DomainSpec(lattice, new_eps, new_r)
    words = ((i, -2), (i, -1)) if sign > 0 else ((i, 2), (i, 1))
    composed = [(word, sup_norm_bound(compose_power(G, data, *word), dom))
                for word in words]
    theoretical = None
    if constants is not None:
        ref_dom = DomainSpec(lattice, eps, r,
                             word=((i, -2),) if sign > 0 else ((i, 2),))
        gamma = constants.tau_eff + constants.nu
        theoretical = sup_norm_bound(F_i, ref_dom).value * (
            constants.C1 / delta ** gamma + constants.C1 / rho ** gamma)
    return SolutionCertificate(G=G, domain=dom,
                               bound=sup_norm_bound(G, dom),
                               composed_bounds=composed,
                               theoretical=theoretical, delta=delta, rho=rho,
                               inverse=sign < 0, compat_residual=0.0,
                               divisors_used=used)


def norm_certificate(cert):
    """Compare empirical bounds against the constants-based theoretical one."""
    if cert.theoretical is None:
        raise ValueError("certificate carries no theoretical bound; "
                         "pass a constants bundle to the solver")
    rows = [("solution", cert.bound.value, cert.theoretical,
             cert.bound.value <= cert.theoretical)]
    for tag, nb in cert.composed_bounds:
        rows.append(("composed %s" % (tag,), nb.value, cert.theoretical,
                     nb.value <= cert.theoretical))
    return {"rows": rows, "pass": all(r[3] for r in rows)}
