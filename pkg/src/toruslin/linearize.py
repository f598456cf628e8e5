"""Order-by-order vertical linearization of a deck-transformation family.

At each vertical degree m the family's degree-m vertical perturbations form
a compatible right-hand side; solving the cohomological system and
conjugating by (h, v + G_m) removes that degree without touching lower
ones.  The accumulated conjugation K = Phi_M o ... o Phi_2 sends the input
family to a vertically linear one, and Phi := K^{-1} = id + (0, phi_v)
satisfies the intertwining relation Phi o (linearized) = (original) o Phi,
whose per-degree residual is the primary acceptance quantity.
"""

from dataclasses import dataclass, field

import numpy as np

from .cohomology import CompatibleFamily, solve_family
from .deckmaps import (COMMUTE_TOL, DeckMap, DeckMapError, compose_maps,
                       compose_with_map, conjugate_by_vertical, invert_map,
                       map_difference)
from .divisors import MultiplierData, ResonanceError, scan_and_fit
from .lattice import DomainSpec
from .majorant import constants_bundle, domain_schedule
from .norms import sup_norm_bound, sup_norm_bound_union
from .series import (TruncatedSeries, invert_vertical_map, scale_components,
                     substitute_vertical)

LINEARIZE_TOL = 1e-8
WORK_BAND_SLACK = 4


class LinearizeError(RuntimeError):
    pass


@dataclass
class DeckMapFamily:
    """The deck maps, their inverses, and the base domain they live on."""

    lattice: object
    data: MultiplierData
    maps: list
    inv_maps: list
    eps0: float
    r0: float
    hband: int

    @property
    def n(self):
        return self.data.n

    @property
    def d(self):
        return self.data.d

    @property
    def vmax(self):
        return self.maps[0].pert_h.vmax

    def pert_scale(self):
        return max((m.pert_scale() for m in self.maps), default=0.0)

    def conjugated(self, G, H=None):
        if H is None:
            H = invert_vertical_map(G)
        new_maps = [conjugate_by_vertical(m, G, H) for m in self.maps]
        new_invs = [conjugate_by_vertical(m, G, H) for m in self.inv_maps]
        return DeckMapFamily(lattice=self.lattice, data=self.data,
                             maps=new_maps, inv_maps=new_invs,
                             eps0=self.eps0, r0=self.r0, hband=self.hband)


def build_family(lattice, data, pert_records, vmax, hband, eps0, r0,
                 work_slack=WORK_BAND_SLACK):
    """Assemble a family from multiplier data plus perturbation records.

    Records are (i, k, P, Q, value) with generator i and component k
    0-based, h components first.  Series are carried on a widened working
    band so conjugation arithmetic is exact far past the reporting band.
    """
    n, d = data.n, data.d
    work = hband + work_slack * vmax
    maps = []
    for i in range(n):
        ph = TruncatedSeries.zero(n, d, n, vmax, work)
        pv = TruncatedSeries.zero(n, d, d, vmax, work)
        for (gi, k, P, Q, value) in pert_records:
            if gi != i or not value:
                continue
            P, Q = tuple(P), tuple(Q)
            if max(map(abs, P), default=0) > hband or sum(Q) > vmax:
                raise LinearizeError("perturbation record outside (vmax, hband)"
                                     " window: P=%s Q=%s" % (P, Q))
            if k < n:
                ph.coeffs[(k, P, Q)] = ph.coeffs.get((k, P, Q), 0.0) + value
            else:
                pv.coeffs[(k - n, P, Q)] = pv.coeffs.get((k - n, P, Q), 0.0) \
                    + value
        maps.append(DeckMap(lam=data.lam[i], mu=data.mu[i],
                            pert_h=ph, pert_v=pv))
    inv_maps = [invert_map(m) for m in maps]
    return DeckMapFamily(lattice=lattice, data=data, maps=maps,
                         inv_maps=inv_maps, eps0=eps0, r0=r0, hband=hband)


def decompose_deck_family(raw_maps, lattice, eps0, r0,
                          work_slack=WORK_BAND_SLACK, tol=1e-12):
    """Split raw (n+d)-component map series into diagonal part + perturbations.

    The linear part must be exactly diagonal: component k carries
    lambda_k h_k at vertical order 0 (h rows) or mu_j v_j at vertical order
    1 (v rows); any other low-order coefficient is a model violation.
    """
    base = raw_maps[0]
    n = lattice.n
    d = base.d
    if base.components != n + d:
        raise DeckMapError("raw maps need n+d components")
    lam_rows, mu_rows, records = [], [], []
    for i, raw in enumerate(raw_maps):
        lam_i = np.zeros(n, dtype=np.complex128)
        mu_i = np.zeros(d, dtype=np.complex128)
        for (k, P, Q), c in sorted(raw.coeffs.items()):
            vdeg = sum(Q)
            if k < n:
                ek = tuple(1 if t == k else 0 for t in range(n))
                if vdeg == 0:
                    if P == ek and Q == (0,) * d:
                        lam_i[k] = c
                        continue
                    raise DeckMapError(
                        "generator %d: non-diagonal order-0 term %s in h "
                        "component %d" % (i + 1, (P, Q), k + 1))
                if vdeg == 1:
                    if abs(c) > tol:
                        raise DeckMapError(
                            "generator %d: order-1 vertical term in h "
                            "component %d violates the split model"
                            % (i + 1, k + 1))
                    continue
                records.append((i, k, P, Q, c))
            else:
                j = k - n
                ej = tuple(1 if t == j else 0 for t in range(d))
                if vdeg == 0:
                    if abs(c) > tol:
                        raise DeckMapError(
                            "generator %d: v component %d does not vanish on "
                            "the zero section" % (i + 1, j + 1))
                    continue
                if vdeg == 1:
                    if P == (0,) * n and Q == ej:
                        mu_i[j] = c
                        continue
                    if abs(c) > tol:
                        raise DeckMapError(
                            "generator %d: non-diagonal linear part in v "
                            "component %d" % (i + 1, j + 1))
                    continue
                records.append((i, k, P, Q, c))
        if np.any(lam_i == 0) or np.any(mu_i == 0):
            raise DeckMapError("generator %d: missing diagonal multiplier"
                               % (i + 1,))
        lam_rows.append(lam_i)
        mu_rows.append(mu_i)
    data = MultiplierData(np.array(lam_rows), np.array(mu_rows))
    return build_family(lattice, data, records, base.vmax, base.hband,
                        eps0, r0, work_slack=work_slack)


def check_commutation(family, order=None):
    """Pairwise commutators per vertical degree (relative residual table)."""
    order = family.vmax if order is None else order
    scale = max(family.pert_scale(), 1.0)
    table = {}
    for i in range(family.n):
        for j in range(i + 1, family.n):
            ij = compose_maps(family.maps[i], family.maps[j])
            ji = compose_maps(family.maps[j], family.maps[i])
            dh, dv = map_difference(ij, ji)
            per_degree = {}
            for m in range(order + 1):
                res = max(dh.homogeneous_part(m).max_abs(),
                          dv.homogeneous_part(m).max_abs())
                per_degree[m] = res / scale
            table[(i, j)] = per_degree
    return table


@dataclass
class LinearizationResult:
    order: int
    route: str
    phi_v: TruncatedSeries
    psi_v: TruncatedSeries
    per_degree: dict
    residuals: dict
    eps_m: np.ndarray
    r_m: np.ndarray
    linearized: DeckMapFamily
    original: DeckMapFamily
    constants: object
    fit: object
    step_records: list = field(default_factory=list)


def linearize_step(family, m, eps_prev, r_prev, eps_m, r_m, route="forward",
                   constants=None, tol=LINEARIZE_TOL):
    """Remove the degree-m vertical perturbation from the family.

    Returns (G_m, conjugated family, solver certificate).  The updated
    family agrees with the input below degree m and has vanishing vertical
    perturbation at every degree <= m.
    """
    inverse = route == "inverse"
    source = family.inv_maps if inverse else family.maps
    scale = max(family.pert_scale(), 1e-30)
    below = max(mp.pert_v.up_to_degree(m - 1).max_abs()
                for mp in family.maps)
    if below > tol * max(scale, 1.0):
        raise LinearizeError("family is not vertically linear below degree %d"
                             " (mass %.3e)" % (m, below))
    rhs = [mp.pert_v.homogeneous_part(m).scale(-1.0) for mp in source]
    kappa = family.lattice.decay_rate()
    delta = kappa * (eps_prev - eps_m)
    rho = float(np.log(r_prev / r_m))
    if all(F.is_zero() for F in rhs):
        G = rhs[0]._like(components=family.d)
        return G, family, None
    fam = CompatibleFamily(rhs=rhs)
    cert = solve_family(fam, family.data, family.lattice, eps_prev, r_prev,
                        delta, rho, inverse=inverse, constants=constants)
    G = cert.G
    updated = family.conjugated(G)
    for i, mp in enumerate(updated.maps):
        leftover = mp.pert_v.up_to_degree(m).max_abs()
        if leftover > tol * max(scale, 1.0):
            raise LinearizeError(
                "degree-%d cleanup failed for generator %d: leftover %.3e"
                % (m, i + 1, leftover))
    return G, updated, cert


def linearize(family, order, eps1, r1, route="forward", fit=None,
              constants=None, pmax=12, qmax=12, commute_tol=COMMUTE_TOL):
    """Vertically linearize the family up to the given order.

    Refuses to run on resonant multiplier data (the offending index is
    named).  Produces the correction phi_v, the per-degree norm ledger on
    the scheduled domains, and the intertwining residual table.
    """
    if order < 2:
        raise ValueError("order must be >= 2")
    if route not in ("forward", "inverse"):
        raise ValueError("route must be 'forward' or 'inverse'")
    if fit is None:
        _, fit = scan_and_fit(family.data, pmax, qmax)
    if fit.resonant:
        P, Q, j, l = fit.resonances[0]
        raise ResonanceError(P, Q, j, l)
    if family.n >= 2:
        table = check_commutation(family, order=order)
        worst = max((r for per in table.values() for r in per.values()),
                    default=0.0)
        if worst > commute_tol:
            raise LinearizeError("family does not commute: relative "
                                 "commutator %.3e" % worst)
    if constants is None:
        constants = constants_bundle(family.lattice, family.data, fit,
                                     family, eps1, r1)
    eps_m, r_m = domain_schedule(order, eps1, r1, constants)
    if eps_m[-1] <= eps1 / 2 or r_m[-1] <= r1 / np.e:
        raise LinearizeError("domain schedule exhausted")  # unreachable

    original = family
    psi = TruncatedSeries.zero(family.n, family.d, family.d,
                               family.vmax, family.maps[0].pert_h.hband)
    current = family
    step_records = []
    for m in range(2, order + 1):
        if m == 2 and route == "forward":
            # both routes must produce the same degree-2 correction; cheap
            # cross-check before committing to the forward pipeline
            G_fwd, _, _ = linearize_step(
                current, m, float(eps_m[1]), float(r_m[1]),
                float(eps_m[2]), float(r_m[2]), route="forward",
                constants=constants)
            G_inv, _, _ = linearize_step(
                current, m, float(eps_m[1]), float(r_m[1]),
                float(eps_m[2]), float(r_m[2]), route="inverse",
                constants=constants)
            gap = G_fwd.max_coeff_diff(G_inv)
            if gap > 1e-10 * max(1.0, G_fwd.max_abs()):
                raise LinearizeError(
                    "degree-2 forward/inverse corrections disagree by %.3e"
                    % gap)
        G, current, cert = linearize_step(
            current, m, float(eps_m[m - 1]), float(r_m[m - 1]),
            float(eps_m[m]), float(r_m[m]), route=route, constants=constants)
        psi = psi.add(substitute_vertical(G, psi)) if not psi.is_zero() \
            else psi.add(G)
        step_records.append({
            "m": m,
            "gain_bound": None if cert is None else cert.bound.value,
            "theoretical": None if cert is None else cert.theoretical,
            "compat_residual": 0.0 if cert is None else cert.compat_residual,
        })

    phi_v = invert_vertical_map(psi)
    per_degree = _degree_ledger(phi_v, family.lattice, eps_m, r_m, order,
                                family.n)
    residuals = conjugacy_residual(phi_v, original, current, order)
    return LinearizationResult(order=order, route=route, phi_v=phi_v,
                               psi_v=psi, per_degree=per_degree,
                               residuals=residuals, eps_m=eps_m, r_m=r_m,
                               linearized=current, original=original,
                               constants=constants, fit=fit,
                               step_records=step_records)


def _degree_ledger(phi_v, lattice, eps_m, r_m, order, n):
    """Triangle norms of each homogeneous part on the scheduled domains."""
    ledger = {}
    for m in range(2, order + 1):
        part = phi_v.homogeneous_part(m)
        eps, r = float(eps_m[m]), float(r_m[m])
        base = DomainSpec(lattice, eps, r)
        goal = sup_norm_bound_union(
            part, [DomainSpec(lattice, eps, r, union_ell=1),
                   DomainSpec(lattice, eps, r, union_ell=-1)])
        translated = {}
        singles = {}
        for i in range(n):
            for s in (1, -1):
                translated[(i, s)] = sup_norm_bound_union(
                    part, [DomainSpec(lattice, eps, r, word=((i, s),)),
                           DomainSpec(lattice, eps, r, word=((i, 2 * s),))])
            for k in (1, 2, -1, -2):
                singles[(i, k)] = sup_norm_bound(
                    part, DomainSpec(lattice, eps, r, word=((i, k),))).value
        ledger[m] = {
            "base_norm": sup_norm_bound(part, base).value,
            "goal_norm": goal,
            "translated": {k: v for k, v in translated.items()},
            "word_norms": singles,
            "eps": eps,
            "r": r,
        }
    return ledger


def conjugacy_residual(phi_v, original, linearized, order):
    """Both sides of the intertwining relation, subtracted, per generator.

    h rows: (linearized pert_h) - (original pert_h)(h, v + phi_v);
    v rows: (linearized pert_v) + phi_v o (linearized map)
            - M_i phi_v - (original pert_v)(h, v + phi_v).
    Returns per-degree max coefficient magnitudes and the residual series.
    """
    out = {}
    for i in range(len(original.maps)):
        tau = original.maps[i]
        tilde = linearized.maps[i]
        dh = tilde.pert_h - substitute_vertical(tau.pert_h, phi_v)
        dv = tilde.pert_v \
            .add(compose_with_map(phi_v, tilde, vmax=phi_v.vmax,
                                  hband=tilde.pert_v.hband)) \
            - scale_components(phi_v, tau.mu) \
            - substitute_vertical(tau.pert_v, phi_v)
        per_degree = {}
        for m in range(2, order + 1):
            per_degree[m] = max(dh.homogeneous_part(m).max_abs(),
                                dv.homogeneous_part(m).max_abs())
        out[i] = {"per_degree": per_degree, "series_h": dh, "series_v": dv}
    return out


def residual_table(result):
    """Per-degree residual maxima over the generators (CSV-ready rows)."""
    rows = []
    for m in range(2, result.order + 1):
        worst = max(rec["per_degree"][m] for rec in result.residuals.values())
        rows.append((m, worst))
    return rows
