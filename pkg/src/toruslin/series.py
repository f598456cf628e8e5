"""Sparse truncated Taylor-Laurent series in (h, v).

A series is a finite coefficient table
``f(h, v) = sum_{P in Z^n, Q in N^d} f[k, P, Q] h^P v^Q`` per output
component k, truncated to vertical order ``|Q|_1 <= vmax`` and horizontal
band ``|P|_inf <= hband``.  Operations that push mass outside the truncation
window drop it, set ``tailflag`` and accumulate the dropped absolute mass in
``discarded``.

Values are complex doubles.  Series are treated as immutable: every
operation returns a new instance.
"""

import numpy as np

from ._kernels import cauchy_product, evaluate as _kernel_evaluate

PRUNE_DEFAULT = 1e-300


class SeriesError(ValueError):
    pass


class TruncatedSeries:
    __slots__ = ("n", "d", "components", "vmax", "hband", "coeffs",
                 "tailflag", "discarded", "prune")

    def __init__(self, n, d, components=1, vmax=8, hband=8, coeffs=None,
                 tailflag=False, discarded=0.0, prune=PRUNE_DEFAULT):
        self.n = int(n)
        self.d = int(d)
        self.components = int(components)
        self.vmax = int(vmax)
        self.hband = int(hband)
        self.prune = float(prune)
        self.tailflag = bool(tailflag)
        self.discarded = float(discarded)
        self.coeffs = {}
        if coeffs:
            for (k, P, Q), c in coeffs.items():
                self._insert(k, tuple(P), tuple(Q), complex(c))

    # -- construction helpers -------------------------------------------------

    def _insert(self, k, P, Q, c):
        if not (0 <= k < self.components):
            raise SeriesError("component index %d out of range" % k)
        if len(P) != self.n or len(Q) != self.d:
            raise SeriesError("multi-index arity mismatch")
        if any(q < 0 for q in Q):
            raise SeriesError("vertical exponents must be nonnegative")
        if sum(Q) > self.vmax or (P and max(abs(p) for p in P) > self.hband):
            raise SeriesError("index outside truncation window")
        if abs(c) > self.prune:
            key = (k, P, Q)
            cur = self.coeffs.get(key)
            new = c if cur is None else cur + c
            if abs(new) > self.prune:
                self.coeffs[key] = new
            elif cur is not None:
                del self.coeffs[key]

    @classmethod
    def zero(cls, n, d, components=1, vmax=8, hband=8, prune=PRUNE_DEFAULT):
        return cls(n, d, components, vmax, hband, prune=prune)

    @classmethod
    def monomial(cls, n, d, k, P, Q, c=1.0, components=None, vmax=8, hband=8,
                 prune=PRUNE_DEFAULT):
        components = components if components is not None else k + 1
        s = cls(n, d, components, vmax, hband, prune=prune)
        s._insert(k, tuple(P), tuple(Q), complex(c))
        return s

    def _like(self, components=None, vmax=None, hband=None):
        return TruncatedSeries(
            self.n, self.d,
            self.components if components is None else components,
            self.vmax if vmax is None else vmax,
            self.hband if hband is None else hband,
            prune=self.prune)

    def copy(self):
        out = self._like()
        out.coeffs = dict(self.coeffs)
        out.tailflag = self.tailflag
        out.discarded = self.discarded
        return out

    # -- inspection -----------------------------------------------------------

    def terms(self):
        """Sorted (k, P, Q, value) records."""
        for key in sorted(self.coeffs):
            yield key[0], key[1], key[2], self.coeffs[key]

    def get(self, k, P, Q):
        return self.coeffs.get((k, tuple(P), tuple(Q)), 0.0 + 0.0j)

    def max_abs(self):
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def v_order(self):
        """Smallest |Q| carrying a coefficient (vmax+1 for the zero series)."""
        return min((sum(Q) for (_, _, Q) in self.coeffs), default=self.vmax + 1)

    def is_zero(self, tol=0.0):
        return all(abs(c) <= tol for c in self.coeffs.values())

    def component(self, k):
        out = self._like(components=1)
        for (kk, P, Q), c in self.coeffs.items():
            if kk == k:
                out.coeffs[(0, P, Q)] = c
        out.tailflag, out.discarded = self.tailflag, self.discarded
        return out

    @staticmethod
    def stack(parts):
        """Join scalar series into one multi-component series."""
        base = parts[0]
        out = base._like(components=len(parts),
                         vmax=min(p.vmax for p in parts),
                         hband=min(p.hband for p in parts))
        for k, p in enumerate(parts):
            if (p.n, p.d) != (base.n, base.d):
                raise SeriesError("stack: dimension mismatch")
            if p.components != 1:
                raise SeriesError("stack expects scalar parts")
            for (_, P, Q), c in p.coeffs.items():
                if sum(Q) > out.vmax or (P and max(map(abs, P)) > out.hband):
                    out.tailflag = True
                    out.discarded += abs(c)
                else:
                    out.coeffs[(k, P, Q)] = c
            out.tailflag |= p.tailflag
            out.discarded += p.discarded
        return out

    def __repr__(self):
        return ("TruncatedSeries(n=%d, d=%d, components=%d, vmax=%d, "
                "hband=%d, terms=%d%s)" % (
                    self.n, self.d, self.components, self.vmax, self.hband,
                    len(self.coeffs), ", tail" if self.tailflag else ""))

    # -- ring operations ------------------------------------------------------

    def _check_compat(self, other):
        if (self.n, self.d) != (other.n, other.d):
            raise SeriesError("series dimension mismatch: (%d,%d) vs (%d,%d)"
                              % (self.n, self.d, other.n, other.d))

    def add(self, other):
        self._check_compat(other)
        if self.components != other.components:
            raise SeriesError("component count mismatch in add")
        out = self._like(vmax=min(self.vmax, other.vmax),
                         hband=min(self.hband, other.hband))
        out.tailflag = self.tailflag or other.tailflag
        out.discarded = self.discarded + other.discarded
        for src in (self, other):
            for (k, P, Q), c in src.coeffs.items():
                if sum(Q) > out.vmax or (P and max(map(abs, P)) > out.hband):
                    out.tailflag = True
                    out.discarded += abs(c)
                    continue
                key = (k, P, Q)
                cur = out.coeffs.get(key, 0.0)
                new = cur + c
                if abs(new) > out.prune:
                    out.coeffs[key] = new
                elif key in out.coeffs:
                    del out.coeffs[key]
        return out

    def scale(self, c):
        c = complex(c)
        out = self._like()
        if c != 0:
            out.coeffs = {key: val * c for key, val in self.coeffs.items()
                          if abs(val * c) > self.prune}
        out.tailflag = self.tailflag
        out.discarded = self.discarded * abs(c)
        return out

    def __add__(self, other):
        return self.add(other)

    def __sub__(self, other):
        return self.add(other.scale(-1.0))

    def __neg__(self):
        return self.scale(-1.0)

    def _arrays(self, k):
        items = sorted((P, Q) for (kk, P, Q) in self.coeffs if kk == k)
        exps = np.empty((len(items), self.n + self.d), dtype=np.int64)
        vals = np.empty(len(items), dtype=np.complex128)
        for i, (P, Q) in enumerate(items):
            exps[i, :self.n] = P
            exps[i, self.n:] = Q
            vals[i] = self.coeffs[(k, P, Q)]
        return exps, vals

    def mul(self, other):
        """Cauchy product on (P, Q); componentwise with scalar broadcast."""
        self._check_compat(other)
        ca, cb = self.components, other.components
        if ca != cb and 1 not in (ca, cb):
            raise SeriesError("component counts incompatible for product")
        comps = max(ca, cb)
        out = self._like(components=comps,
                         vmax=min(self.vmax, other.vmax),
                         hband=min(self.hband, other.hband))
        out.tailflag = self.tailflag or other.tailflag
        out.discarded = self.discarded + other.discarded
        for k in range(comps):
            ea, va = self._arrays(k if ca > 1 else 0)
            eb, vb = other._arrays(k if cb > 1 else 0)
            exps, vals, dropped = cauchy_product(
                ea, va, eb, vb, self.n, self.d, out.vmax, out.hband, out.prune)
            if dropped:
                out.tailflag = True
                out.discarded += dropped
            for i in range(len(vals)):
                P = tuple(int(x) for x in exps[i, :self.n])
                Q = tuple(int(x) for x in exps[i, self.n:])
                out.coeffs[(k, P, Q)] = complex(vals[i])
        return out

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return self.mul(other)
        return self.scale(other)

    __rmul__ = __mul__

    def pow(self, q):
        if q < 0:
            raise SeriesError("pow expects a nonnegative exponent")
        result = None
        base = self
        while q:
            if q & 1:
                result = base if result is None else result.mul(base)
            q >>= 1
            if q:
                base = base.mul(base)
        if result is None:
            one = self._like()
            one.coeffs[(0, (0,) * self.n, (0,) * self.d)] = 1.0 + 0.0j
            return one
        return result

    # -- structure maps -------------------------------------------------------

    def homogeneous_part(self, m):
        """Terms of vertical degree exactly m."""
        out = self._like()
        for (k, P, Q), c in self.coeffs.items():
            if sum(Q) == m:
                out.coeffs[(k, P, Q)] = c
        return out

    def up_to_degree(self, m):
        out = self._like()
        for (k, P, Q), c in self.coeffs.items():
            if sum(Q) <= m:
                out.coeffs[(k, P, Q)] = c
        return out

    def restrict(self, vmax=None, hband=None):
        """Re-truncate to a smaller window, flagging discarded mass."""
        vmax = self.vmax if vmax is None else vmax
        hband = self.hband if hband is None else hband
        out = self._like(vmax=vmax, hband=hband)
        out.tailflag = self.tailflag
        out.discarded = self.discarded
        for (k, P, Q), c in self.coeffs.items():
            if sum(Q) > vmax or (P and max(map(abs, P)) > hband):
                out.tailflag = True
                out.discarded += abs(c)
            else:
                out.coeffs[(k, P, Q)] = c
        return out

    def with_window(self, vmax=None, hband=None):
        """Widen the truncation window (no coefficients change)."""
        vmax = self.vmax if vmax is None else max(self.vmax, vmax)
        hband = self.hband if hband is None else max(self.hband, hband)
        out = self._like(vmax=vmax, hband=hband)
        out.coeffs = dict(self.coeffs)
        out.tailflag, out.discarded = self.tailflag, self.discarded
        return out

    def shift_h(self, P0):
        """Multiply by the monomial h^{P0} (exponent translation)."""
        out = self._like()
        for (k, P, Q), c in self.coeffs.items():
            Pn = tuple(p + p0 for p, p0 in zip(P, P0))
            if Pn and max(map(abs, Pn)) > self.hband:
                out.tailflag = True
                out.discarded += abs(c)
            else:
                out.coeffs[(k, Pn, Q)] = c
        out.tailflag |= self.tailflag
        out.discarded += self.discarded
        return out

    def max_coeff_diff(self, other):
        keys = set(self.coeffs) | set(other.coeffs)
        return max((abs(self.coeffs.get(key, 0.0) - other.coeffs.get(key, 0.0))
                    for key in keys), default=0.0)

    # -- evaluation -----------------------------------------------------------

    def evaluate(self, logh, v):
        """Evaluate at points; logh (M, n) complex, v (M, d) complex.

        Returns an (M, components) complex array.  h coordinates are passed
        logarithmically so Laurent powers stay stable far from |h| = 1.
        """
        logh = np.atleast_2d(np.asarray(logh, dtype=np.complex128))
        v = np.atleast_2d(np.asarray(v, dtype=np.complex128))
        out = np.empty((logh.shape[0], self.components), dtype=np.complex128)
        for k in range(self.components):
            exps, vals = self._arrays(k)
            out[:, k] = _kernel_evaluate(exps, vals, logh, v)
        return out

    # -- serialization (TLS format) -------------------------------------------

    def to_text(self):
        lines = ["TLS %d %d %d %d %d" % (self.n, self.d, self.components,
                                         self.vmax, self.hband)]
        for k, P, Q, c in self.terms():
            fields = [str(k)] + [str(p) for p in P] + [str(q) for q in Q]
            fields.append(repr(c.real))
            fields.append(repr(c.imag))
            lines.append(" ".join(fields))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text, prune=PRUNE_DEFAULT):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        head = lines[0].split()
        if head[0] != "TLS" or len(head) != 6:
            raise SeriesError("bad TLS header: %r" % lines[0])
        n, d, components, vmax, hband = map(int, head[1:])
        out = cls(n, d, components, vmax, hband, prune=prune)
        for ln in lines[1:]:
            parts = ln.split()
            if len(parts) != 1 + n + d + 2:
                raise SeriesError("bad TLS record: %r" % ln)
            k = int(parts[0])
            P = tuple(int(x) for x in parts[1:1 + n])
            Q = tuple(int(x) for x in parts[1 + n:1 + n + d])
            c = complex(float(parts[-2]), float(parts[-1]))
            out.coeffs[(k, P, Q)] = c
        return out


# -- free functions over series ----------------------------------------------


def scale_components(f, factors):
    """Multiply component k by factors[k] (diagonal matrix action on values)."""
    factors = np.asarray(factors, dtype=np.complex128).reshape(-1)
    if len(factors) != f.components:
        raise SeriesError("need one factor per component")
    out = f._like()
    for (k, P, Q), c in f.coeffs.items():
        val = c * factors[k]
        if abs(val) > out.prune:
            out.coeffs[(k, P, Q)] = val
    out.tailflag, out.discarded = f.tailflag, f.discarded
    return out


def compose_diagonal(f, lam, mu, sign=1):
    """Compose with the diagonal map (h, v) -> (lam h, mu v), or its inverse.

    Coefficient at (P, Q) picks up the factor (lam^P mu^Q)^sign; exact
    coefficient-wise scaling, no truncation loss.
    """
    if sign not in (1, -1):
        raise SeriesError("sign must be +1 or -1")
    lam = np.asarray(lam, dtype=np.complex128)
    mu = np.asarray(mu, dtype=np.complex128)
    if lam.shape != (f.n,) or mu.shape != (f.d,):
        raise SeriesError("multiplier arity mismatch")
    out = f._like()
    cache = {}
    for (k, P, Q), c in f.coeffs.items():
        factor = cache.get((P, Q))
        if factor is None:
            factor = 1.0 + 0.0j
            for lj, p in zip(lam, P):
                factor *= complex(lj) ** int(p)
            for mj, q in zip(mu, Q):
                factor *= complex(mj) ** int(q)
            if sign < 0:
                factor = 1.0 / factor
            cache[(P, Q)] = factor
        out.coeffs[(k, P, Q)] = c * factor
    out.tailflag, out.discarded = f.tailflag, f.discarded
    return out


def _vertical_shift_powers(phi, needed, vmax, hband):
    """Powers (v_j + phi_j)^q for q in needed[j] on the working window."""
    powers = {}
    for j, qs in needed.items():
        w = TruncatedSeries(phi.n, phi.d, 1, vmax, hband, prune=phi.prune)
        ej = tuple(1 if l == j else 0 for l in range(phi.d))
        w.coeffs[(0, (0,) * phi.n, ej)] = 1.0 + 0.0j
        w = w.add(phi.component(j).restrict(vmax=vmax).with_window(hband=hband))
        table = {0: w.pow(0), 1: w}
        for q in range(2, max(qs) + 1):
            table[q] = table[q - 1].mul(w)
        powers[j] = table
    return powers


def substitute_vertical(f, phi):
    """Substitute v <- v + phi(h, v) with ord_v phi >= 2.

    The substitution is filtered by vertical degree: the degree-m part of
    the result only involves parts of phi of degree < m.  Internally the
    horizontal band is widened so the result equals the exact substitution
    projected onto the output window; dropping |Q| > vmax mass early is safe
    because vertical degrees only grow under products.
    """
    if phi.components != f.d:
        raise SeriesError("phi must have d components")
    if phi.v_order() < 2:
        raise SeriesError("phi must vanish to order >= 2 in v")
    vmax, hband = min(f.vmax, phi.vmax), min(f.hband, phi.hband)
    work_hband = f.hband + phi.hband * max(1, vmax // 2)
    out = f._like(vmax=vmax, hband=hband)
    out.tailflag = f.tailflag or phi.tailflag
    out.discarded = f.discarded + phi.discarded

    needed = {}
    for (_, _, Q) in f.coeffs:
        for j, q in enumerate(Q):
            if q:
                needed.setdefault(j, set()).add(q)
    powers = _vertical_shift_powers(phi, needed, vmax, work_hband)

    prod_cache = {}
    for (k, P, Q), c in sorted(f.coeffs.items()):
        if Q in prod_cache:
            W = prod_cache[Q]
        else:
            W = None
            for j, q in enumerate(Q):
                if q:
                    Wj = powers[j][q]
                    W = Wj if W is None else W.mul(Wj)
            prod_cache[Q] = W
        if W is None:  # pure h-monomial term
            if P and max(map(abs, P)) > hband:
                out.tailflag = True
                out.discarded += abs(c)
                continue
            key = (k, P, (0,) * f.d)
            new = out.coeffs.get(key, 0.0) + c
            if abs(new) > out.prune:
                out.coeffs[key] = new
            elif key in out.coeffs:
                del out.coeffs[key]
            continue
        for (_, Pw, Qn), w in W.coeffs.items():
            Pn = tuple(p + pw for p, pw in zip(P, Pw))
            if Pn and max(map(abs, Pn)) > hband:
                out.tailflag = True
                out.discarded += abs(c * w)
                continue
            key = (k, Pn, Qn)
            new = out.coeffs.get(key, 0.0) + c * w
            if abs(new) > out.prune:
                out.coeffs[key] = new
            elif key in out.coeffs:
                del out.coeffs[key]
    return out


def partial_h(f, P0):
    """Derivative d^{P0}/dh^{P0}; falling-factorial weights, exponents shift.

    The horizontal band widens by max(P0) so no Laurent term is lost to the
    shift.
    """
    P0 = tuple(int(p) for p in P0)
    if len(P0) != f.n or any(p < 0 for p in P0):
        raise SeriesError("P0 must be a nonnegative n-multi-index")
    out = f._like(hband=f.hband + (max(P0) if P0 else 0))
    for (k, P, Q), c in f.coeffs.items():
        w = 1
        for j in range(f.n):
            for i in range(P0[j]):
                w *= P[j] - i
        if w == 0:
            continue
        Pn = tuple(p - p0 for p, p0 in zip(P, P0))
        val = c * w
        if abs(val) > out.prune:
            out.coeffs[(k, Pn, Q)] = val
    out.tailflag, out.discarded = f.tailflag, f.discarded
    return out


def invert_vertical_map(G, tol=0.0):
    """Series H with H + G(h, v + H) = 0, i.e. the inverse of (h, v + G).

    Fixed-point iteration; one vertical degree is settled per sweep.
    """
    if G.components != G.d:
        raise SeriesError("vertical map must have d components")
    if G.v_order() < 2:
        raise SeriesError("vertical map must vanish to order >= 2 in v")
    H = G._like(components=G.d)
    for _ in range(G.vmax + 1):
        nxt = substitute_vertical(G, H).scale(-1.0)
        if nxt.max_coeff_diff(H) <= tol:
            H = nxt
            break
        H = nxt
    return H
