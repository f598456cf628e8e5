"""Pure-Python (numpy) implementations of the hot kernels.

Used when the compiled extension is unavailable or when the environment
variable ``TORUSLIN_KERNELS=py`` forces the fallback.  Semantics are
identical to ``ckernels``: coefficient tables are (exps, vals) pairs with
``exps`` an int64 array of shape (N, n+d) holding the h-exponents first and
the v-exponents last, and ``vals`` a complex128 array of shape (N,).
Outputs are sorted by packed exponent key, so both backends emit the same
coefficients in the same order (values can differ in the last ulp from
accumulation order).
"""

import numpy as np

BACKEND = "py"

_CHUNK = 2048


def _pack(exps, lo, strides):
    return (exps - lo) @ strides


def _packing(exps_a, exps_b):
    """Common packing grid for all pairwise exponent sums."""
    lo = exps_a.min(axis=0) + exps_b.min(axis=0)
    hi = exps_a.max(axis=0) + exps_b.max(axis=0)
    sizes = hi - lo + 1
    if np.log2(sizes.astype(float)).sum() > 62:
        raise OverflowError("exponent grid too large to pack into int64")
    strides = np.ones(len(sizes), dtype=np.int64)
    for j in range(len(sizes) - 2, -1, -1):
        strides[j] = strides[j + 1] * sizes[j + 1]
    return lo, sizes, strides


def cauchy_product(exps_a, vals_a, exps_b, vals_b, n, d, vmax, hband, prune):
    """Convolution of two coefficient tables truncated to (vmax, hband).

    Returns (exps, vals, discarded) where ``discarded`` is the summed
    absolute value of coefficients dropped by the truncation.
    """
    if len(vals_a) == 0 or len(vals_b) == 0:
        return (
            np.zeros((0, n + d), dtype=np.int64),
            np.zeros(0, dtype=np.complex128),
            0.0,
        )
    lo, sizes, strides = _packing(exps_a, exps_b)
    keys_a = _pack(exps_a, 0, strides)
    keys_b = _pack(exps_b, 0, strides)
    base = lo @ strides

    chunks_k = []
    chunks_v = []
    for start in range(0, len(keys_a), _CHUNK):
        ka = keys_a[start : start + _CHUNK]
        va = vals_a[start : start + _CHUNK]
        chunks_k.append((ka[:, None] + keys_b[None, :]).ravel())
        chunks_v.append((va[:, None] * vals_b[None, :]).ravel())
    keys = np.concatenate(chunks_k) - base
    vals = np.concatenate(chunks_v)

    uniq, inv = np.unique(keys, return_inverse=True)
    acc = np.bincount(inv, weights=vals.real, minlength=len(uniq)) + 1j * np.bincount(
        inv, weights=vals.imag, minlength=len(uniq)
    )

    exps = np.empty((len(uniq), n + d), dtype=np.int64)
    rem = uniq.copy()
    for j in range(n + d):
        exps[:, j] = rem // strides[j]
        rem -= exps[:, j] * strides[j]
    exps += lo

    keep = np.abs(acc) > prune
    if n:
        keep &= np.abs(exps[:, :n]).max(axis=1) <= hband
    if d:
        keep &= exps[:, n:].sum(axis=1) <= vmax
    discarded = float(np.abs(acc[(np.abs(acc) > prune) & ~keep]).sum())
    return exps[keep], acc[keep], discarded


def evaluate(exps, vals, logh, v):
    """Evaluate sum_t vals[t] * exp(P_t . logh) * v^Q_t at many points.

    logh: (M, n) complex log of the h coordinates; v: (M, d) complex.
    """
    n = logh.shape[1]
    m_pts = logh.shape[0]
    out = np.zeros(m_pts, dtype=np.complex128)
    if len(vals) == 0:
        return out
    pexp = exps[:, :n].astype(np.float64)
    qexp = exps[:, n:]
    for start in range(0, m_pts, _CHUNK):
        lh = logh[start : start + _CHUNK]
        vv = v[start : start + _CHUNK]
        mono = np.exp(lh @ pexp.T)
        if qexp.shape[1]:
            mono = mono * np.prod(
                vv[:, None, :] ** qexp[None, :, :], axis=2
            )
        out[start : start + _CHUNK] = mono @ vals
    return out
