"""Backend equivalence: compiled and pure-Python kernels must agree bit-wise."""

import numpy as np
import pytest

from toruslin._kernels import get_backend

try:
    get_backend("c")
    HAVE_C = True
except ImportError:
    HAVE_C = False

pytestmark = pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")


def random_table(rng, nterms, n, d, hband, vmax):
    exps = np.column_stack([
        rng.integers(-hband, hband + 1, size=(nterms, n)),
        rng.integers(0, vmax + 1, size=(nterms, d)),
    ]).astype(np.int64)
    exps = np.unique(exps, axis=0)
    vals = rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))
    return exps, vals


@pytest.mark.parametrize("seed", range(5))
def test_cauchy_product_identical(seed):
    rng = np.random.default_rng(seed)
    n, d = (1, 1) if seed % 2 else (2, 1)
    ea, va = random_table(rng, 40, n, d, 6, 5)
    eb, vb = random_table(rng, 35, n, d, 6, 5)
    py = get_backend("py")
    cc = get_backend("c")
    ep, vp, dp = py.cauchy_product(ea, va, eb, vb, n, d, 5, 6, 1e-300)
    ec, vc, dc = cc.cauchy_product(ea, va, eb, vb, n, d, 5, 6, 1e-300)
    # identical exponent sets in identical (sorted) order; accumulated
    # values may differ in the last ulp from summation order
    assert np.array_equal(ep, ec)
    assert np.allclose(vp, vc, rtol=1e-12, atol=1e-15)
    assert dp == pytest.approx(dc, rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("seed", range(3))
def test_evaluate_close(seed):
    rng = np.random.default_rng(100 + seed)
    n, d = 1, 2
    exps, vals = random_table(rng, 30, n, d, 4, 5)
    logh = rng.uniform(-0.3, 0.3, (16, n)) + 1j * rng.uniform(0, 6.28, (16, n))
    v = 0.4 * np.exp(1j * rng.uniform(0, 6.28, (16, d)))
    py = get_backend("py").evaluate(exps, vals, logh, v)
    cc = get_backend("c").evaluate(exps, vals, logh, v)
    assert np.allclose(py, cc, rtol=1e-13, atol=1e-13)
