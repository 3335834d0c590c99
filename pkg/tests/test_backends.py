"""The numba kernels against the pure-numpy reference implementation."""

import math
import os
import subprocess
import sys

import numpy as np
import pytest

from shiftlognmf import backend
from shiftlognmf import _kernels_numpy as knp

knb = pytest.importorskip("shiftlognmf._kernels_numba")


def csr_like(rng, n, m, K, density=0.3, c_lo=0.5, c_hi=2.0):
    """Random factors plus a CSR-ish layout with some empty rows."""
    L = rng.uniform(0.05, 1.0, size=(n, K))
    F = rng.uniform(0.05, 1.0, size=(m, K))
    indptr = [0]
    indices = []
    vals = []
    for i in range(n):
        cols = np.flatnonzero(rng.uniform(size=m) < density)
        indices.extend(cols)
        vals.extend(rng.integers(1, 6, size=cols.size))
        indptr.append(len(indices))
    c_row = rng.uniform(c_lo, c_hi, size=n)
    return (
        L,
        F,
        np.asarray(indptr, dtype=np.int64),
        np.asarray(indices, dtype=np.int64),
        np.asarray(vals, dtype=np.float64),
        c_row,
    )


def test_exact_loglik_rows_agree():
    rng = np.random.default_rng(80)
    for trial in range(10):
        L, F, indptr, indices, vals, c_row = csr_like(rng, 12, 9, 3)
        a = knp.exact_loglik_rows(L, F, indptr, indices, vals, c_row)
        b = knb.exact_loglik_rows(L, F, indptr, indices, vals, c_row)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_exact_loglik_rows_sentinels_agree():
    # A zero predictor under a positive count must go to -inf on both paths.
    L = np.zeros((2, 1))
    F = np.ones((3, 1))
    indptr = np.array([0, 1, 1], dtype=np.int64)
    indices = np.array([0], dtype=np.int64)
    vals = np.array([2.0])
    c_row = np.ones(2)
    a = knp.exact_loglik_rows(L, F, indptr, indices, vals, c_row)
    b = knb.exact_loglik_rows(L, F, indptr, indices, vals, c_row)
    assert a[0] == b[0] == -np.inf
    assert a[1] == b[1]


def test_approx_nz_rows_agree():
    rng = np.random.default_rng(81)
    eta1, eta2 = 0.94172306, 0.71243105
    for trial in range(10):
        L, F, indptr, indices, vals, c_row = csr_like(rng, 10, 14, 2)
        a = knp.approx_nz_rows(L, F, indptr, indices, vals, c_row, eta1, eta2)
        b = knb.approx_nz_rows(L, F, indptr, indices, vals, c_row, eta1, eta2)
        assert np.allclose(a, b, rtol=1e-10, atol=1e-12)


def test_solve_block_exact_agree():
    rng = np.random.default_rng(82)
    for trial in range(8):
        L, F, indptr, indices, vals, c_row = csr_like(rng, 15, 10, 3)
        B1 = rng.uniform(0.05, 0.5, size=L.shape)
        B2 = B1.copy()
        ones_m = np.ones(10)
        o1 = knp.solve_block_exact(B1, F, indptr, indices, vals, c_row, ones_m, 3, 30)
        o2 = knb.solve_block_exact(B2, F, indptr, indices, vals, c_row, ones_m, 3, 30)
        assert np.allclose(o1, o2, rtol=1e-10, atol=1e-12)
        assert np.allclose(B1, B2, rtol=1e-9, atol=1e-12)


def test_solve_block_approx_agree():
    rng = np.random.default_rng(83)
    eta1, eta2 = 0.94172306, 0.71243105
    for trial in range(8):
        L, F, indptr, indices, vals, c_row = csr_like(rng, 12, 11, 3)
        a_row = np.maximum(1.0, c_row)
        w1 = c_row / a_row
        w2 = c_row / (a_row * a_row)
        S = F.sum(axis=0)
        G = F.T @ F
        B1 = rng.uniform(0.05, 0.5, size=L.shape)
        B2 = B1.copy()
        ones_m = np.ones(11)
        o1 = knp.solve_block_approx(
            B1, F, indptr, indices, vals, c_row, ones_m, S, G, w1, w2, eta1, eta2, 3, 30
        )
        o2 = knb.solve_block_approx(
            B2, F, indptr, indices, vals, c_row, ones_m, S, G, w1, w2, eta1, eta2, 3, 30
        )
        assert np.allclose(o1, o2, rtol=1e-10, atol=1e-12)
        assert np.allclose(B1, B2, rtol=1e-9, atol=1e-12)


def test_empty_problem_block():
    # Zero nonzeros everywhere: both backends drive coefficients to the
    # boundary and report the all-zero objective.
    F = np.asarray(np.random.default_rng(84).uniform(0.2, 1.0, size=(6, 2)))
    indptr = np.zeros(5, dtype=np.int64)
    indices = np.zeros(0, dtype=np.int64)
    vals = np.zeros(0)
    c_row = np.full(4, 1.5)
    ones_m = np.ones(6)
    B1 = np.full((4, 2), 0.3)
    B2 = B1.copy()
    o1 = knp.solve_block_exact(B1, F, indptr, indices, vals, c_row, ones_m, 5, 30)
    o2 = knb.solve_block_exact(B2, F, indptr, indices, vals, c_row, ones_m, 5, 30)
    assert np.array_equal(B1, np.zeros((4, 2)))
    assert np.array_equal(B2, np.zeros((4, 2)))
    assert np.allclose(o1, -1.5 * 6)
    assert np.allclose(o1, o2)


def test_backend_module_state():
    assert backend.BACKEND_NAME in ("numba", "numpy")
    assert backend.kernels.exact_loglik_rows is not None
    with pytest.raises(ValueError):
        backend.set_num_threads(0)
    backend.set_num_threads(1)
    backend.set_num_threads(64)


def run_subprocess(env_value, code):
    env = dict(os.environ)
    env["SHIFTLOGNMF_BACKEND"] = env_value
    return subprocess.run(
        [sys.executable, "-c", code], capture_output=True, text=True, env=env
    )


def test_env_flag_selects_numpy():
    r = run_subprocess("numpy", "import shiftlognmf; print(shiftlognmf.backend.BACKEND_NAME)")
    assert r.returncode == 0 and r.stdout.strip() == "numpy"


def test_env_flag_selects_numba():
    r = run_subprocess("numba", "import shiftlognmf; print(shiftlognmf.backend.BACKEND_NAME)")
    assert r.returncode == 0 and r.stdout.strip() == "numba"


def test_env_flag_rejects_unknown_value():
    r = run_subprocess("vectorized", "import shiftlognmf")
    assert r.returncode != 0
    assert "SHIFTLOGNMF_BACKEND" in r.stderr


def test_backends_agree_through_public_fit():
    code = (
        "import numpy as np\n"
        "from shiftlognmf import fit, FitConfig, from_dense\n"
        "rng = np.random.default_rng(85)\n"
        "Y = from_dense(rng.poisson(1.0, size=(20, 15)))\n"
        "m, r = fit(Y, FitConfig(k=2, c=1.0, max_outer_iters=10, seed=3))\n"
        "print(repr(r.loglik_trace.tolist()))\n"
    )
    out = {}
    for name in ("numpy", "numba"):
        r = run_subprocess(name, code)
        assert r.returncode == 0, r.stderr
        out[name] = np.asarray(eval(r.stdout.strip()))
    assert np.allclose(out["numpy"], out["numba"], rtol=1e-9)
