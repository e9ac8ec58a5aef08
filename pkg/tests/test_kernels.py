"""The jitted kernels and their pure-Python fallbacks must agree bit for bit."""

import numpy as np
import pytest

from bbdyn import _kernels

from conftest import philox


@pytest.fixture(scope="module")
def spd_matrix():
    rng = philox(7)
    G = rng.standard_normal((12, 12))
    return G + G.T + 30.0 * np.eye(12)


def test_jacobi_paths_identical(spd_matrix):
    w1, V1, s1, off1 = _kernels.jacobi_eigh(spd_matrix, 1e-14, 100)
    w2, V2, s2, off2 = _kernels.PY_IMPLS["jacobi_eigh"](spd_matrix, 1e-14, 100)
    assert np.array_equal(w1, w2)
    assert np.array_equal(V1, V2)
    assert s1 == s2 and off1 == off2


def test_descent_paths_identical():
    rng = philox(11)
    lam = np.geomspace(1.0, 50.0, 6)
    A = np.diag(lam)
    x0 = rng.uniform(0.0, 1.0, 6)
    c = np.zeros(6)
    out1 = _kernels.descent_iterate(A, x0, c, 80, 0.0, 1e12, True)
    out2 = _kernels.PY_IMPLS["descent_iterate"](A, x0, c, 80, 0.0, 1e12, True)
    for a, b in zip(out1, out2):
        assert np.array_equal(np.asarray(a), np.asarray(b))


def test_coeff_simulate_paths_identical():
    rng = philox(13)
    lam = np.geomspace(1.0, 100.0, 5)
    d0 = rng.uniform(0.0, 1.0, 5)
    D1 = _kernels.coeff_simulate(lam, d0, 120)
    D2 = _kernels.PY_IMPLS["coeff_simulate"](lam, d0, 120)
    assert np.array_equal(D1, D2)


def test_mode_sums_paths_identical():
    rng = philox(17)
    lam = np.geomspace(1.0, 100.0, 5)
    D = rng.standard_normal((40, 5))
    assert np.array_equal(_kernels.mode_sums(lam, D), _kernels.PY_IMPLS["mode_sums"](lam, D))


def test_jacobi_diagonal_input_is_untouched():
    # A diagonal matrix needs no rotations: V must be exactly the identity.
    lam = np.array([0.001, 0.01, 0.1, 1.0])
    w, V, sweeps, off = _kernels.jacobi_eigh(np.diag(lam), 1e-14, 100)
    assert np.array_equal(w, lam)
    assert np.array_equal(V, np.eye(4))
    assert sweeps == 0


def test_env_flag_selects_fallback_path():
    import subprocess
    import sys

    probe = "from bbdyn import _kernels; print(_kernels.NUMBA_ENABLED)"
    out = subprocess.run([sys.executable, "-c", probe], capture_output=True, text=True,
                         env={**__import__("os").environ, "BBDYN_NO_NUMBA": "1"})
    assert out.stdout.strip() == "False"
