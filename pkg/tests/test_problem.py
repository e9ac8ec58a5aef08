"""Problem representations: decomposition, synthesis, gradients, coefficients."""

import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bbdyn import problem
from bbdyn.errors import (
    BadSpectrum,
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    ProblemFormatError,
)

from conftest import philox, random_spectrum


def rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]])


def canonicalized(V):
    return problem._canonicalize_signs(np.asarray(V, dtype=float))


class TestDecompose:
    def test_identity(self):
        sp = problem.decompose(problem.DenseQuadratic(np.eye(3), np.zeros(3)))
        assert np.array_equal(sp.eigenvalues, np.ones(3))
        assert np.array_equal(sp.basis, np.eye(3))

    def test_four_dim_diagonal_spectrum(self):
        lam = np.array([0.001, 0.01, 0.1, 1.0])
        sp = problem.decompose(problem.DenseQuadratic(np.diag(lam), np.zeros(4)))
        assert np.array_equal(sp.eigenvalues, lam)
        assert np.array_equal(sp.basis, np.eye(4))
        assert sp.kappa == 1000.0

    def test_rotated_two_by_two(self):
        # Oracle: the problem is constructed as R diag(1,3) R', so the
        # decomposition must recover exactly that factorization.
        R = rotation(np.pi / 6)
        A = R @ np.diag([1.0, 3.0]) @ R.T
        sp = problem.decompose(problem.DenseQuadratic(A, np.zeros(2)))
        assert np.allclose(sp.eigenvalues, [1.0, 3.0], rtol=0, atol=1e-12)
        assert np.allclose(sp.basis, canonicalized(R), rtol=0, atol=1e-12)

    def test_matches_library_eigensolver(self):
        # Independent oracle for the Jacobi route.
        rng = philox(23)
        G = rng.standard_normal((9, 9))
        A = G + G.T + 25.0 * np.eye(9)
        sp = problem.decompose(problem.DenseQuadratic(A, np.zeros(9)))
        w = np.linalg.eigvalsh(A)
        assert np.allclose(sp.eigenvalues, w, rtol=1e-12, atol=1e-12 * w[-1])
        resid = np.max(np.abs(sp.basis.T @ A @ sp.basis - np.diag(sp.eigenvalues)))
        assert resid <= 1e-9 * sp.eigenvalues[-1]

    def test_tied_eigenvalues_permitted(self):
        # Ties leave the eigenvector pair non-unique; any orthogonal choice
        # that diagonalizes A within tolerance is acceptable.
        rng = philox(31)
        Q, _ = np.linalg.qr(rng.standard_normal((3, 3)))
        A = (Q * [2.0, 2.0, 5.0]) @ Q.T
        sp = problem.decompose(problem.DenseQuadratic(A, np.zeros(3)))
        assert np.allclose(sp.eigenvalues, [2.0, 2.0, 5.0], rtol=1e-10)
        resid = np.max(np.abs(sp.basis.T @ A @ sp.basis - np.diag(sp.eigenvalues)))
        assert resid <= 1e-9 * 5.0

    def test_rejects_asymmetric(self):
        A = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(NotSymmetric):
            problem.DenseQuadratic(A, np.zeros(2))

    def test_rejects_indefinite(self):
        with pytest.raises(NotPositiveDefinite):
            problem.decompose(problem.DenseQuadratic(np.diag([1.0, -1.0]), np.zeros(2)))


class TestSynthesize:
    def test_one_dimensional(self):
        sp = problem.synthesize([1.0], seed=3)
        assert sp.basis[0, 0] in (-1.0, 1.0)
        assert np.array_equal(sp.matrix, [[1.0]])

    def test_round_trip_spectrum(self):
        lam = np.array([0.001, 0.01, 0.1, 1.0])
        sp = problem.synthesize(lam, seed=42)
        back = problem.decompose(problem.DenseQuadratic(sp.matrix, sp.c))
        assert np.allclose(back.eigenvalues, lam, rtol=1e-9)

    def test_condition_number(self):
        assert problem.synthesize([1.0, 3.0], seed=7).kappa == 3.0

    def test_deterministic_per_seed(self):
        a = problem.synthesize([1.0, 2.0, 4.0], seed=9)
        b = problem.synthesize([1.0, 2.0, 4.0], seed=9)
        assert np.array_equal(a.basis, b.basis)

    def test_orthogonality(self):
        sp = problem.synthesize(np.geomspace(1.0, 1e4, 16), seed=5)
        err = np.max(np.abs(sp.basis.T @ sp.basis - np.eye(16)))
        assert err <= 1e-10

    @pytest.mark.parametrize("lam", [[], [0.0, 1.0], [2.0, 1.0], [-1.0]])
    def test_rejects_bad_spectra(self, lam):
        with pytest.raises(BadSpectrum):
            problem.synthesize(lam, seed=0)


@given(st.integers(0, 10_000), st.integers(2, 32), st.floats(1.0, 6.0))
def test_round_trip_random(seed, n, log10_kappa):
    rng = philox(seed)
    lam = random_spectrum(rng, n, 10.0 ** log10_kappa)
    sp = problem.synthesize(lam, seed)
    back = problem.decompose(problem.DenseQuadratic(sp.matrix, sp.c))
    # 1e-9 relative per eigenvalue, floored at problem scale (lam_n): the
    # dense reconstruction itself perturbs the spectrum by ~eps*lam_n.
    assert np.allclose(back.eigenvalues, lam, rtol=1e-9, atol=1e-9 * lam[-1])


class TestGradient:
    def test_identity(self):
        sp = problem.diagonal_problem([1.0, 1.0])
        assert np.array_equal(problem.gradient(sp, [2.0, -1.0]), [2.0, -1.0])

    def test_diagonal_action(self):
        sp = problem.diagonal_problem([1.0, 3.0])
        assert np.array_equal(problem.gradient(sp, [1.0, 1.0]), [1.0, 3.0])

    def test_translation_term(self):
        sp = problem.diagonal_problem([1.0, 3.0], c=[1.0, 0.0])
        assert np.array_equal(problem.gradient(sp, [1.0, 1.0]), [0.0, 3.0])

    def test_dimension_mismatch(self):
        sp = problem.diagonal_problem([1.0, 3.0])
        with pytest.raises(DimensionMismatch):
            problem.gradient(sp, [1.0, 2.0, 3.0])


class TestCoefficients:
    def test_identity_basis(self):
        sp = problem.diagonal_problem([1.0, 2.0])
        assert np.array_equal(problem.to_coefficients(sp, [0.3, 0.7]), [0.3, 0.7])

    def test_extreme_mode_combination(self):
        sp = problem.synthesize([1.0, 2.0, 4.0, 8.0], seed=11)
        g = sp.basis[:, 0] + sp.basis[:, -1]
        d = problem.to_coefficients(sp, g)
        assert np.allclose(d, [1.0, 0.0, 0.0, 1.0], rtol=0, atol=1e-14)

    def test_round_trip(self):
        sp = problem.synthesize([1.0, 5.0, 9.0], seed=2)
        g = np.array([0.2, -1.4, 3.3])
        back = problem.from_coefficients(sp, problem.to_coefficients(sp, g))
        assert np.allclose(back, g, rtol=1e-12)

    @given(st.integers(0, 10_000), st.integers(1, 12))
    def test_isometry(self, seed, n):
        rng = philox(seed)
        sp = problem.synthesize(np.sort(rng.uniform(0.5, 10.0, n)), seed)
        g = rng.standard_normal(n)
        d = problem.to_coefficients(sp, g)
        assert np.isclose(np.linalg.norm(d), np.linalg.norm(g), rtol=1e-12)


class TestProblemFiles:
    def test_matrix_schema(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"matrix": [[2.0, 0.0], [0.0, 5.0]], "c": [1.0, 1.0]}))
        sp = problem.load_problem(path)
        assert np.array_equal(sp.eigenvalues, [2.0, 5.0])
        assert np.array_equal(sp.c, [1.0, 1.0])

    def test_spectral_schema(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"eigenvalues": [1.0, 4.0], "seed": 3}))
        sp = problem.load_problem(path)
        assert sp.kappa == 4.0
        expected = problem.synthesize([1.0, 4.0], 3)
        assert np.array_equal(sp.basis, expected.basis)

    def test_rejects_descending_eigenvalues(self, tmp_path):
        path = tmp_path / "p.json"
        path.write_text(json.dumps({"eigenvalues": [4.0, 1.0], "seed": 0}))
        with pytest.raises(BadSpectrum):
            problem.load_problem(path)

    @pytest.mark.parametrize("payload", ["[]", "{}", '{"seed": 1}', "not json"])
    def test_rejects_malformed(self, tmp_path, payload):
        path = tmp_path / "p.json"
        path.write_text(payload)
        with pytest.raises(ProblemFormatError):
            problem.load_problem(path)


def test_problem_is_immutable():
    sp = problem.diagonal_problem([1.0, 2.0])
    with pytest.raises(ValueError):
        sp.eigenvalues[0] = 5.0
    with pytest.raises(ValueError):
        sp.matrix[0, 0] = 5.0
