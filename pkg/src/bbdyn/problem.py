"""Strictly convex quadratic problems in dense and spectral form.

The objective is f(x) = x'Ax/2 - c'x with A symmetric positive definite.
The spectral form carries A as (eigenvalues, orthogonal eigenbasis), which is
the representation the coefficient dynamics and all certified bounds live in.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels
from .errors import (
    BadSpectrum,
    ConvergenceFailure,
    DimensionMismatch,
    NotPositiveDefinite,
    NotSymmetric,
    ProblemFormatError,
)

# Tolerances are relative to problem scale (lam_n or ||A||_F) so they stay
# meaningful across magnitudes.
SYMMETRY_RTOL = 1e-12
ORTHOGONALITY_TOL = 1e-10
DIAGONALIZATION_RTOL = 1e-9
JACOBI_TOL_FACTOR = 1e-14
JACOBI_MAX_SWEEPS = 100


def _as_float_array(x, ndim, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != ndim:
        raise DimensionMismatch(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def _frozen(arr):
    out = np.array(arr, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class DenseQuadratic:
    """Matrix-form problem data: symmetric positive-definite A and linear term c."""

    A: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        A = _as_float_array(self.A, 2, "A")
        if A.shape[0] != A.shape[1]:
            raise DimensionMismatch(f"A must be square, got {A.shape}")
        c = _as_float_array(self.c, 1, "c")
        if c.shape[0] != A.shape[0]:
            raise DimensionMismatch(f"c has length {c.shape[0]}, expected {A.shape[0]}")
        scale = np.max(np.abs(A))
        asym = np.max(np.abs(A - A.T))
        if scale > 0 and asym > SYMMETRY_RTOL * scale:
            raise NotSymmetric(f"relative asymmetry {asym / scale:.3e} exceeds {SYMMETRY_RTOL:.0e}")
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "c", _frozen(c))

    @property
    def dim(self) -> int:
        return self.A.shape[0]


@dataclass(frozen=True)
class SpectralProblem:
    """Spectral-form problem: ascending positive eigenvalues and orthogonal basis.

    Immutable after construction; instances are safe to share across workers.
    """

    eigenvalues: np.ndarray
    basis: np.ndarray
    c: np.ndarray = field(default=None)

    def __post_init__(self):
        lam = _as_float_array(self.eigenvalues, 1, "eigenvalues")
        V = _as_float_array(self.basis, 2, "basis")
        n = lam.shape[0]
        if V.shape != (n, n):
            raise DimensionMismatch(f"basis shape {V.shape} does not match {n} eigenvalues")
        c = np.zeros(n) if self.c is None else _as_float_array(self.c, 1, "c")
        if c.shape[0] != n:
            raise DimensionMismatch(f"c has length {c.shape[0]}, expected {n}")
        if lam[0] <= 0.0:
            raise BadSpectrum(f"eigenvalues must be strictly positive, got min {lam[0]}")
        if np.any(np.diff(lam) < 0.0):
            raise BadSpectrum("eigenvalues must be sorted ascending")
        ortho_err = np.max(np.abs(V.T @ V - np.eye(n)))
        if ortho_err > ORTHOGONALITY_TOL:
            raise BadSpectrum(f"basis is not orthogonal: max |V'V - I| = {ortho_err:.3e}")
        object.__setattr__(self, "eigenvalues", _frozen(lam))
        object.__setattr__(self, "basis", _frozen(V))
        object.__setattr__(self, "c", _frozen(c))

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def kappa(self) -> float:
        """Condition number: ratio of extreme eigenvalues."""
        return self.eigenvalues[-1] / self.eigenvalues[0]

    @cached_property
    def matrix(self) -> np.ndarray:
        """Dense A reconstructed as V diag(lam) V'; cached, read-only."""
        V = self.basis
        return _frozen((V * self.eigenvalues) @ V.T)


def _canonicalize_signs(V):
    """Flip eigenvector signs so each column's first nonzero entry is positive."""
    V = V.copy()
    for j in range(V.shape[1]):
        col = V[:, j]
        nz = np.nonzero(np.abs(col) > 1e-12 * np.max(np.abs(col)))[0]
        if nz.size and col[nz[0]] < 0.0:
            V[:, j] = -col
    return V


def decompose(p: DenseQuadratic) -> SpectralProblem:
    """Eigendecompose a dense problem via cyclic Jacobi rotations.

    Eigenvalues come back ascending with sign-canonicalized eigenvectors.
    Raises NotPositiveDefinite if any eigenvalue is <= 0, ConvergenceFailure
    if the sweep budget is exhausted before the off-diagonal threshold.
    """
    A = p.A
    n = p.dim
    M = 0.5 * (A + A.T)
    w, V, sweeps, off = _kernels.jacobi_eigh(M, JACOBI_TOL_FACTOR, JACOBI_MAX_SWEEPS)
    threshold = JACOBI_TOL_FACTOR * np.linalg.norm(M, "fro")
    if off > threshold:
        raise ConvergenceFailure(
            f"Jacobi sweep budget ({JACOBI_MAX_SWEEPS}) exhausted: off-norm {off:.3e}"
        )
    order = np.argsort(w, kind="stable")
    w = w[order]
    V = _canonicalize_signs(V[:, order])
    if w[0] <= 0.0:
        raise NotPositiveDefinite(f"smallest eigenvalue {w[0]:.6e} is not positive")
    residual = np.max(np.abs(V.T @ A @ V - np.diag(w)))
    if residual > DIAGONALIZATION_RTOL * w[-1]:
        raise ConvergenceFailure(f"diagonalization residual {residual:.3e} too large")
    return SpectralProblem(w, V, p.c)


def synthesize(eigenvalues, seed: int, c=None) -> SpectralProblem:
    """Build a problem with the given spectrum and a seeded random orthogonal basis.

    The basis is Haar-distributed (QR of a Gaussian matrix with the R-diagonal
    sign fix) drawn from a counter-based Philox generator, so it is
    deterministic per seed.
    """
    lam = _as_float_array(eigenvalues, 1, "eigenvalues")
    if lam.size == 0:
        raise BadSpectrum("empty spectrum")
    if lam[0] <= 0.0 or np.any(np.diff(lam) < 0.0):
        raise BadSpectrum("eigenvalues must be ascending and strictly positive")
    rng = np.random.Generator(np.random.Philox(seed))
    G = rng.standard_normal((lam.size, lam.size))
    Q, R = np.linalg.qr(G)
    signs = np.sign(np.diag(R))
    signs[signs == 0.0] = 1.0
    Q = Q * signs
    return SpectralProblem(lam, Q, c)


def diagonal_problem(eigenvalues, c=None) -> SpectralProblem:
    """Problem with the identity eigenbasis (A = diag(eigenvalues))."""
    lam = _as_float_array(eigenvalues, 1, "eigenvalues")
    return SpectralProblem(lam, np.eye(lam.size), c)


def gradient(p: SpectralProblem, x) -> np.ndarray:
    """Gradient A x - c, with A reconstructed from the spectral form."""
    x = _as_float_array(x, 1, "x")
    if x.shape[0] != p.dim:
        raise DimensionMismatch(f"x has length {x.shape[0]}, expected {p.dim}")
    return p.matrix @ x - p.c


def to_coefficients(p: SpectralProblem, g) -> np.ndarray:
    """Coordinates of g in the eigenbasis: d = V'g."""
    g = _as_float_array(g, 1, "g")
    if g.shape[0] != p.dim:
        raise DimensionMismatch(f"g has length {g.shape[0]}, expected {p.dim}")
    return p.basis.T @ g


def from_coefficients(p: SpectralProblem, d) -> np.ndarray:
    """Inverse of to_coefficients: g = V d."""
    d = _as_float_array(d, 1, "d")
    if d.shape[0] != p.dim:
        raise DimensionMismatch(f"d has length {d.shape[0]}, expected {p.dim}")
    return p.basis @ d


def objective(p: SpectralProblem, x) -> float:
    """f(x) = x'Ax/2 - c'x."""
    x = _as_float_array(x, 1, "x")
    return 0.5 * x @ (p.matrix @ x) - p.c @ x


def load_problem(source) -> SpectralProblem:
    """Load a problem from a JSON file (path) or an already-parsed dict.

    Two schemas are accepted:
      {"matrix": [[...], ...], "c": [...]}          dense, gets decomposed
      {"eigenvalues": [...], "seed": 0, "c": [...]} spectral, basis synthesized
    c is optional in both. Eigenvalues must be ascending.
    """
    if isinstance(source, (str, Path)):
        try:
            with open(source) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ProblemFormatError(f"cannot read problem file {source}: {exc}") from exc
    else:
        data = source
    if not isinstance(data, dict):
        raise ProblemFormatError("problem JSON must be an object")

    if "matrix" in data:
        A = np.asarray(data["matrix"], dtype=float)
        c = data.get("c")
        c = np.zeros(A.shape[0]) if c is None else np.asarray(c, dtype=float)
        return decompose(DenseQuadratic(A, c))
    if "eigenvalues" in data:
        lam = np.asarray(data["eigenvalues"], dtype=float)
        seed = data.get("seed", 0)
        if not isinstance(seed, int):
            raise ProblemFormatError(f"seed must be an integer, got {seed!r}")
        c = data.get("c")
        return synthesize(lam, seed, c)
    raise ProblemFormatError("problem JSON needs either a 'matrix' or an 'eigenvalues' key")
