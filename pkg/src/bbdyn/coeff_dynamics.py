"""The eigen-coefficient recurrence driving the BB iteration, simulated directly.

Writing the gradient in the eigenbasis, g_k = sum_i d_k^i v_i, the BB update
multiplies each coefficient by a factor built from the *previous* coefficient
vector:

    d_{k+1}^i = d_k^i * sum_j (lam_j - lam_i) (d_{k-1}^j)^2
                        / sum_j lam_j (d_{k-1}^j)^2

with the first step driven by d_0 itself. This module iterates that scalar
recurrence with no vectors or matrices involved, and classifies each index as
shrinking (the factor for index i is >= 0) or fluctuating (< 0).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, IndexOutOfRange, ZeroInitialGradient, ZeroPreviousCoefficients
from .problem import _as_float_array


class Mode(enum.Enum):
    SHRINKING = "S"
    FLUCTUATION = "F"


@dataclass(frozen=True)
class CoefficientState:
    """The (d_{k-1}, d_k) pair the recurrence advances, plus its eigenvalues."""

    eigenvalues: np.ndarray
    d_prev: np.ndarray
    d_curr: np.ndarray
    k: int

    def __post_init__(self):
        lam = _as_float_array(self.eigenvalues, 1, "eigenvalues")
        dp = _as_float_array(self.d_prev, 1, "d_prev")
        dc = _as_float_array(self.d_curr, 1, "d_curr")
        if not (lam.shape == dp.shape == dc.shape):
            raise DimensionMismatch("eigenvalues, d_prev and d_curr must have equal length")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "d_prev", dp)
        object.__setattr__(self, "d_curr", dc)


def first_step(eigenvalues, d0) -> CoefficientState:
    """Apply the first-iteration update (driven by d_0) and return the k=1 state."""
    lam = _as_float_array(eigenvalues, 1, "eigenvalues")
    d0 = _as_float_array(d0, 1, "d0")
    if lam.shape != d0.shape:
        raise DimensionMismatch("eigenvalues and d0 must have equal length")
    if not np.any(d0):
        raise ZeroInitialGradient("d0 must be nonzero")
    d1 = np.empty_like(d0)
    for i in range(lam.size):
        d1[i] = d0[i] * _kernels.coeff_multiplier(lam, d0, i)
    return CoefficientState(lam, d0, d1, 1)


def step(s: CoefficientState) -> CoefficientState:
    """Advance one iteration: the new factors are computed from s.d_prev.

    A driving vector below the norm-underflow threshold has subnormal squares
    and cannot produce meaningful factors; the successor is flushed to zero,
    matching simulate().
    """
    if not np.any(s.d_prev):
        raise ZeroPreviousCoefficients("cannot step from an all-zero previous coefficient vector")
    lam = s.eigenvalues
    if np.max(np.abs(s.d_prev)) < _kernels.NORM_UNDERFLOW:
        return CoefficientState(lam, s.d_curr, np.zeros_like(s.d_curr), s.k + 1)
    d_next = np.empty_like(s.d_curr)
    for i in range(lam.size):
        d_next[i] = s.d_curr[i] * _kernels.coeff_multiplier(lam, s.d_prev, i)
    return CoefficientState(lam, s.d_curr, d_next, s.k + 1)


def classify_mode(eigenvalues, d, i: int) -> Mode:
    """Mode of index i at the state d: shrinking iff sum_j (lam_j - lam_i) d_j^2 >= 0.

    The boundary (sum exactly zero) counts as shrinking.
    """
    lam = _as_float_array(eigenvalues, 1, "eigenvalues")
    d = _as_float_array(d, 1, "d")
    if lam.shape != d.shape:
        raise DimensionMismatch("eigenvalues and d must have equal length")
    if not 0 <= i < lam.size:
        raise IndexOutOfRange(f"index {i} outside [0, {lam.size})")
    S = _kernels.mode_sums(lam, d.reshape(1, -1))
    return Mode.SHRINKING if S[0, i] >= 0.0 else Mode.FLUCTUATION


@dataclass(frozen=True)
class SimulationResult:
    """Coefficient rows d_0..d_K and the per-index mode at each iteration."""

    eigenvalues: np.ndarray
    coefficients: np.ndarray  # (K+1, n)
    mode_sums: np.ndarray     # same shape; sign decides the mode

    def __len__(self) -> int:
        return self.coefficients.shape[0]

    def modes(self) -> np.ndarray:
        """Character matrix: 'S' where shrinking, 'F' where fluctuating."""
        return np.where(self.mode_sums >= 0.0, "S", "F")


def simulate(eigenvalues, d0, iters: int) -> SimulationResult:
    """Run the recurrence for `iters` steps from d_0.

    An exactly zero coefficient vector is a fixed point; once reached, the
    remaining rows are zeros rather than NaNs from a 0/0 factor. A driving
    vector whose squares underflow to subnormals is flushed the same way.
    """
    lam = _as_float_array(eigenvalues, 1, "eigenvalues")
    d0 = _as_float_array(d0, 1, "d0")
    if lam.shape != d0.shape:
        raise DimensionMismatch("eigenvalues and d0 must have equal length")
    if not np.any(d0):
        raise ZeroInitialGradient("d0 must be nonzero")
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    D = _kernels.coeff_simulate(lam, d0, iters)
    return SimulationResult(lam, D, _kernels.mode_sums(lam, D))


def write_simulation_csv(result: SimulationResult, path) -> None:
    """Columns k, d_1..d_n, mode_1..mode_n (S/F); 17 significant digits."""
    n = result.eigenvalues.size
    header = ["k"] + [f"d_{i}" for i in range(1, n + 1)] + [f"mode_{i}" for i in range(1, n + 1)]
    modes = result.modes()
    lines = [",".join(header)]
    for k in range(len(result)):
        row = [str(k)] + [f"{v:.17g}" for v in result.coefficients[k]] + list(modes[k])
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
