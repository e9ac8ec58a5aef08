"""Barzilai-Borwein and steepest-descent solvers for spectral quadratics.

Both methods step along the negative gradient; they differ only in stepsize.
The BB stepsize is the inverse Rayleigh quotient of the *previous* gradient,
g'g / g'Ag evaluated at g_{k-1}; the first iteration takes the exact
line-search (Cauchy) step, which reproduces the coefficient-space first-step
formula bit for bit. Steepest descent uses the Cauchy step every iteration.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, ZeroGradient
from .problem import SpectralProblem, _as_float_array

DEFAULT_MAX_ITERS = 10000
DEFAULT_GRAD_TOL = 1e-12
DIVERGENCE_FACTOR = 1e12  # numerical safety net only; unreachable per the theory


class TerminationReason(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    EXACT_ZERO_GRADIENT = "ExactZeroGradient"
    DIVERGED = "Diverged"
    UNDERFLOW = "Underflow"  # ||g|| fell below sqrt(smallest normal); squares subnormal


_REASON_FROM_CODE = {
    _kernels.TERM_MAX_ITERS: TerminationReason.MAX_ITERS,
    _kernels.TERM_CONVERGED: TerminationReason.CONVERGED,
    _kernels.TERM_EXACT_ZERO: TerminationReason.EXACT_ZERO_GRADIENT,
    _kernels.TERM_DIVERGED: TerminationReason.DIVERGED,
    _kernels.TERM_UNDERFLOW: TerminationReason.UNDERFLOW,
}


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = DEFAULT_MAX_ITERS
    grad_tol: float = DEFAULT_GRAD_TOL  # relative: stop when ||g_k|| <= grad_tol*||g_0||
    record_coefficients: bool = True

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if self.grad_tol < 0.0:
            raise ValueError(f"grad_tol must be >= 0, got {self.grad_tol}")


@dataclass(frozen=True)
class SolverTrajectory:
    """Per-iteration record of a solver run.

    Record k holds (x_k, g_k, ||g_k||); alphas[k] is the stepsize that
    produced record k+1, so alphas has one entry fewer than there are records.
    coefficients rows are d_k = V'g_k when recording was enabled.
    """

    problem: SpectralProblem
    X: np.ndarray
    G: np.ndarray
    grad_norms: np.ndarray
    alphas: np.ndarray
    termination_reason: TerminationReason
    coefficients: np.ndarray | None = field(default=None)

    def __len__(self) -> int:
        return self.X.shape[0]

    @property
    def iterations(self) -> int:
        """Number of steps taken (records minus one)."""
        return len(self) - 1

    def final_relative_norm(self) -> float:
        return self.grad_norms[-1] / self.grad_norms[0] if self.grad_norms[0] > 0 else 0.0

    def validate(self, rtol_x: float = 1e-12, rtol_g: float = 1e-10) -> None:
        """Check the self-consistency invariants; raises AssertionError on failure.

        The gradient identity g_k = A x_k - c is checked relative to the
        running gradient scale max_{j<=k} ||g_j||: the recurrence update
        accumulates rounding there, while near convergence ||g_k|| itself
        drops below any fixed multiple of that drift.
        """
        A = self.problem.matrix
        c = self.problem.c
        running = 0.0
        for k in range(len(self)):
            running = max(running, self.grad_norms[k])
            drift = np.max(np.abs(self.G[k] - (A @ self.X[k] - c)))
            assert drift <= rtol_g * running, f"g/x inconsistency {drift:.3e} at k={k}"
            if k + 1 < len(self):
                step = self.X[k] - self.alphas[k] * self.G[k]
                err = np.max(np.abs(self.X[k + 1] - step))
                scale = max(np.max(np.abs(self.X[k + 1])), np.max(np.abs(step)), 1e-300)
                assert err <= rtol_x * scale, f"x update mismatch {err:.3e} at k={k}"


def bb_step_size(p: SpectralProblem, g_prev) -> float:
    """Two-point stepsize g'g / g'Ag at the previous gradient.

    Rayleigh-quotient bounds guarantee 1/lam_n <= alpha <= 1/lam_1.
    """
    g = _as_float_array(g_prev, 1, "g_prev")
    if g.shape[0] != p.dim:
        raise DimensionMismatch(f"g_prev has length {g.shape[0]}, expected {p.dim}")
    gg = float(g @ g)
    if np.sqrt(gg) == 0.0:
        raise ZeroGradient("stepsize undefined at an exactly zero gradient")
    return gg / float(g @ (p.matrix @ g))


def _run(p, x0, cfg, bb_mode, divergence_factor):
    x0 = _as_float_array(x0, 1, "x0")
    if x0.shape[0] != p.dim:
        raise DimensionMismatch(f"x0 has length {x0.shape[0]}, expected {p.dim}")
    cfg = cfg or SolverConfig()
    X, G, norms, alphas, m, code = _kernels.descent_iterate(
        p.matrix, x0, p.c, cfg.max_iters, cfg.grad_tol, divergence_factor, bb_mode
    )
    coeffs = G[:m] @ p.basis if cfg.record_coefficients else None
    return SolverTrajectory(
        problem=p,
        X=X[:m],
        G=G[:m],
        grad_norms=norms[:m],
        alphas=alphas[: m - 1],
        termination_reason=_REASON_FROM_CODE[code],
        coefficients=coeffs,
    )


def run_bb(
    p: SpectralProblem,
    x0,
    cfg: SolverConfig | None = None,
    divergence_factor: float = DIVERGENCE_FACTOR,
) -> SolverTrajectory:
    """Run the BB method from x0, recording the full trajectory."""
    return _run(p, x0, cfg, True, divergence_factor)


def run_sd(
    p: SpectralProblem,
    x0,
    cfg: SolverConfig | None = None,
    divergence_factor: float = DIVERGENCE_FACTOR,
) -> SolverTrajectory:
    """Run steepest descent with exact line search from x0."""
    return _run(p, x0, cfg, False, divergence_factor)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_trajectory_csv(traj: SolverTrajectory, path) -> None:
    """One row per iteration: k, grad_norm, alpha, then d_1..d_n if recorded.

    The final record has no stepsize; its alpha cell is left empty. Values
    carry 17 significant digits so the file round-trips binary64 exactly.
    """
    n = traj.problem.dim
    header = ["k", "grad_norm", "alpha"]
    if traj.coefficients is not None:
        header += [f"d_{i}" for i in range(1, n + 1)]
    lines = [",".join(header)]
    for k in range(len(traj)):
        row = [str(k), _fmt(traj.grad_norms[k])]
        row.append(_fmt(traj.alphas[k]) if k < len(traj) - 1 else "")
        if traj.coefficients is not None:
            row += [_fmt(v) for v in traj.coefficients[k]]
        lines.append(",".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
