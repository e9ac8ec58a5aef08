"""The slow two-mode orbit: BB at its exact worst rate (kappa-1)/(kappa+1).

Starting from x_0 = A^{-1}(c + v_1 + v_n), the gradient lives entirely in the
extreme eigendirections with coefficients (a_k, b_k) = (d_k^1, d_k^n). The
squares a_k^2 = b_k^2 stay equal by induction, which collapses the recurrence
to a fixed multiplier of magnitude (lam_hi - lam_lo)/(lam_hi + lam_lo) per
step. That symmetry is dynamically unstable, so certifying it requires exact
rational arithmetic; the float path records where it drifts instead of
asserting it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bounds
from .errors import BadSpectrum, DegenerateSpectrum, DimensionTooSmall
from .problem import SpectralProblem
from .solvers import SolverConfig, SolverTrajectory, run_bb


class OrbitMode(enum.Enum):
    FLOAT64 = "float64"
    EXACT_RATIONAL = "exact"


@dataclass(frozen=True)
class TwoModeOrbit:
    """Trajectory of the two live coefficients a_k = d_k^1 and b_k = d_k^n.

    In exact mode entries are Fractions and grad_norm_ratio[k] equals |a_k|
    exactly; in float mode they are binary64 and the ratio is computed as
    sqrt((a^2+b^2)/2). symmetry_break_k / closed_form_break_k record the first
    float iteration where a_k^2 != b_k^2, resp. where a_k leaves the closed
    form; None when no break occurred within the horizon.
    """

    lam_lo: object
    lam_hi: object
    mode: OrbitMode
    a: list
    b: list
    grad_norm_ratio: list
    symmetry_break_k: int | None = None
    closed_form_break_k: int | None = None

    def __len__(self) -> int:
        return len(self.a)


def run_orbit(lam_lo, lam_hi, iters: int, mode: OrbitMode = OrbitMode.EXACT_RATIONAL) -> TwoModeOrbit:
    """Iterate the two-coefficient reduction from (a_0, b_0) = (1, 1).

    Exact mode carries Fractions end to end (float inputs are taken at their
    exact binary value), so the multiplier is exactly
    +-(lam_hi - lam_lo)/(lam_hi + lam_lo) at every step.
    """
    if iters < 1:
        raise ValueError(f"iters must be >= 1, got {iters}")
    if mode is OrbitMode.EXACT_RATIONAL:
        lo, hi = Fraction(lam_lo), Fraction(lam_hi)
        one = Fraction(1)
    else:
        lo, hi = float(lam_lo), float(lam_hi)
        one = 1.0
    if lo <= 0:
        raise BadSpectrum(f"eigenvalues must be positive, got lam_lo = {lam_lo}")
    if lo == hi:
        raise DegenerateSpectrum("lam_lo = lam_hi leaves no slow orbit (one-step convergence)")
    if lo > hi:
        raise BadSpectrum("lam_lo must be the smaller eigenvalue")

    a = [one]
    b = [one]
    for k in range(iters):
        drv = k - 1 if k >= 1 else 0
        a2, b2 = a[drv] * a[drv], b[drv] * b[drv]
        den = lo * a2 + hi * b2
        a.append(a[k] * ((hi - lo) * b2 / den))
        b.append(b[k] * ((lo - hi) * a2 / den))

    if mode is OrbitMode.EXACT_RATIONAL:
        ratio = [abs(ak) for ak in a]  # a_k^2 = b_k^2 exactly, so ||g_k||/||g_0|| = |a_k|
        sym_break = None
        cf_break = None
    else:
        ratio = [float(np.sqrt((ak * ak + bk * bk) / 2.0)) for ak, bk in zip(a, b)]
        sym_break = next((k for k in range(len(a)) if a[k] * a[k] != b[k] * b[k]), None)
        mult = (hi - lo) / (hi + lo)
        cf_break = next((k for k in range(len(a)) if a[k] != mult ** k), None)
    return TwoModeOrbit(lam_lo, lam_hi, mode, a, b, ratio, sym_break, cf_break)


def worst_case_x0(p: SpectralProblem) -> np.ndarray:
    """The initializer A^{-1}(c + v_1 + v_n), applied spectrally.

    The resulting gradient is v_1 + v_n: unit weight on the extreme
    eigendirections, nothing in between.
    """
    if p.dim < 2:
        raise DimensionTooSmall("the two-mode construction needs n >= 2")
    w = p.basis.T @ p.c
    w[0] += 1.0
    w[-1] += 1.0
    return p.basis @ (w / p.eigenvalues)


@dataclass
class EmbeddedOrbitReport:
    """Full-dimensional float run from the worst-case initializer, checked.

    Horizons are measured, not asserted: step_ratio_horizon counts the leading
    steps whose gradient-norm ratio stays within per_step_tol of the ideal
    rate, cumulative_horizon the leading iterations whose total decay matches
    the closed form within cumulative_rtol. Regression tests pin both.
    """

    kappa: float
    rho: float
    degenerate: bool
    trajectory: SolverTrajectory
    report: bounds.VerificationReport
    step_ratio_horizon: int = 0
    cumulative_horizon: int = 0
    interior_max: float = 0.0
    per_step_tol: float = 0.0
    cumulative_rtol: float = 0.0

    def to_dict(self) -> dict:
        return {
            "kappa": float(self.kappa),
            "rho": float(self.rho),
            "degenerate": self.degenerate,
            "records": len(self.trajectory),
            "termination": self.trajectory.termination_reason.value,
            "step_ratio_horizon": int(self.step_ratio_horizon),
            "cumulative_horizon": int(self.cumulative_horizon),
            "interior_max": float(self.interior_max),
            "per_step_tol": self.per_step_tol,
            "cumulative_rtol": self.cumulative_rtol,
            "verification": self.report.to_dict(),
        }


def embed_orbit_check(
    p: SpectralProblem,
    iters: int,
    per_step_tol: float = 1e-10,
    cumulative_rtol: float = 1e-6,
    interior_tol: float = 1e-8,
) -> EmbeddedOrbitReport:
    """Run the n-dimensional BB iteration from worst_case_x0 and check the orbit.

    Interior coefficients (strictly between the extremes) must stay below
    interior_tol in magnitude at every iteration; the gradient-norm decay is
    compared per step and cumulatively against (kappa-1)/(kappa+1), up to the
    measured break horizons. A flat spectrum short-circuits to the one-step
    degenerate check.
    """
    x0 = worst_case_x0(p)
    cfg = SolverConfig(max_iters=iters, grad_tol=0.0, record_coefficients=True)
    traj = run_bb(p, x0, cfg)
    lam = p.eigenvalues
    report = bounds.VerificationReport()

    if lam[-1] == lam[0]:
        bounds.check_degenerate(traj.coefficients, lam, report)
        return EmbeddedOrbitReport(
            kappa=p.kappa, rho=0.0, degenerate=True, trajectory=traj, report=report,
            per_step_tol=per_step_tol, cumulative_rtol=cumulative_rtol,
        )

    rho = (lam[-1] - lam[0]) / (lam[-1] + lam[0])
    D = traj.coefficients
    m = len(traj)

    interior_max = 0.0
    for k in range(m):
        for j in range(1, p.dim - 1):
            interior_max = max(interior_max, abs(D[k, j]))
            report.add("orbit_interior_zero", j, k, abs(D[k, j]), interior_tol)

    norms = traj.grad_norms
    step_horizon = m - 1
    for k in range(m - 1):
        dev = abs(norms[k + 1] / norms[k] - rho)
        if dev > per_step_tol:
            step_horizon = k
            break
        report.add("orbit_step_ratio", 0, k, dev, per_step_tol)

    cumulative_horizon = m - 1
    for k in range(1, m):
        expected = rho ** k
        dev = abs(norms[k] / norms[0] - expected)
        if dev > cumulative_rtol * expected:
            cumulative_horizon = k - 1
            break
        report.add("orbit_cumulative_ratio", 0, k, dev, cumulative_rtol * expected)

    return EmbeddedOrbitReport(
        kappa=p.kappa,
        rho=rho,
        degenerate=False,
        trajectory=traj,
        report=report,
        step_ratio_horizon=step_horizon,
        cumulative_horizon=cumulative_horizon,
        interior_max=interior_max,
        per_step_tol=per_step_tol,
        cumulative_rtol=cumulative_rtol,
    )


def _rational_str(value) -> str:
    """Exact decimal string when the denominator is 2^a 5^b, else 'p/q'."""
    fr = Fraction(value)
    num, den = fr.numerator, fr.denominator
    twos = fives = 0
    d = den
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{num}/{den}"
    shift = max(twos, fives)
    scaled = abs(num) * 10 ** shift // den
    sign = "-" if num < 0 else ""
    digits = str(scaled).rjust(shift + 1, "0")
    if shift == 0:
        return f"{sign}{digits}"
    return f"{sign}{digits[:-shift]}.{digits[-shift:]}"


def write_orbit_csv(orbit: TwoModeOrbit, path) -> None:
    """Columns k, a, b, grad_norm_ratio; exact-mode values serialized exactly."""
    exact = orbit.mode is OrbitMode.EXACT_RATIONAL
    fmt = _rational_str if exact else (lambda v: f"{v:.17g}")
    lines = ["k,a,b,grad_norm_ratio"]
    for k in range(len(orbit)):
        lines.append(f"{k},{fmt(orbit.a[k])},{fmt(orbit.b[k])},{fmt(orbit.grad_norm_ratio[k])}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
