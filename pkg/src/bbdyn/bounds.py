"""Certified per-step and envelope bounds for the coefficient dynamics.

Three inequality families are checked mechanically against any recorded
coefficient trajectory:

  general_ratio             |d_{k+1}^i| <= C_i |d_k^i| for k >= 1, where
                            C_i = max(lam_i/lam_1 - 1, 1 - lam_i/lam_n)
  conditional_contraction   |d_{k+1}^i| <= theta |d_k^i| whenever index i was
                            shrinking at k-1, or fluctuating with
                            (d_{k-1}^i)^2 >= sum_{j<i} (d_{k-1}^j)^2
  envelope                  |d_k^i| <= F_i theta^k for all k >= 1

with theta = 1 - 1/kappa and the F_i envelope constants built recursively
from |d_0|, |d_1|. A failure in any family on a genuine BB trajectory
indicates an implementation bug, which makes this suite a strong oracle.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import (
    DegenerateSpectrum,
    InsufficientTrajectory,
    LedgerMismatch,
    NonPositiveNorm,
)
from .problem import _as_float_array

# Inequality checks pass iff lhs <= rhs*(1 + REL_SLACK) + ABS_FLOOR. The
# relative slack absorbs rounding in the compared quantities; the floor only
# matters against an exactly zero right-hand side.
REL_SLACK = 1e-9
ABS_FLOOR = 1e-300

GENERAL_RATIO = "general_ratio"
CONDITIONAL_CONTRACTION = "conditional_contraction"
ENVELOPE = "envelope"
DEGENERATE_ZERO = "degenerate_zero"


def inequality_holds(lhs: float, rhs: float) -> bool:
    return lhs <= rhs * (1.0 + REL_SLACK) + ABS_FLOOR


@dataclass(frozen=True)
class BoundLedger:
    """Envelope rate theta, per-index ratio constants C, and envelope levels F."""

    eigenvalues: np.ndarray
    kappa: float
    theta: float
    C: np.ndarray
    F: np.ndarray
    d0: np.ndarray
    d1: np.ndarray


def ledger(eigenvalues, d0, d1) -> BoundLedger:
    """Build the envelope constants from the first two coefficient vectors.

    F_1 = |d_0^1| and, for i >= 2 in ascending order,
    F_i = max(|d_0^i|, |d_1^i|/theta, theta^-2 C_i^2 sqrt(sum_{j<i} F_j^2)).
    Absolute values keep every F_i nonnegative, as an envelope on |d_k^i|
    requires. A flat spectrum with n >= 2 has theta = 0 and no usable
    recursion, hence DegenerateSpectrum; n = 1 needs only the base case.
    """
    lam = _as_float_array(eigenvalues, 1, "eigenvalues")
    d0 = _as_float_array(d0, 1, "d0")
    d1 = _as_float_array(d1, 1, "d1")
    n = lam.size
    if not (d0.size == n and d1.size == n):
        raise LedgerMismatch("d0/d1 length does not match the spectrum")
    kappa = lam[-1] / lam[0]
    theta = 1.0 - lam[0] / lam[-1]
    C = np.maximum(lam / lam[0] - 1.0, 1.0 - lam / lam[-1])
    if n == 1:
        return BoundLedger(lam, kappa, theta, C, np.array([abs(d0[0])]), d0, d1)
    if lam[-1] == lam[0]:
        raise DegenerateSpectrum("flat spectrum: theta = 0 leaves the envelope recursion undefined")
    F = np.empty(n)
    F[0] = abs(d0[0])
    for i in range(1, n):
        tail = np.sqrt(np.sum(F[:i] ** 2))
        F[i] = max(abs(d0[i]), abs(d1[i]) / theta, theta ** -2 * C[i] ** 2 * tail)
    return BoundLedger(lam, kappa, theta, C, F, d0, d1)


@dataclass
class VerificationEntry:
    family: str
    i: int  # 0-based index; serialized 1-based to match the d_1..d_n labels
    k: int
    lhs: float
    rhs: float
    passed: bool
    margin: float


@dataclass
class VerificationReport:
    """Per-inequality results with per-family pass/skip counts and worst margins."""

    entries: list = field(default_factory=list)
    skipped: dict = field(default_factory=dict)

    def add(self, family: str, i: int, k: int, lhs: float, rhs: float) -> VerificationEntry:
        lhs, rhs = float(lhs), float(rhs)
        entry = VerificationEntry(family, int(i), int(k), lhs, rhs,
                                  bool(inequality_holds(lhs, rhs)), rhs - lhs)
        self.entries.append(entry)
        return entry

    def skip(self, family: str, count: int = 1) -> None:
        self.skipped[family] = self.skipped.get(family, 0) + count

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        self.entries.extend(other.entries)
        for fam, cnt in other.skipped.items():
            self.skip(fam, cnt)
        return self

    @property
    def all_passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def families(self) -> list:
        seen = dict.fromkeys(e.family for e in self.entries)
        for fam in self.skipped:
            seen.setdefault(fam, None)
        return list(seen)

    def family_summary(self, family: str) -> dict:
        entries = [e for e in self.entries if e.family == family]
        summary = {
            "family": family,
            "checked": len(entries),
            "passed": sum(e.passed for e in entries),
            "skipped": self.skipped.get(family, 0),
            "worst_margin": None,
            "argmin": None,
        }
        if entries:
            worst = min(entries, key=lambda e: e.margin)
            summary["worst_margin"] = worst.margin
            summary["argmin"] = {"i": worst.i + 1, "k": worst.k}
        return summary

    def to_dict(self) -> dict:
        return {
            "all_passed": self.all_passed,
            "families": [self.family_summary(f) for f in self.families()],
        }

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    def write_entries_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["family", "i", "k", "lhs", "rhs", "passed", "margin"])
            for e in self.entries:
                writer.writerow(
                    [e.family, e.i + 1, e.k, f"{e.lhs:.17g}", f"{e.rhs:.17g}",
                     int(e.passed), f"{e.margin:.17g}"]
                )


def _coeff_matrix(D, minimum_rows, lam):
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[1] != lam.size:
        raise LedgerMismatch(f"coefficient matrix shape {D.shape} does not match the ledger")
    if D.shape[0] < minimum_rows:
        raise InsufficientTrajectory(
            f"need at least {minimum_rows} coefficient records, got {D.shape[0]}"
        )
    return D


def check_general_ratio(D, led: BoundLedger, report: VerificationReport | None = None) -> VerificationReport:
    """Per-step ratio bound |d_{k+1}^i| <= C_i |d_k^i| for every k >= 1."""
    D = _coeff_matrix(D, 3, led.eigenvalues)
    report = report if report is not None else VerificationReport()
    absD = np.abs(D)
    for k in range(1, D.shape[0] - 1):
        for i in range(D.shape[1]):
            report.add(GENERAL_RATIO, i, k, absD[k + 1, i], led.C[i] * absD[k, i])
    return report


def check_conditional_contraction(D, led: BoundLedger, report: VerificationReport | None = None) -> VerificationReport:
    """Contraction |d_{k+1}^i| <= theta |d_k^i| under either triggering condition.

    Checked where index i at k-1 was shrinking, or fluctuating with
    (d_{k-1}^i)^2 >= sum_{j<i} (d_{k-1}^j)^2; other transitions carry no
    claim and are skipped (counted).
    """
    D = _coeff_matrix(D, 3, led.eigenvalues)
    report = report if report is not None else VerificationReport()
    S = _kernels.mode_sums(led.eigenvalues, D)
    absD = np.abs(D)
    sq = D ** 2
    for k in range(1, D.shape[0] - 1):
        prefix = 0.0  # running sum_{j<i} (d_{k-1}^j)^2
        for i in range(D.shape[1]):
            shrinking = S[k - 1, i] >= 0.0
            dominant = sq[k - 1, i] >= prefix
            prefix += sq[k - 1, i]
            if shrinking or dominant:
                report.add(CONDITIONAL_CONTRACTION, i, k, absD[k + 1, i], led.theta * absD[k, i])
            else:
                report.skip(CONDITIONAL_CONTRACTION)
    return report


def check_envelope(D, led: BoundLedger, report: VerificationReport | None = None) -> VerificationReport:
    """R-linear envelope |d_k^i| <= F_i theta^k at every recorded k >= 1."""
    D = _coeff_matrix(D, 2, led.eigenvalues)
    if not (np.allclose(D[0], led.d0, rtol=1e-12, atol=0.0)
            and np.allclose(D[1], led.d1, rtol=1e-12, atol=0.0)):
        raise LedgerMismatch("ledger was built from different d0/d1 than this trajectory")
    report = report if report is not None else VerificationReport()
    absD = np.abs(D)
    for k in range(1, D.shape[0]):
        envelope = led.F * led.theta ** k
        for i in range(D.shape[1]):
            report.add(ENVELOPE, i, k, absD[k, i], envelope[i])
    return report


def check_degenerate(D, lam, report: VerificationReport | None = None) -> VerificationReport:
    """Flat-spectrum special case: the first step lands exactly at zero.

    With all eigenvalues equal the update factor is exactly zero, so every
    d_k with k >= 1 must vanish identically; the envelope families above do
    not apply (theta = 0).
    """
    lam = _as_float_array(lam, 1, "eigenvalues")
    D = _coeff_matrix(D, 2, lam)
    report = report if report is not None else VerificationReport()
    absD = np.abs(D)
    for k in range(1, D.shape[0]):
        for i in range(D.shape[1]):
            report.add(DEGENERATE_ZERO, i, k, absD[k, i], 0.0)
    return report


def verify_coefficients(eigenvalues, D) -> tuple[VerificationReport, BoundLedger | None]:
    """Run every applicable inequality family against a coefficient trajectory.

    Returns the combined report plus the ledger (None for a flat spectrum,
    where only the degenerate zero check applies).
    """
    lam = _as_float_array(eigenvalues, 1, "eigenvalues")
    D = np.asarray(D, dtype=float)
    if D.ndim != 2 or D.shape[0] < 2:
        # Started at the optimum: nothing past d_0 to certify.
        return VerificationReport(), None
    if lam.size >= 2 and lam[-1] == lam[0]:
        return check_degenerate(D, lam), None
    led = ledger(lam, D[0], D[1] if D.shape[0] > 1 else np.zeros_like(D[0]))
    if lam.size == 1:
        return check_degenerate(D, lam, VerificationReport()), led
    report = VerificationReport()
    if D.shape[0] >= 3:
        check_general_ratio(D, led, report)
        check_conditional_contraction(D, led, report)
    check_envelope(D, led, report)
    return report, led


def empirical_rate(grad_norms) -> float:
    """Observed R-linear rate: exp of the least-squares slope of log ||g_k||."""
    norms = np.asarray(grad_norms, dtype=float)
    if norms.ndim != 1 or norms.size < 10:
        raise InsufficientTrajectory(f"need at least 10 gradient norms, got {norms.size}")
    if np.any(norms <= 0.0):
        raise NonPositiveNorm("every gradient norm in the fit window must be positive")
    slope = np.polyfit(np.arange(norms.size), np.log(norms), 1)[0]
    return float(np.exp(slope))
