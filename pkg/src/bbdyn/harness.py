"""Experiment drivers behind the CLI: solve, verify, figure1, sweep, orbit.

Every run is a deterministic function of (config, seed): initial points come
from a counter-based Philox generator keyed by the seed, spectra given on the
command line are realized with the identity eigenbasis, and numeric CSV
payloads carry 17 significant digits, so reruns are byte-identical on one
platform. Rotated eigenbases enter through problem files, which carry their
own basis seed.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, problem, solvers, worst_case
from .errors import InputError

FIGURE1_SPECTRUM = (0.001, 0.01, 0.1, 1.0)
WORST_CASE_RATE_WINDOW = 31  # records used to fit the worst-case orbit rate (k <= 30)
DEFAULT_OUT_DIR = "bbdyn_out"
OUT_DIR_ENV = "BBDYN_OUT_DIR"


@dataclass
class ExperimentConfig:
    spectrum: list | None = None
    problem_file: str | None = None
    worst_case_preset: bool = False
    solver: str = "bb"  # bb | sd | both
    iters: int = solvers.DEFAULT_MAX_ITERS
    tol: float = solvers.DEFAULT_GRAD_TOL
    seeds: list = field(default_factory=lambda: [0])
    init: str = "uniform01"
    out_dir: str | None = None
    formats: list = field(default_factory=lambda: ["csv"])
    # sweep-only knobs
    kappas: list = field(default_factory=list)
    dim: int = 6
    # orbit-only knobs
    lam_lo: float = 1.0
    lam_hi: float = 3.0
    exact: bool = True

    def resolved_out_dir(self) -> Path:
        chosen = self.out_dir or os.environ.get(OUT_DIR_ENV) or DEFAULT_OUT_DIR
        return Path(chosen)

    def validate(self) -> None:
        if self.solver not in ("bb", "sd", "both"):
            raise InputError(f"unknown solver {self.solver!r}; expected bb, sd or both")
        if self.init != "uniform01":
            raise InputError(f"unknown init {self.init!r}; only uniform01 is available")
        if self.iters < 1:
            raise InputError(f"iters must be >= 1, got {self.iters}")
        if self.tol < 0:
            raise InputError(f"tol must be >= 0, got {self.tol}")
        bad = [f for f in self.formats if f not in ("csv", "json")]
        if bad:
            raise InputError(f"unknown output formats: {bad}")
        if not self.seeds:
            raise InputError("at least one seed is required")


@dataclass
class RunManifest:
    """Every file a run produced, plus its config echo and summary."""

    config: dict
    outputs: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def record(self, path: Path) -> Path:
        self.outputs.append(str(path))
        return path

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        payload = {
            "config": self.config,
            "outputs": self.outputs,
            "summary": self.summary,
            "timings": self.timings,
        }
        _atomic_write(path, json.dumps(payload, indent=2) + "\n")
        return path


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


def _atomic(write_fn, path: Path) -> None:
    tmp = path.with_name(path.name + ".tmp")
    write_fn(tmp)
    os.replace(tmp, path)


def _config_echo(cfg: ExperimentConfig) -> dict:
    echo = dict(cfg.__dict__)
    echo["out_dir"] = str(cfg.resolved_out_dir())
    return echo


def build_problem(cfg: ExperimentConfig) -> problem.SpectralProblem:
    """Problem source precedence: explicit file, then spectrum (identity basis)."""
    if cfg.problem_file:
        return problem.load_problem(cfg.problem_file)
    if cfg.spectrum:
        return problem.diagonal_problem(np.asarray(cfg.spectrum, dtype=float))
    raise InputError("no problem source: pass --problem-file or --spectrum")


def draw_x0(p: problem.SpectralProblem, seed: int) -> np.ndarray:
    """Componentwise uniform[0,1] initial point from a Philox stream."""
    rng = np.random.Generator(np.random.Philox(seed))
    return rng.uniform(0.0, 1.0, p.dim)


def _initial_point(p, cfg: ExperimentConfig, seed: int) -> np.ndarray:
    if cfg.worst_case_preset:
        return worst_case.worst_case_x0(p)
    return draw_x0(p, seed)


def _write_trajectory(traj, tag: str, out_dir: Path, formats, manifest: RunManifest) -> None:
    if "csv" in formats:
        path = out_dir / f"trajectory_{tag}.csv"
        _atomic(lambda tmp: solvers.write_trajectory_csv(traj, tmp), path)
        manifest.record(path)
    if "json" in formats:
        payload = {
            "termination": traj.termination_reason.value,
            "k": list(range(len(traj))),
            "grad_norm": [float(v) for v in traj.grad_norms],
            "alpha": [float(v) for v in traj.alphas],
        }
        if traj.coefficients is not None:
            payload["d"] = [[float(v) for v in row] for row in traj.coefficients]
        path = out_dir / f"trajectory_{tag}.json"
        _atomic_write(path, json.dumps(payload) + "\n")
        manifest.record(path)


def _solver_runs(cfg: ExperimentConfig):
    if cfg.solver == "both":
        return [("bb", solvers.run_bb), ("sd", solvers.run_sd)]
    return [(cfg.solver, solvers.run_bb if cfg.solver == "bb" else solvers.run_sd)]


def cmd_solve(cfg: ExperimentConfig) -> tuple[RunManifest, int]:
    """Run the selected solver(s), write trajectories, print a summary line each."""
    cfg.validate()
    out_dir = cfg.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=_config_echo(cfg))
    scfg = solvers.SolverConfig(max_iters=cfg.iters, grad_tol=cfg.tol)
    t0 = time.perf_counter()
    for seed in cfg.seeds:
        p = build_problem(cfg)
        x0 = _initial_point(p, cfg, seed)
        for name, run in _solver_runs(cfg):
            traj = run(p, x0, scfg)
            tag = f"{name}_seed{seed}"
            _write_trajectory(traj, tag, out_dir, cfg.formats, manifest)
            rel = traj.final_relative_norm()
            print(f"{tag}: {traj.iterations} iterations, final |g|/|g0| = {rel:.6e} "
                  f"({traj.termination_reason.value})")
            manifest.summary[tag] = {
                "iterations": traj.iterations,
                "final_relative_norm": rel,
                "termination": traj.termination_reason.value,
            }
    manifest.timings["total_s"] = time.perf_counter() - t0
    manifest.record(out_dir / "manifest.json")
    manifest.write(out_dir)
    return manifest, 0


def _fit_rate(traj, window: int | None = None) -> float | None:
    norms = traj.grad_norms
    positive = norms[: int(np.argmax(norms <= 0.0))] if np.any(norms <= 0.0) else norms
    if window is not None:
        positive = positive[:window]
    if positive.size < 10:
        return None
    return bounds.empirical_rate(positive)


def cmd_verify(cfg: ExperimentConfig) -> tuple[RunManifest, int]:
    """Run BB, check every inequality family, and report per-seed results.

    Exit status 1 when any checked inequality fails.
    """
    cfg.validate()
    out_dir = cfg.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=_config_echo(cfg))
    scfg = solvers.SolverConfig(max_iters=cfg.iters, grad_tol=cfg.tol)
    t0 = time.perf_counter()
    all_ok = True
    for seed in cfg.seeds:
        p = build_problem(cfg)
        x0 = _initial_point(p, cfg, seed)
        traj = solvers.run_bb(p, x0, scfg)
        report, led = bounds.verify_coefficients(p.eigenvalues, traj.coefficients)
        rate = _fit_rate(traj, WORST_CASE_RATE_WINDOW if cfg.worst_case_preset else None)
        result = report.to_dict()
        result["seed"] = seed
        result["empirical_rate"] = rate
        result["theta"] = 1.0 - 1.0 / p.kappa
        if cfg.worst_case_preset:
            result["worst_case_rate"] = (p.kappa - 1.0) / (p.kappa + 1.0)
        path = out_dir / f"verification_seed{seed}.json"
        _atomic_write(path, json.dumps(result, indent=2) + "\n")
        manifest.record(path)
        if "csv" in cfg.formats:
            path = out_dir / f"verification_entries_seed{seed}.csv"
            _atomic(lambda tmp: report.write_entries_csv(tmp), path)
            manifest.record(path)
        ok = report.all_passed
        all_ok = all_ok and ok
        fams = {f: report.family_summary(f) for f in report.families()}
        checked = sum(s["checked"] for s in fams.values())
        failed = checked - sum(s["passed"] for s in fams.values())
        print(f"seed {seed}: {checked} checks, {failed} failures"
              + (f", empirical rate {rate:.6f}" if rate is not None else ""))
        manifest.summary[f"seed{seed}"] = {"all_passed": ok, "checked": checked, "failed": failed}
    manifest.timings["total_s"] = time.perf_counter() - t0
    manifest.summary["all_passed"] = all_ok
    manifest.record(out_dir / "manifest.json")
    manifest.write(out_dir)
    return manifest, 0 if all_ok else 1


def find_peaks(coefficients, dominance: float = 10.0) -> list:
    """Sharp peaks in |d_k^j| and whether each resolves within two iterations.

    A peak is a local maximum of |d^j| that also towers over every other
    coefficient at that iteration by `dominance`. It counts as dropped when
    |d^j| falls below its pre-peak level within the next two iterations.
    """
    D = np.abs(np.asarray(coefficients))
    m, n = D.shape
    peaks = []
    for k in range(1, m - 1):
        for j in range(n):
            others = np.delete(D[k], j)
            if not (D[k, j] > D[k - 1, j] and D[k, j] > D[k + 1, j]):
                continue
            if others.size and D[k, j] < dominance * np.max(others):
                continue
            lookahead = D[k + 1 : k + 3, j]
            dropped = bool(np.any(lookahead < D[k - 1, j]))
            peaks.append({
                "index": j + 1,
                "k": k,
                "peak": float(D[k, j]),
                "pre_peak": float(D[k - 1, j]),
                "next_two_min": float(np.min(lookahead)),
                "dropped_within_two": dropped,
            })
    return peaks


def _write_peak_table(peaks, path: Path) -> None:
    lines = ["index,k,peak,pre_peak,next_two_min,dropped_within_two"]
    for p in peaks:
        lines.append(
            f"{p['index']},{p['k']},{p['peak']:.17g},{p['pre_peak']:.17g},"
            f"{p['next_two_min']:.17g},{int(p['dropped_within_two'])}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")


def _svg_log_chart(series: dict, path: Path, title: str) -> None:
    """Minimal SVG polyline chart of log10(|y|) against iteration."""
    width, height, margin = 800, 500, 60
    xs_all = [x for xs, _ in series.values() for x in xs]
    ys_all = [y for _, ys in series.values() for y in ys if y > 0.0]
    if not ys_all:
        ys_all = [1.0]
    x_max = max(xs_all) if xs_all else 1
    lo = np.floor(np.log10(min(ys_all)))
    hi = np.ceil(np.log10(max(ys_all)))
    if hi == lo:
        hi = lo + 1.0

    def px(x):
        return margin + (width - 2 * margin) * (x / max(x_max, 1))

    def py(y):
        return height - margin - (height - 2 * margin) * ((np.log10(y) - lo) / (hi - lo))

    palette = ["#7e2f8e", "#d95319", "#a2142f", "#0072bd", "#228b22", "#666666"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" font-size="16">{title}</text>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
    ]
    for tick in range(int(lo), int(hi) + 1):
        y = py(10.0 ** tick)
        parts.append(f'<line x1="{margin - 4}" y1="{y:.1f}" x2="{margin}" y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{margin - 8}" y="{y + 4:.1f}" text-anchor="end" font-size="11">1e{tick}</text>')
    for tick in range(0, x_max + 1, max(1, x_max // 10)):
        x = px(tick)
        parts.append(f'<line x1="{x:.1f}" y1="{height - margin}" x2="{x:.1f}" '
                     f'y2="{height - margin + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.1f}" y="{height - margin + 18}" text-anchor="middle" '
                     f'font-size="11">{tick}</text>')
    for idx, (label, (xs, ys)) in enumerate(series.items()):
        color = palette[idx % len(palette)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys) if y > 0.0)
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin + 6}" y="{margin + 16 * idx + 12}" '
                     f'font-size="12" fill="{color}">{label}</text>')
    parts.append("</svg>")
    _atomic_write(path, "\n".join(parts) + "\n")


def cmd_figure1(cfg: ExperimentConfig) -> tuple[RunManifest, int]:
    """The 4-d preset: eigenvalues (0.001, 0.01, 0.1, 1), uniform[0,1] start.

    Writes the coefficient trajectory CSV, a log-scale SVG of the |d^j|
    curves, and the informational peak-drop table.
    """
    cfg.validate()
    if cfg.spectrum is None:
        cfg.spectrum = list(FIGURE1_SPECTRUM)
    out_dir = cfg.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=_config_echo(cfg))
    t0 = time.perf_counter()
    p = build_problem(cfg)
    seed = cfg.seeds[0]
    x0 = draw_x0(p, seed)
    traj = solvers.run_bb(p, x0, solvers.SolverConfig(max_iters=cfg.iters, grad_tol=cfg.tol))

    path = out_dir / "figure1_trajectory.csv"
    _atomic(lambda tmp: solvers.write_trajectory_csv(traj, tmp), path)
    manifest.record(path)

    ks = list(range(len(traj)))
    series = {
        f"|d_{j + 1}|": (ks, [abs(v) for v in traj.coefficients[:, j]])
        for j in range(p.dim)
    }
    path = out_dir / "figure1_coefficients.svg"
    _svg_log_chart(series, path, "coefficient magnitudes, log scale")
    manifest.record(path)

    peaks = find_peaks(traj.coefficients)
    path = out_dir / "figure1_peaks.csv"
    _write_peak_table(peaks, path)
    manifest.record(path)

    manifest.summary = {
        "seed": seed,
        "iterations": traj.iterations,
        "final_relative_norm": traj.final_relative_norm(),
        "termination": traj.termination_reason.value,
        "peaks": len(peaks),
        "peaks_dropped_within_two": sum(pk["dropped_within_two"] for pk in peaks),
    }
    print(f"figure1 seed {seed}: {traj.iterations} iterations, "
          f"{len(peaks)} peaks ({manifest.summary['peaks_dropped_within_two']} dropped within 2)")
    manifest.timings["total_s"] = time.perf_counter() - t0
    manifest.record(out_dir / "manifest.json")
    manifest.write(out_dir)
    return manifest, 0


def sweep_spectrum(kappa: float, n: int) -> np.ndarray:
    """Geometric spectrum from 1 to kappa with n points (n=2 gives (1, kappa))."""
    if kappa == 1.0:
        return np.ones(n)
    return np.geomspace(1.0, kappa, n)


def cmd_sweep(cfg: ExperimentConfig) -> tuple[RunManifest, int]:
    """Condition-number grid: one row per (kappa, seed, solver) with fitted rates."""
    cfg.validate()
    if not cfg.kappas:
        raise InputError("sweep needs --kappas")
    n = 2 if cfg.worst_case_preset else cfg.dim
    out_dir = cfg.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=_config_echo(cfg))
    scfg = solvers.SolverConfig(max_iters=cfg.iters, grad_tol=cfg.tol)
    t0 = time.perf_counter()
    rows = []
    for kappa in cfg.kappas:
        lam = sweep_spectrum(float(kappa), n)
        p = problem.diagonal_problem(lam)
        theta = 1.0 - 1.0 / p.kappa
        sd_bound = (p.kappa - 1.0) / (p.kappa + 1.0)
        for seed in cfg.seeds:
            x0 = _initial_point(p, cfg, seed)
            for name, run in _solver_runs(cfg):
                traj = run(p, x0, scfg)
                window = WORST_CASE_RATE_WINDOW if cfg.worst_case_preset else None
                rate = _fit_rate(traj, window)
                reached = traj.termination_reason is solvers.TerminationReason.CONVERGED
                rows.append({
                    "kappa": float(kappa),
                    "seed": seed,
                    "solver": name,
                    "empirical_rate": rate,
                    "theta": theta,
                    "sd_rate_bound": sd_bound,
                    "iters_to_tol": traj.iterations if reached else "",
                })
    lines = ["kappa,seed,solver,empirical_rate,theta,sd_rate_bound,iters_to_tol"]
    for r in rows:
        rate = "" if r["empirical_rate"] is None else f"{r['empirical_rate']:.17g}"
        lines.append(
            f"{r['kappa']:.17g},{r['seed']},{r['solver']},{rate},"
            f"{r['theta']:.17g},{r['sd_rate_bound']:.17g},{r['iters_to_tol']}"
        )
    path = out_dir / "sweep.csv"
    _atomic_write(path, "\n".join(lines) + "\n")
    manifest.record(path)
    manifest.summary = {"cells": len(rows)}
    print(f"sweep: {len(rows)} cells -> {path}")
    manifest.timings["total_s"] = time.perf_counter() - t0
    manifest.record(out_dir / "manifest.json")
    manifest.write(out_dir)
    return manifest, 0


def cmd_orbit(cfg: ExperimentConfig) -> tuple[RunManifest, int]:
    """Two-mode worst-case orbit; with a spectrum, also the embedded n-d check."""
    cfg.validate()
    out_dir = cfg.resolved_out_dir()
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=_config_echo(cfg))
    t0 = time.perf_counter()
    mode = worst_case.OrbitMode.EXACT_RATIONAL if cfg.exact else worst_case.OrbitMode.FLOAT64
    orbit = worst_case.run_orbit(cfg.lam_lo, cfg.lam_hi, cfg.iters, mode)
    path = out_dir / "orbit.csv"
    _atomic(lambda tmp: worst_case.write_orbit_csv(orbit, tmp), path)
    manifest.record(path)
    kappa = float(cfg.lam_hi) / float(cfg.lam_lo)
    rho = (kappa - 1.0) / (kappa + 1.0)
    manifest.summary = {
        "mode": orbit.mode.value,
        "kappa": kappa,
        "rate": rho,
        "symmetry_break_k": orbit.symmetry_break_k,
        "closed_form_break_k": orbit.closed_form_break_k,
    }
    exit_code = 0
    if cfg.spectrum:
        p = build_problem(cfg)
        embed = worst_case.embed_orbit_check(p, cfg.iters)
        path = out_dir / "orbit_report.json"
        _atomic_write(path, json.dumps(embed.to_dict(), indent=2) + "\n")
        manifest.record(path)
        manifest.summary["embedded"] = {
            "kappa": embed.kappa,
            "step_ratio_horizon": embed.step_ratio_horizon,
            "cumulative_horizon": embed.cumulative_horizon,
            "interior_max": embed.interior_max,
            "all_passed": embed.report.all_passed,
        }
        print(f"embedded check: step horizon {embed.step_ratio_horizon}, "
              f"cumulative horizon {embed.cumulative_horizon}, "
              f"interior max {embed.interior_max:.3e}")
        if not embed.report.all_passed:
            exit_code = 1
    print(f"orbit ({orbit.mode.value}): kappa {kappa:g}, per-step rate {rho:.12g}")
    manifest.timings["total_s"] = time.perf_counter() - t0
    manifest.record(out_dir / "manifest.json")
    manifest.write(out_dir)
    return manifest, exit_code
