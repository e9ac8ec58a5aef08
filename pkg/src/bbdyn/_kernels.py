"""Hot numeric kernels: numba-jitted when available, pure numpy/Python otherwise.

Every kernel is written with explicit loops so the jitted and fallback paths
execute the identical sequence of IEEE-754 operations; results are bit-equal
on either path. Set BBDYN_NO_NUMBA=1 (or NUMBA_DISABLE_JIT=1) to force the
pure-Python fallback; see benchmarks/bench_kernels.py for the speed comparison.
"""

import os

import numpy as np


def _numba_enabled() -> bool:
    if os.environ.get("BBDYN_NO_NUMBA", "").strip() not in ("", "0"):
        return False
    if os.environ.get("NUMBA_DISABLE_JIT", "").strip() not in ("", "0"):
        return False
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


NUMBA_ENABLED = _numba_enabled()

if NUMBA_ENABLED:
    from numba import njit

    def _jit(fn):
        return njit(cache=True)(fn)
else:
    def _jit(fn):
        return fn


# Termination codes shared with solvers.TerminationReason.
TERM_MAX_ITERS = 0
TERM_CONVERGED = 1
TERM_EXACT_ZERO = 2
TERM_DIVERGED = 3
TERM_UNDERFLOW = 4

# Below sqrt(smallest normal double) the squared coefficients entering every
# Rayleigh quotient are subnormal and the multiplicative dynamics degrades to
# garbage; both iterations stop there.
NORM_UNDERFLOW = 1.4916681462400413e-154


def _jacobi_eigh(A, tol_factor, max_sweeps):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix.

    Sweeps rotate every off-diagonal pair until the off-diagonal Frobenius
    norm falls below tol_factor * ||A||_F. Returns (eigenvalues unsorted,
    accumulated rotations V, sweeps used, final off-diagonal norm).
    """
    n = A.shape[0]
    M = A.copy()
    V = np.eye(n)
    fnorm = 0.0
    for i in range(n):
        for j in range(n):
            fnorm += M[i, j] * M[i, j]
    fnorm = np.sqrt(fnorm)
    threshold = tol_factor * fnorm

    sweeps = 0
    off = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            off += 2.0 * M[i, j] * M[i, j]
    off = np.sqrt(off)

    while off > threshold and sweeps < max_sweeps:
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = M[p, q]
                if apq == 0.0:
                    continue
                tau = (M[q, q] - M[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                cth = 1.0 / np.sqrt(1.0 + t * t)
                sth = t * cth
                # Rotate rows/columns p and q of M, keeping symmetry.
                for k in range(n):
                    mkp = M[k, p]
                    mkq = M[k, q]
                    M[k, p] = cth * mkp - sth * mkq
                    M[k, q] = sth * mkp + cth * mkq
                for k in range(n):
                    mpk = M[p, k]
                    mqk = M[q, k]
                    M[p, k] = cth * mpk - sth * mqk
                    M[q, k] = sth * mpk + cth * mqk
                for k in range(n):
                    vkp = V[k, p]
                    vkq = V[k, q]
                    V[k, p] = cth * vkp - sth * vkq
                    V[k, q] = sth * vkp + cth * vkq
        sweeps += 1
        off = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off += 2.0 * M[i, j] * M[i, j]
        off = np.sqrt(off)

    w = np.empty(n)
    for i in range(n):
        w[i] = M[i, i]
    return w, V, sweeps, off


def _descent_iterate(A, x0, c, max_iters, grad_tol, div_factor, bb_mode):
    """Gradient-descent iteration on f(x) = x'Ax/2 - c'x, recording everything.

    bb_mode True: two-point stepsize (previous-gradient Rayleigh ratio) with a
    Cauchy first step. bb_mode False: exact line search every step. Gradients
    advance by the recurrence g <- g - alpha*(A g); x by x <- x - alpha*g.

    Returns (X, G, norms, alphas, m, reason): m records, alphas[k] produced
    record k+1, reason is one of the TERM_* codes.
    """
    n = x0.shape[0]
    X = np.empty((max_iters + 1, n))
    G = np.empty((max_iters + 1, n))
    norms = np.empty(max_iters + 1)
    alphas = np.empty(max_iters)

    x = x0.copy()
    g = np.empty(n)
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += A[i, j] * x[j]
        g[i] = acc - c[i]

    g0_norm = 0.0
    for i in range(n):
        g0_norm += g[i] * g[i]
    g0_norm = np.sqrt(g0_norm)
    tol_abs = grad_tol * g0_norm
    div_abs = div_factor * g0_norm

    prev_gg = 0.0
    prev_gag = 0.0
    reason = TERM_MAX_ITERS
    m = 0
    for k in range(max_iters + 1):
        gnorm = 0.0
        for i in range(n):
            gnorm += g[i] * g[i]
        gnorm = np.sqrt(gnorm)
        for i in range(n):
            X[k, i] = x[i]
            G[k, i] = g[i]
        norms[k] = gnorm
        m = k + 1
        if gnorm == 0.0:
            reason = TERM_EXACT_ZERO
            break
        if gnorm <= tol_abs:
            reason = TERM_CONVERGED
            break
        if gnorm < NORM_UNDERFLOW:
            reason = TERM_UNDERFLOW
            break
        if gnorm > div_abs:
            reason = TERM_DIVERGED
            break
        if k == max_iters:
            reason = TERM_MAX_ITERS
            break

        h = np.empty(n)
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += A[i, j] * g[j]
            h[i] = acc
        gg = 0.0
        gag = 0.0
        for i in range(n):
            gg += g[i] * g[i]
            gag += g[i] * h[i]
        if bb_mode and k > 0:
            alpha = prev_gg / prev_gag
        else:
            alpha = gg / gag
        prev_gg = gg
        prev_gag = gag
        alphas[k] = alpha
        for i in range(n):
            x[i] = x[i] - alpha * g[i]
            g[i] = g[i] - alpha * h[i]

    return X, G, norms, alphas, m, reason


def _coeff_multiplier(lam, d_drv, i):
    """Per-index update factor: sum_j (lam_j - lam_i) d_j^2 / sum_j lam_j d_j^2.

    The numerator keeps the literal eigenvalue differences so that exactly
    equal eigenvalues yield an exactly zero factor.
    """
    n = lam.shape[0]
    num = 0.0
    den = 0.0
    for j in range(n):
        sq = d_drv[j] * d_drv[j]
        num += (lam[j] - lam[i]) * sq
        den += lam[j] * sq
    return num / den


def _coeff_simulate(lam, d0, iters):
    """Iterate the eigen-coefficient recurrence for `iters` steps.

    Row k of the result is d_k. The first step is driven by d_0 itself; step
    k >= 1 multiplies d_k by factors computed from d_{k-1}. A row of exact
    zeros is a fixed point: remaining rows are filled with zeros.
    """
    n = lam.shape[0]
    D = np.empty((iters + 1, n))
    for i in range(n):
        D[0, i] = d0[i]

    for k in range(iters):
        drv = k - 1 if k >= 1 else 0  # driving row: d_{k-1}, or d_0 for the first step
        drv_max = 0.0
        den = 0.0
        for j in range(n):
            a = abs(D[drv, j])
            if a > drv_max:
                drv_max = a
            den += lam[j] * D[drv, j] * D[drv, j]
        # An exactly zero row is a fixed point; a row under the underflow
        # threshold has subnormal squares and is numerically dead. Flush both.
        if den == 0.0 or drv_max < NORM_UNDERFLOW:
            for kk in range(k + 1, iters + 1):
                for i in range(n):
                    D[kk, i] = 0.0
            break
        for i in range(n):
            num = 0.0
            for j in range(n):
                num += (lam[j] - lam[i]) * D[drv, j] * D[drv, j]
            D[k + 1, i] = D[k, i] * (num / den)

    return D


def _mode_sums(lam, D):
    """S[k, i] = sum_j (lam_j - lam_i) * D[k, j]^2 (sign decides the mode)."""
    m, n = D.shape
    S = np.empty((m, n))
    for k in range(m):
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += (lam[j] - lam[i]) * D[k, j] * D[k, j]
            S[k, i] = acc
    return S


# Dispatched names: jitted when numba is active, the plain functions otherwise.
jacobi_eigh = _jit(_jacobi_eigh)
descent_iterate = _jit(_descent_iterate)
coeff_multiplier = _jit(_coeff_multiplier)
coeff_simulate = _jit(_coeff_simulate)
mode_sums = _jit(_mode_sums)

# Pure-Python originals kept for the benchmark and the parity tests.
PY_IMPLS = {
    "jacobi_eigh": _jacobi_eigh,
    "descent_iterate": _descent_iterate,
    "coeff_multiplier": _coeff_multiplier,
    "coeff_simulate": _coeff_simulate,
    "mode_sums": _mode_sums,
}
