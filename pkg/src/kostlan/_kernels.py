"""Compiled hot loops.

Everything here is called inside Monte Carlo loops (root finding at degrees
up to a few thousand, O(n^2) energy sums), so these functions are compiled
with numba when it is available and fall back to slower pure-Python versions
otherwise.  All kernels are deterministic: no RNG, fixed iteration order.
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


@njit(cache=True)
def eval_normalized_pair(wc, wrev, z):
    """Evaluate (fhat(z), Dfhat(z)) for one point.

    `wc` are the weighted coefficients a_j * sqrt(binom(n, j)), `wrev` the
    reversed vector.  Points with |z| > 1 are evaluated through the reversed
    polynomial at u = 1/z so Horner intermediates never exceed sum(|wc|);
    the (1+|z|^2)-power normalization is applied as a separate exponent in
    log space.  Valid while max |wc| is representable (degree <= ~1700).
    """
    n = wc.shape[0] - 1
    if n == 0:
        return wc[0], 0.0j
    az = abs(z)
    sqn = np.sqrt(float(n))
    if az <= 1.0:
        p = wc[n]
        dp = 0.0j
        for j in range(n - 1, -1, -1):
            dp = dp * z + p
            p = p * z + wc[j]
        L = np.log1p(az * az)
        fh = p * np.exp(-0.5 * n * L)
        dfh = dp * np.exp(-(0.5 * n - 1.0) * L) / sqn
        return fh, dfh
    u = 1.0 / z
    g = wrev[n]
    dg = 0.0j
    for j in range(n - 1, -1, -1):
        dg = dg * u + g
        g = g * u + wrev[j]
    au = abs(u)
    L = np.log1p(au * au)
    gh = g * np.exp(-0.5 * n * L)
    dgh = dg * np.exp(-(0.5 * n - 1.0) * L) / sqn
    # fhat(z) = phase^n * ghat(u);  Dfhat(z) = phase^(n-1) *
    #   (sqrt(n) (1+|u|^2) ghat(u) - u Dghat(u)) / |u|
    ang = np.angle(z)
    phn = np.exp(1j * n * ang)
    phn1 = np.exp(1j * (n - 1) * ang)
    fh = phn * gh
    dfh = phn1 * (sqn * (1.0 + au * au) * gh - u * dgh) / au
    return fh, dfh


@njit(cache=True)
def eval_normalized_many(wc, wrev, zs):
    out_f = np.empty(zs.shape[0], np.complex128)
    out_df = np.empty(zs.shape[0], np.complex128)
    for k in range(zs.shape[0]):
        f, df = eval_normalized_pair(wc, wrev, zs[k])
        out_f[k] = f
        out_df[k] = df
    return out_f, out_df


@njit(cache=True)
def newton_ratio(wc, wrev, z):
    """f(z)/f'(z) computed overflow-free for any finite z.

    For |z| <= 1 this is the plain Horner ratio p/dp; for |z| > 1 it is
    z*g(u)/(n*g(u) - u*g'(u)) with u = 1/z through the reversed
    coefficients, so intermediates stay bounded by n*sum|wc|.
    Returns (ratio, derivative_was_zero).
    """
    n = wc.shape[0] - 1
    az = abs(z)
    if az <= 1.0:
        p = wc[n]
        dp = 0.0j
        for j in range(n - 1, -1, -1):
            dp = dp * z + p
            p = p * z + wc[j]
        if dp == 0.0j:
            return 0.0j, True
        return p / dp, False
    u = 1.0 / z
    g = wrev[n]
    dg = 0.0j
    for j in range(n - 1, -1, -1):
        dg = dg * u + g
        g = g * u + wrev[j]
    den = n * g - u * dg
    if den == 0.0j:
        return 0.0j, True
    return z * (g / den), False


@njit(cache=True)
def aberth_sweeps(wc, wrev, z0, tol, max_sweeps):
    """Aberth-Ehrlich simultaneous iteration on all roots.

    Converged roots are frozen; the sweep order is fixed, so the result is
    a deterministic function of the inputs.  Returns (roots, converged
    flags, sweeps used).
    """
    n = z0.shape[0]
    z = z0.copy()
    conv = np.zeros(n, np.bool_)
    w = np.zeros(n, np.complex128)
    sweeps = 0
    for _ in range(max_sweeps):
        sweeps += 1
        active = False
        for k in range(n):
            if conv[k]:
                continue
            ratio, degenerate = newton_ratio(wc, wrev, z[k])
            if degenerate:
                z[k] = z[k] * (1.0 + 1e-8) + 1e-8
                w[k] = 0.0j
                active = True
                continue
            w[k] = ratio
        for k in range(n):
            if conv[k]:
                continue
            s = 0.0j
            for j in range(n):
                if j != k:
                    dz = z[k] - z[j]
                    if dz != 0.0j:
                        s += 1.0 / dz
            denom = 1.0 - w[k] * s
            if denom == 0.0j:
                corr = w[k]
            else:
                corr = w[k] / denom
            z[k] = z[k] - corr
            if abs(corr) <= tol * max(1.0, abs(z[k])):
                conv[k] = True
            else:
                active = True
        if not active:
            break
    return z, conv, sweeps


@njit(cache=True)
def newton_polish(wc, wrev, z0, tol, max_steps):
    """Per-root Newton refinement (no Aberth coupling)."""
    n = z0.shape[0]
    z = z0.copy()
    steps = np.zeros(n, np.int64)
    for k in range(n):
        for _ in range(max_steps):
            corr, degenerate = newton_ratio(wc, wrev, z[k])
            if degenerate:
                break
            z[k] = z[k] - corr
            steps[k] += 1
            if abs(corr) <= tol * max(1.0, abs(z[k])):
                break
    return z, steps


@njit(cache=True)
def log_energy_cartesian(X):
    """-sum_{i != j} log ||x_i - x_j|| with Kahan-compensated accumulation.

    The i != j double sum counts each unordered pair twice, which is the
    same as summing -log(d^2) over i < j.  Also returns the closest pair
    for coincidence diagnostics.
    """
    n = X.shape[0]
    total = 0.0
    comp = 0.0
    mind2 = np.inf
    mi = -1
    mj = -1
    for i in range(n):
        for j in range(i + 1, n):
            dx = X[i, 0] - X[j, 0]
            dy = X[i, 1] - X[j, 1]
            dz = X[i, 2] - X[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if d2 < mind2:
                mind2 = d2
                mi = i
                mj = j
            y = -np.log(d2) - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total, mind2, mi, mj


@njit(cache=True)
def log_energy_delta(X, T):
    """E(T) - E(X) without forming either energy.

    Evaluates -sum_{i<j} log1p((d_T^2 - d_X^2)/d_X^2) with the squared
    distance difference assembled from exact coordinate displacements
    (2 v.w + w.w with w = displacement difference), so descent decisions
    stay resolvable even when |E(T) - E(X)| is billions of ulps below
    |E|.  Returns +inf when T brings a pair to (or past) coincidence.
    """
    n = X.shape[0]
    total = 0.0
    comp = 0.0
    for i in range(n):
        wxi = T[i, 0] - X[i, 0]
        wyi = T[i, 1] - X[i, 1]
        wzi = T[i, 2] - X[i, 2]
        for j in range(i + 1, n):
            vx = X[i, 0] - X[j, 0]
            vy = X[i, 1] - X[j, 1]
            vz = X[i, 2] - X[j, 2]
            wx = wxi - (T[j, 0] - X[j, 0])
            wy = wyi - (T[j, 1] - X[j, 1])
            wz = wzi - (T[j, 2] - X[j, 2])
            den = vx * vx + vy * vy + vz * vz
            num = 2.0 * (vx * wx + vy * wy + vz * wz) + wx * wx + wy * wy + wz * wz
            r = num / den
            if r <= -1.0:
                return np.inf
            y = -np.log1p(r) - comp
            t = total + y
            comp = (t - total) - y
            total = t
    return total


@njit(cache=True)
def log_energy_gradient_cartesian(X):
    """Ambient-space gradient of the pairwise log energy, tangent-projected.

    dE/dx_i = -2 sum_{j != i} (x_i - x_j)/||x_i - x_j||^2, then the radial
    component is removed at each point.
    """
    n = X.shape[0]
    G = np.zeros((n, 3))
    for i in range(n):
        gx = 0.0
        gy = 0.0
        gz = 0.0
        for j in range(n):
            if j == i:
                continue
            dx = X[i, 0] - X[j, 0]
            dy = X[i, 1] - X[j, 1]
            dz = X[i, 2] - X[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            gx -= 2.0 * dx / d2
            gy -= 2.0 * dy / d2
            gz -= 2.0 * dz / d2
        dot = gx * X[i, 0] + gy * X[i, 1] + gz * X[i, 2]
        G[i, 0] = gx - dot * X[i, 0]
        G[i, 1] = gy - dot * X[i, 1]
        G[i, 2] = gz - dot * X[i, 2]
    return G


@njit(cache=True)
def count_separation_pairs(X, d_lo, d_hi):
    """Ordered pairs with spherical (chordal) separation in [d_lo, d_hi)."""
    n = X.shape[0]
    lo2 = d_lo * d_lo
    hi2 = d_hi * d_hi
    count = 0
    for i in range(n):
        for j in range(i + 1, n):
            dx = X[i, 0] - X[j, 0]
            dy = X[i, 1] - X[j, 1]
            dz = X[i, 2] - X[j, 2]
            d2 = dx * dx + dy * dy + dz * dz
            if lo2 <= d2 < hi2:
                count += 1
    return 2 * count
