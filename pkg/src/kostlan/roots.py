"""Root finding for sampled elliptic polynomials at degrees into the thousands.

The default solver is Aberth-Ehrlich simultaneous iteration: O(n^2) per
sweep with small constants, which is what keeps degree-2000 solves viable
inside a Monte Carlo loop (a dense companion eigensolve at that size is the
bottleneck).  Newton corrections are evaluated through the normalized pair
(fhat, Dfhat), so nothing overflows even when |f| ~ (1+|z|^2)^{n/2} is
astronomically large.

Initial guesses sit on circles whose radii come from the Newton polygon of
the weighted coefficients (upper convex hull of (j, log|w_j|)); under the
binomial weighting those radii concentrate near |z| = 1, where the zeros
live, so convergence is fast.  A companion-matrix eigensolve backs up the
iteration for degrees <= 500 if it ever stalls.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polymodel
from ._kernels import aberth_sweeps, newton_polish, newton_ratio
from .polymodel import EllipticPolynomial

__all__ = [
    "RootSet",
    "RootFindingError",
    "find_roots",
    "refine_root",
    "validate_roots",
    "residual_tolerance",
]

# condition_flags codes
FLAG_CONVERGED = 0
FLAG_POLISHED = 1
FLAG_COMPANION = 2
FLAG_UNCONVERGED = 3

COMPANION_MAX_DEGREE = 500
GROSS_RESIDUAL = 1e-6


def residual_tolerance(n: int) -> float:
    """Validation bound on |fhat(root)|: 1e-10 at n=200, scaled with the
    n^(3/2) eps growth of the evaluation noise floor at higher degree."""
    return 1e-10 * max(1.0, n / 200.0)


class RootFindingError(RuntimeError):
    pass


@dataclass(frozen=True)
class RootSet:
    """All n roots of one polynomial, sorted lexicographically by (re, im).

    `residuals[j]` is |fhat(root_j)|, the natural scale-free backward error;
    `condition_flags[j]` records how each root was obtained (0 converged in
    the simultaneous iteration, 1 needed Newton polish, 2 came from the
    companion-matrix fallback, 3 unconverged).
    """

    roots: np.ndarray
    residuals: np.ndarray
    condition_flags: np.ndarray
    sweeps: int

    def __post_init__(self):
        for arr in (self.roots, self.residuals, self.condition_flags):
            arr.setflags(write=False)

    def __len__(self):
        return len(self.roots)

    @property
    def max_residual(self) -> float:
        return float(np.max(self.residuals)) if len(self.residuals) else 0.0


def initial_guesses(p: EllipticPolynomial) -> np.ndarray:
    """Newton-polygon radii with golden-angle phases (deterministic)."""
    n = p.degree
    with np.errstate(divide="ignore"):
        logw = p.log_binom + np.log(np.abs(p.raw_coeffs))
    logw[~np.isfinite(logw)] = -745.0
    hull = _upper_hull(logw)
    radii = np.empty(n)
    for (j1, v1), (j2, v2) in zip(hull[:-1], hull[1:]):
        # roots j1..j2-1 at radius exp((v1 - v2)/(j2 - j1)): the classic
        # Newton-polygon estimate |w_{j1}/w_{j2}|^{1/(j2-j1)}
        r = np.exp((v1 - v2) / (j2 - j1))
        radii[j1:j2] = min(max(r, 1e-6), 1e6)
    golden = np.pi * (3.0 - np.sqrt(5.0))
    k = np.arange(n)
    angles = golden * k + 0.4
    return radii * np.exp(1j * angles)


def _upper_hull(vals: np.ndarray) -> list[tuple[int, float]]:
    pts: list[tuple[int, float]] = []
    for j, v in enumerate(vals):
        while len(pts) >= 2:
            (j1, v1), (j2, v2) = pts[-2], pts[-1]
            if (v2 - v1) * (j - j1) <= (v - v1) * (j2 - j1):
                pts.pop()
            else:
                break
        pts.append((j, float(v)))
    return pts


def find_roots(
    p: EllipticPolynomial,
    tol: float = 1e-13,
    max_sweeps: int = 160,
    polish: bool = True,
) -> RootSet:
    """Compute all n roots of a degree-n polynomial with |a_n| != 0.

    Multiple roots occur with probability zero for the Gaussian ensemble and
    are treated as distinct nearby roots.  Raises RootFindingError (naming
    the sampling seed when known, for replay) if residual validation fails
    even after the companion fallback.
    """
    n = p.degree
    if n < 1:
        raise ValueError("root finding needs degree >= 1")
    if p.raw_coeffs[-1] == 0:
        raise RootFindingError("zero leading coefficient")
    if not np.all(np.isfinite(p.weighted_coeffs)):
        seed = f" (seed_info={p.seed_info})" if p.seed_info else ""
        raise RootFindingError(
            f"weighted coefficients not representable at degree {n} "
            "(binomial weights overflow doubles past degree ~2050); the "
            f"solver supports the representable range{seed}"
        )
    wc = p.weighted_coeffs
    wrev = p._reversed_weighted
    z0 = initial_guesses(p)
    z, conv, sweeps = aberth_sweeps(wc, wrev, z0, tol, max_sweeps)
    flags = np.where(conv, FLAG_CONVERGED, FLAG_UNCONVERGED).astype(np.int8)

    if polish:
        z, steps = newton_polish(wc, wrev, z, 1e-14, 3)
        flags = np.where((steps > 1) & (flags == FLAG_CONVERGED), FLAG_POLISHED, flags)

    res = np.abs(polymodel.eval_pair(p, z)[0])
    bad = ~conv | (res > residual_tolerance(n))
    if np.any(bad) and n <= COMPANION_MAX_DEGREE:
        z, flags = _companion_fallback(p, z, bad, flags)
        z, _ = newton_polish(wc, wrev, z, 1e-14, 3)
        res = np.abs(polymodel.eval_pair(p, z)[0])

    if not np.all(np.isfinite(res)) or res.max() > GROSS_RESIDUAL:
        seed = f" (seed_info={p.seed_info})" if p.seed_info else ""
        raise RootFindingError(
            f"root iteration did not converge at degree {n}: "
            f"max residual {res.max():.3e}{seed}"
        )

    order = np.lexsort((z.imag, z.real))
    return RootSet(
        roots=z[order],
        residuals=res[order],
        condition_flags=flags[order],
        sweeps=sweeps,
    )


def _companion_fallback(p, z, bad, flags):
    try:
        with np.errstate(invalid="ignore", divide="ignore"):
            eig = np.roots(p.weighted_coeffs[::-1])
    except (np.linalg.LinAlgError, ValueError):
        return z, flags
    if len(eig) != p.degree:  # leading/trailing degeneracies collapsed
        return z, flags
    # match each bad iterate to its nearest unclaimed eigenvalue
    taken = np.zeros(len(eig), bool)
    z = z.copy()
    flags = flags.copy()
    for k in np.nonzero(bad)[0]:
        d = np.abs(eig - z[k])
        d[taken] = np.inf
        pick = int(np.argmin(d))
        taken[pick] = True
        z[k] = eig[pick]
        flags[k] = FLAG_COMPANION
    return z, flags


def refine_root(p: EllipticPolynomial, z0: complex, max_steps: int = 50) -> complex:
    """Newton iteration from z0 until |step| < 1e-14 max(1, |z|)."""
    z = complex(z0)
    for _ in range(max_steps):
        step, degenerate = newton_ratio(p.weighted_coeffs, p._reversed_weighted, z)
        if degenerate:
            raise RootFindingError(f"zero derivative at {z}")
        z = z - step
        if abs(step) < 1e-14 * max(1.0, abs(z)):
            return complex(z)
        if not np.isfinite(z.real) or not np.isfinite(z.imag) or abs(z) > 1e12:
            break
    raise RootFindingError(f"Newton refinement diverged from {z0}")


@dataclass(frozen=True)
class RootDiagnostics:
    vieta_sum_error: float
    vieta_sum_scale: float
    vieta_logprod_error: float
    vieta_argprod_error: float
    max_residual: float
    passed: bool


def validate_roots(p: EllipticPolynomial, rs: RootSet) -> RootDiagnostics:
    """Vieta checks: sum of roots and (log-modulus + argument) of product.

    sum zeta_j = -w_{n-1}/w_n and prod zeta_j = (-1)^n w_0/w_n; the product
    is compared in log-modulus plus argument form since it can overflow.
    """
    w = p.weighted_coeffs
    n = p.degree
    zsum = np.sum(rs.roots)
    target = -w[-2] / w[-1]
    sum_scale = 1.0 + float(np.sum(np.abs(rs.roots)))
    sum_err = abs(zsum - target)

    logprod = float(np.sum(np.log(np.abs(rs.roots))))
    # end weights are 1, so w_0/w_n = a_0/a_n
    logprod_target = float(np.log(abs(w[0])) - np.log(abs(w[-1])))
    logprod_err = abs(logprod - logprod_target)

    arg = np.exp(1j * np.sum(np.angle(rs.roots)))
    arg_target = np.exp(1j * (np.angle(w[0] / w[-1]) + np.pi * (n % 2)))
    arg_err = abs(arg - arg_target)

    passed = (
        sum_err <= 1e-8 * sum_scale
        and logprod_err <= 1e-8 * max(n, 1)
        and arg_err <= 1e-6 * max(n, 1)
        and rs.max_residual <= residual_tolerance(n)
    )
    return RootDiagnostics(
        vieta_sum_error=sum_err,
        vieta_sum_scale=sum_scale,
        vieta_logprod_error=logprod_err,
        vieta_argprod_error=arg_err,
        max_residual=rs.max_residual,
        passed=bool(passed),
    )
