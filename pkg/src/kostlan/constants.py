"""Limiting variance constants of the root log-energy, by quadrature.

The variance of the energy splits as c* = c1 + c2 - 2 c3 with

    c1 = zeta(3)/4,
    c3 = pi^2/24 - J1/4,       J1 = int_0^inf Psi(s/(e^s - 1)) ds,
    c2 = (pi^2/6 + gamma (gamma - 2) + I1 + I2 + I3)/4,

where Psi(x) = sum_{j>=2} x^j / (j^2 (j-1)) and I1..I3 are explicit
integrals of the conditional Laguerre-expansion kernels

    sigma^2(s) = 1 - s/(e^s - 1),
    theta(s)   = e^{-s/2} (1 - s - e^{-s}) / (1 - (1+s) e^{-s}).

All integrands are analytic but cancel badly near s = 0 (sigma^2 ~ s/2 is
a difference of two O(1) terms); below SERIES_SWITCH they are evaluated
from power series instead, as is Psi near its x -> 1 endpoint, where the
raw series would need ~1/(1-x) terms (the dilogarithm reflection supplies
the closed form there).

Computed reference values (40-digit verification, four independent routes
for c3):

    c1 = 0.30051422579,  c2 = 0.47609181433,  c3 = 0.34293002697,
    c* = 0.09074598618,  J1 = 0.27321395898,
    I1 = -0.570753576,   I2 = 1.536941049,    I3 = 0.114499124.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.special import eval_laguerre

from .polymodel import ComplexGaussianStream, complex_normals

__all__ = [
    "ConstantsReport",
    "AppendixCheck",
    "chaos_coefficients",
    "c1",
    "j1_and_c3",
    "i_integrals",
    "c2_and_cstar",
    "appendix_bounds",
    "laguerre_orthogonality_check",
    "compute_report",
    "EULER_GAMMA",
    "ZETA3",
]

# compile-time constants to 20 digits: no runtime special-function calls
# are needed for these
EULER_GAMMA = 0.57721566490153286061
ZETA3 = 1.20205690315959428540
PI2_6 = math.pi**2 / 6.0

BETA0 = 1.0 - EULER_GAMMA
BETA1 = EULER_GAMMA - 2.0

# below this, sigma^2 / theta / x(s) switch to power series: s/(e^s - 1)
# approaches 1 with an O(s) correction that direct expm1 forms resolve to
# only ~eps/s relative accuracy
SERIES_SWITCH = 1e-2

# integrands carry an e^{-s} (or faster) envelope; beyond this they are
# below 1e-18 and the remainder is accounted into the error estimate
UPPER_CUT = 60.0
TAIL_BOUND = 1e-18


def chaos_coefficients(j_max: int):
    """Laguerre expansion coefficients of log x and x log x in
    L^2(R>=0, e^{-x} dx): alpha_0 = -gamma, alpha_j = -1/j;
    beta_0 = 1-gamma, beta_1 = gamma-2, beta_j = 1/(j(j-1))."""
    if j_max < 2:
        raise ValueError("j_max >= 2 required")
    j = np.arange(j_max + 1)
    alpha = np.empty(j_max + 1)
    beta = np.empty(j_max + 1)
    alpha[0] = -EULER_GAMMA
    alpha[1:] = -1.0 / j[1:]
    beta[0] = BETA0
    beta[1] = BETA1
    beta[2:] = 1.0 / (j[2:] * (j[2:] - 1.0))
    return alpha, beta


# ---------------------------------------------------------------------------
# special-function helpers (kept local: series + reflection only)


def dilog(x: float) -> float:
    """Li_2(x) for x in [0, 1]: power series for x <= 1/2, the reflection
    Li_2(x) + Li_2(1-x) = pi^2/6 - log(x) log(1-x) above."""
    if x < 0.0 or x > 1.0:
        raise ValueError("dilog implemented on [0, 1]")
    if x == 1.0:
        return PI2_6
    if x > 0.5:
        return PI2_6 - math.log(x) * math.log1p(-x) - dilog(1.0 - x)
    if x == 0.0:
        return 0.0
    total = 0.0
    term = x
    k = 1
    while True:
        add = term / (k * k)
        total += add
        if add < 1e-18 * total:
            return total
        k += 1
        term *= x


def psi_xlogx(x: float) -> float:
    """Psi(x) = sum_{j>=2} x^j/(j^2 (j-1)) = (1-x) log(1-x) + 2x - Li_2(x)."""
    if x == 1.0:
        return 2.0 - PI2_6
    return (1.0 - x) * math.log1p(-x) + 2.0 * x - dilog(x)


def x_of_s(s: float) -> float:
    """s/(e^s - 1), accurate through the removable limit at 0."""
    if s > SERIES_SWITCH:
        return s / math.expm1(s)
    # Bernoulli series 1 - s/2 + s^2/12 - s^4/720 + s^6/30240
    s2 = s * s
    return 1.0 - 0.5 * s + s2 / 12.0 - s2 * s2 / 720.0 + s2 * s2 * s2 / 30240.0


def sigma2_of_s(s: float) -> float:
    """Conditional variance scale 1 - s/(e^s - 1); in (0, 1) for s > 0."""
    if s > SERIES_SWITCH:
        em = math.expm1(s)
        return (em - s) / em
    s2 = s * s
    return 0.5 * s - s2 / 12.0 + s2 * s2 / 720.0 - s2 * s2 * s2 / 30240.0


def theta_of_s(s: float) -> float:
    """Conditional correlation e^{-s/2}(1-s-e^{-s})/(1-(1+s)e^{-s});
    tends to -1 at 0+ and stays in (-1, 0) for s > 0."""
    if s > SERIES_SWITCH:
        num = -(s + math.expm1(-s))  # 1 - s - e^{-s}
        den = -math.expm1(-s) - s * math.exp(-s)  # 1 - (1+s) e^{-s}
        return math.exp(-0.5 * s) * num / den
    # both sides start at s^2; expanded ratios (coefficients of s^k/k! forms)
    num = -(0.5 - s / 6.0 + s * s / 24.0 - s**3 / 120.0 + s**4 / 720.0)
    den = 0.5 - s / 3.0 + s * s / 8.0 - s**3 / 30.0 + s**4 / 144.0
    return math.exp(-0.5 * s) * num / den


def _quad_split(fn, tol: float):
    v1, e1 = integrate.quad(fn, 0.0, 1.0, epsabs=tol, epsrel=tol, limit=400)
    v2, e2 = integrate.quad(fn, 1.0, UPPER_CUT, epsabs=tol, epsrel=tol, limit=400)
    return v1 + v2, e1 + e2 + TAIL_BOUND


# ---------------------------------------------------------------------------
# the constants


def zeta3_series(n_terms: int = 20000) -> float:
    """sum j^-3 with an Euler-Maclaurin tail; error ~ n_terms^-6."""
    j = np.arange(1, n_terms + 1, dtype=float)
    head = float(np.sum(1.0 / j**3))
    n = float(n_terms)
    tail = 0.5 / n**2 - 0.5 / n**3 + 0.25 / n**4
    return head + tail


def c1(tol: float = 1e-12):
    """c1 = zeta(3)/4.

    Returns (value, err, integral_form): the series sum (to 1e-14) and the
    independent covariance-integral route (1/4) int_0^inf Li_2(e^{-s}) ds,
    which must agree to quadrature accuracy.
    """
    series = zeta3_series() / 4.0
    integral, ierr = _quad_split(lambda s: 0.25 * dilog(math.exp(-s)), tol)
    return series, abs(series - ZETA3 / 4.0) + 1e-15, integral


def j1_and_c3(tol: float = 1e-12):
    """J1 = int_0^inf Psi(s/(e^s-1)) ds and c3 = pi^2/24 - J1/4.

    Returns (j1, c3, err).  The quadrature is split at s=1; the integrand
    tends to Psi(1) = 2 - pi^2/6 at 0+ and decays like x^2/4 ~ s^2 e^{-2s}.
    """
    j1, err = _quad_split(lambda s: psi_xlogx(x_of_s(s)), tol)
    c3 = math.pi**2 / 24.0 - j1 / 4.0
    return j1, c3, err / 4.0


def _i3_inner(t: float, j_max: int = 12000) -> tuple[float, float]:
    """sum_{j>=2} beta_j^2 t^j for t = theta^2 in [0, 1), with a combined
    geometric / polynomial tail bound on the truncation."""
    if t <= 0.0:
        return 0.0, 0.0
    j = _i3_inner._j
    bj2 = _i3_inner._bj2
    with np.errstate(under="ignore"):
        total = float(np.dot(bj2, np.power(t, j)))
    tail_geom = bj2[-1] * t ** (j_max + 1) / (1.0 - t) if t < 1.0 else np.inf
    tail_poly = 1.0 / (3.0 * (j_max - 1) ** 3)
    return total, min(tail_geom, tail_poly)


_i3_inner._j = np.arange(2, 12001, dtype=float)
_i3_inner._bj2 = 1.0 / (_i3_inner._j * (_i3_inner._j - 1.0)) ** 2


def i_integrals(tol: float = 1e-12):
    """The three explicit integrals entering c2.

    Common prefactor sigma^4(s)/(1 - e^{-s}); I1 subtracts beta_0^2 so the
    integrand vanishes at infinity, I2 weights by theta^2, I3 sums the
    j >= 2 chaos tail with |theta| < 1 giving a geometric tail bound.
    Returns ((I1, I2, I3), (err1, err2, err3)).
    """

    def prefactor(s):
        sig2 = sigma2_of_s(s)
        return sig2 * sig2 / (-math.expm1(-s)) if s > 0 else 0.0

    def f1(s):
        if s == 0.0:
            return -BETA0 * BETA0
        sig2 = sigma2_of_s(s)
        return prefactor(s) * (BETA0 + math.log(sig2)) ** 2 - BETA0 * BETA0

    def f2(s):
        if s == 0.0:
            return 0.0
        sig2 = sigma2_of_s(s)
        th = theta_of_s(s)
        return prefactor(s) * (BETA1 - math.log(sig2)) ** 2 * th * th

    inner_err = [0.0]

    def f3(s):
        if s == 0.0:
            return 0.0
        th = theta_of_s(s)
        val, bound = _i3_inner(th * th)
        inner_err[0] = max(inner_err[0], bound)
        return prefactor(s) * val

    i1v, e1 = _quad_split(f1, tol)
    i2v, e2 = _quad_split(f2, tol)
    i3v, e3 = _quad_split(f3, tol)
    return (i1v, i2v, i3v), (e1, e2, e3 + inner_err[0])


def c2_and_cstar(tol: float = 1e-12):
    """c2 = (pi^2/6 + gamma(gamma-2) + I1 + I2 + I3)/4 and
    c* = c1 + c2 - 2 c3.  Returns (c2, cstar, err)."""
    (i1v, i2v, i3v), errs = i_integrals(tol)
    c2 = (PI2_6 + EULER_GAMMA * (EULER_GAMMA - 2.0) + i1v + i2v + i3v) / 4.0
    c1v, c1err, _ = c1(tol)
    _, c3v, c3err = j1_and_c3(tol)
    cstar = c1v + c2 - 2.0 * c3v
    err = sum(errs) / 4.0 + c1err + 2.0 * c3err
    return c2, cstar, err


# ---------------------------------------------------------------------------
# appendix bound checks


def _h2(s: float) -> float:
    if s == 0.0:
        return 0.0
    sig2 = sigma2_of_s(s)
    th = theta_of_s(s)
    pre = sig2 * sig2 / (-math.expm1(-s))
    return pre * (BETA1 + 1.5 * x_of_s(s)) ** 2 * th * th


def _h1(s: float) -> float:
    if s == 0.0:
        return 0.0
    x = x_of_s(s)
    sig2 = sigma2_of_s(s)
    pre = sig2 * sig2 / (-math.expm1(-s))
    return pre * (-2.0 * BETA0 * (x + x * x) + x * x)


def _h2_closed_form_printed() -> float:
    # the published closed form, transcribed verbatim; see appendix_bounds
    g = EULER_GAMMA
    return (
        math.pi**2 / 2.0 * (1.0 / 12.0 + math.pi**2 / 10.0 - g / 3.0 * (1.0 - g))
        - 3.0 * ZETA3 * (0.25 + g)
        - g / 2.0 * (3.0 - g)
        - 19.0 / 16.0
    )


def _h1_closed_form() -> float:
    g = EULER_GAMMA
    return (
        math.pi**2 * (0.5 - 2.0 * g / 3.0 + math.pi**2 / 15.0 * (1.0 - 2.0 * g))
        + ZETA3 * (18.0 * g - 11.0)
        - g / 2.0
        + 5.0 / 12.0
    )


@dataclass(frozen=True)
class AppendixCheck:
    name: str
    value: float
    target: float
    kind: str  # 'lower', 'upper', 'match_1e-8'
    passed: bool


def appendix_bounds(tol: float = 1e-12) -> list[AppendixCheck]:
    """Numeric verification of the positivity-of-variance bound chain.

    Checks, in order: int h2 > 1.408 and against the published closed form
    at 1e-8; h2(1) <= 0.06; int h1 > -0.472 and against its closed form;
    4(c2 - c1) >= 0.1 and c2 - c1 > 0.025.

    The published closed form for int h2 evaluates to ~0.01045 while the
    quadrature (and the published threshold 1.408 itself) give ~1.40892,
    so the match check records a failure; the h1 closed form agrees to
    machine precision, which pins the transcription conventions.
    """
    int_h2, _ = _quad_split(_h2, tol)
    int_h1, _ = _quad_split(_h1, tol)
    h2_closed = _h2_closed_form_printed()
    h1_closed = _h1_closed_form()
    h2_at_1 = _h2(1.0)
    c2v, _, _ = c2_and_cstar(tol)
    c1v = ZETA3 / 4.0
    checks = [
        AppendixCheck("int_h2_exceeds_threshold", int_h2, 1.408, "lower", int_h2 > 1.408),
        AppendixCheck(
            "int_h2_matches_closed_form",
            int_h2,
            h2_closed,
            "match_1e-8",
            abs(int_h2 - h2_closed) <= 1e-8,
        ),
        AppendixCheck("h2_at_1_below_threshold", h2_at_1, 0.06, "upper", h2_at_1 <= 0.06),
        AppendixCheck("int_h1_exceeds_threshold", int_h1, -0.472, "lower", int_h1 > -0.472),
        AppendixCheck(
            "int_h1_matches_closed_form",
            int_h1,
            h1_closed,
            "match_1e-8",
            abs(int_h1 - h1_closed) <= 1e-8,
        ),
        AppendixCheck(
            "four_c2_minus_c1", 4.0 * (c2v - c1v), 0.1, "lower", 4.0 * (c2v - c1v) >= 0.1
        ),
        AppendixCheck("c2_minus_c1", c2v - c1v, 0.025, "lower", c2v - c1v > 0.025),
    ]
    # second assembly of positivity: Cov <= sqrt(Var Var) in the limit gives
    # c3 <= sqrt(c1 c2), so c* >= (sqrt(c2) - sqrt(c1))^2 > 0 follows from
    # c2 != c1 alone
    floor = (math.sqrt(c2v) - math.sqrt(c1v)) ** 2
    _, cstar, _ = c2_and_cstar(tol)
    checks.append(
        AppendixCheck(
            "c_star_cauchy_schwarz_floor",
            cstar,
            floor,
            "lower",
            cstar >= floor > 0.0,
        )
    )
    return checks


# ---------------------------------------------------------------------------
# Laguerre orthogonality (Monte Carlo)


def laguerre_orthogonality_check(
    theta: float,
    j_max: int,
    samples: int = 200_000,
    stream: ComplexGaussianStream | None = None,
):
    """E[L_m(|Z1|^2) L_k(|Z2|^2)] = |theta|^{2m} delta_{mk} for unit complex
    Gaussians with E[Z1 conj(Z2)] = theta.

    Returns (estimates, targets, ses, worst_sigmas) over m, k <= j_max.
    """
    if abs(theta) > 1.0:
        raise ValueError("|theta| <= 1 required")
    if stream is None:
        stream = ComplexGaussianStream(0, 0)
    rng = stream.generator()
    xi1 = complex_normals(rng, samples)
    if abs(theta) == 1.0:
        z2 = np.conj(theta) * xi1
    else:
        xi2 = complex_normals(rng, samples)
        z2 = np.conj(theta) * xi1 + math.sqrt(1.0 - abs(theta) ** 2) * xi2
    a1 = np.abs(xi1) ** 2
    a2 = np.abs(z2) ** 2
    L1 = np.stack([eval_laguerre(m, a1) for m in range(j_max + 1)])
    L2 = np.stack([eval_laguerre(m, a2) for m in range(j_max + 1)])
    est = np.empty((j_max + 1, j_max + 1))
    ses = np.empty_like(est)
    targets = np.zeros_like(est)
    worst = 0.0
    for m in range(j_max + 1):
        for k in range(j_max + 1):
            prod = L1[m] * L2[k]
            est[m, k] = prod.mean()
            ses[m, k] = prod.std(ddof=1) / math.sqrt(samples)
            if m == k:
                targets[m, k] = abs(theta) ** (2 * m)
            dev = abs(est[m, k] - targets[m, k]) / max(ses[m, k], 1e-300)
            worst = max(worst, dev)
    return est, targets, ses, worst


# ---------------------------------------------------------------------------
# full report


@dataclass(frozen=True)
class ConstantsReport:
    alpha: np.ndarray
    beta: np.ndarray
    j1: float
    j1_err: float
    i1: float
    i2: float
    i3: float
    i_errs: tuple
    c1: float
    c2: float
    c3: float
    c_star: float
    err: float
    appendix_checks: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "alpha": list(self.alpha),
            "beta": list(self.beta),
            "J1": {"value": self.j1, "err": self.j1_err},
            "I1": {"value": self.i1, "err": self.i_errs[0]},
            "I2": {"value": self.i2, "err": self.i_errs[1]},
            "I3": {"value": self.i3, "err": self.i_errs[2]},
            "c1": self.c1,
            "c2": self.c2,
            "c3": self.c3,
            "c_star": {"value": self.c_star, "err": self.err},
            "appendix_checks": [
                {
                    "name": c.name,
                    "value": c.value,
                    "target": c.target,
                    "kind": c.kind,
                    "passed": c.passed,
                }
                for c in self.appendix_checks
            ],
        }

    def table(self) -> str:
        rows = [
            ("c1", self.c1),
            ("c2", self.c2),
            ("c3", self.c3),
            ("c*", self.c_star),
            ("J1", self.j1),
            ("I1", self.i1),
            ("I2", self.i2),
            ("I3", self.i3),
        ]
        lines = [f"{name:>4s}  {val: .10f}" for name, val in rows]
        for c in self.appendix_checks:
            mark = "pass" if c.passed else "FAIL"
            lines.append(f"{c.name:>28s}  {c.value: .10f}  vs {c.target: .10f}  [{mark}]")
        return "\n".join(lines)


def compute_report(tol: float = 1e-12, j_max: int = 16) -> ConstantsReport:
    """Everything in one pass; c_star is assembled as c1 + c2 - 2 c3 exactly
    from the values reported here."""
    alpha, beta = chaos_coefficients(j_max)
    c1v, c1e, _ = c1(tol)
    j1v, c3v, c3e = j1_and_c3(tol)
    (i1v, i2v, i3v), ierrs = i_integrals(tol)
    c2v = (PI2_6 + EULER_GAMMA * (EULER_GAMMA - 2.0) + i1v + i2v + i3v) / 4.0
    cstar = c1v + c2v - 2.0 * c3v
    return ConstantsReport(
        alpha=alpha,
        beta=beta,
        j1=j1v,
        j1_err=c3e * 4.0,
        i1=i1v,
        i2=i2v,
        i3=i3v,
        i_errs=ierrs,
        c1=c1v,
        c2=c2v,
        c3=c3v,
        c_star=cstar,
        err=c1e + sum(ierrs) / 4.0 + 2.0 * c3e,
        appendix_checks=appendix_bounds(tol),
    )
