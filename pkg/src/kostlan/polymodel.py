"""Random elliptic (Kostlan) polynomials and their normalized evaluation.

The model is the degree-n random polynomial

    f_n(z) = sum_j a_j sqrt(binom(n, j)) z^j,

with i.i.d. standard complex Gaussian coefficients a_j (density e^{-|z|^2}/pi).
Its zero set, pushed to the sphere by stereographic projection, is invariant
in law under sphere isometries.  This module owns coefficient sampling, the
numerically safe evaluation of the normalized forms

    fhat(z)  = f_n(z) / (1+|z|^2)^{n/2}
    Dfhat(z) = f_n'(z) / (sqrt(n) (1+|z|^2)^{n/2-1}),

the covariance kernel (1 + z conj(w))^n, and a truncated planar Gaussian
Taylor series sum_j a_j z^j / sqrt(j!) used as the local scaling reference.

Binomial weights are kept as half-log-gamma differences; binom(1000, 500)
does not fit in a double, its logarithm does.  Evaluation uses Horner on the
weighted coefficients (reversed at u = 1/z for |z| > 1) with the
(1+|z|^2)-power carried as a separate log-space exponent; degrees too large
for representable weighted coefficients switch to a term-wise basis whose
entries are all <= 1 in modulus.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.special import gammaln

from ._kernels import eval_normalized_many

__all__ = [
    "ComplexGaussianStream",
    "EllipticPolynomial",
    "GefTruncation",
    "sample_elliptic",
    "eval_normalized",
    "eval_dnormalized",
    "covariance_kernel",
    "sample_gef",
    "gef_min_order",
]

# Largest degree for which weighted coefficients (and the Horner intermediates
# they imply) stay comfortably inside double range: max_j 0.5*log binom(n, j)
# is about 0.3466*n nats, and exp(620) ~ 1e269 leaves ~39 orders of headroom.
HORNER_DEGREE_LIMIT = 1700

LEADING_COEFF_FLOOR = 1e-300


@dataclass(frozen=True)
class ComplexGaussianStream:
    """Counter-derived source of i.i.d. standard complex Gaussians.

    The pair (master_seed, stream_index) keys a Philox generator, so the
    same pair always reproduces the same sequence and distinct indices give
    statistically independent streams regardless of scheduling.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self) -> np.random.Generator:
        key = np.array(
            [self.master_seed & 0xFFFFFFFFFFFFFFFF, self.stream_index & 0xFFFFFFFFFFFFFFFF],
            dtype=np.uint64,
        )
        return np.random.Generator(np.random.Philox(key=key))

    def child(self, stream_index: int) -> "ComplexGaussianStream":
        return ComplexGaussianStream(self.master_seed, stream_index)


def complex_normals(rng: np.random.Generator, size) -> np.ndarray:
    """Standard complex Gaussians: N(0, 1/2) + i N(0, 1/2), so E|a|^2 = 1."""
    buf = rng.standard_normal(size=(2,) + tuple(np.atleast_1d(size)))
    return (buf[0] + 1j * buf[1]) / np.sqrt(2.0)


@dataclass(frozen=True)
class EllipticPolynomial:
    """One realization of the degree-n elliptic polynomial.

    `log_binom[j]` holds 0.5*log binom(n, j); `weighted_coeffs[j]` equals
    raw_coeffs[j]*exp(log_binom[j]) and the leading weighted coefficient is
    the leading raw one (binom(n, n) = 1).  Immutable and safe to share.
    """

    degree: int
    raw_coeffs: np.ndarray
    weighted_coeffs: np.ndarray
    log_binom: np.ndarray
    seed_info: tuple[int, int] | None = None
    resamples: int = 0

    def __post_init__(self):
        for arr in (self.raw_coeffs, self.weighted_coeffs, self.log_binom):
            arr.setflags(write=False)

    @cached_property
    def _reversed_weighted(self) -> np.ndarray:
        rev = self.weighted_coeffs[::-1].copy()
        rev.setflags(write=False)
        return rev

    @property
    def leading(self) -> complex:
        return complex(self.raw_coeffs[-1])


@lru_cache(maxsize=64)
def _half_log_binom_cached(n: int) -> np.ndarray:
    j = np.arange(n + 1)
    out = 0.5 * (gammaln(n + 1) - gammaln(j + 1) - gammaln(n - j + 1))
    out.setflags(write=False)
    return out


def half_log_binom(n: int) -> np.ndarray:
    return _half_log_binom_cached(n)


def sample_elliptic(n: int, stream: ComplexGaussianStream) -> EllipticPolynomial:
    """Draw one elliptic polynomial of degree n from the given stream.

    A leading coefficient with |a_n| < 1e-300 (probability ~0, but it would
    break root finding) triggers a full redraw from the continuing stream;
    the number of redraws is recorded on the result.
    """
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    rng = stream.generator()
    lb = half_log_binom(n)
    resamples = 0
    while True:
        raw = complex_normals(rng, n + 1)
        if abs(raw[-1]) >= LEADING_COEFF_FLOOR:
            break
        resamples += 1
    with np.errstate(over="ignore"):
        # overflows to inf only beyond HORNER_DEGREE_LIMIT, where evaluation
        # switches to the log-basis path and never touches these entries
        weighted = raw * np.exp(lb)
    return EllipticPolynomial(
        degree=n,
        raw_coeffs=raw,
        weighted_coeffs=weighted,
        log_binom=lb,
        seed_info=(stream.master_seed, stream.stream_index),
        resamples=resamples,
    )


def polynomial_from_weighted(weighted: np.ndarray) -> EllipticPolynomial:
    """Wrap explicit weighted coefficients (tests, constructed examples)."""
    weighted = np.asarray(weighted, dtype=np.complex128)
    n = weighted.shape[0] - 1
    lb = half_log_binom(n)
    with np.errstate(invalid="ignore"):
        raw = weighted * np.exp(-lb)
    return EllipticPolynomial(n, raw, weighted.copy(), lb)


def _eval_pair_big_degree(p: EllipticPolynomial, zs: np.ndarray):
    # Term-wise normalized basis: fhat = sum_j a_j exp(q_j) e^{i j arg z} with
    # q_j = lb_j + j log|z| - (n/2) log1p(|z|^2) <= 0, so no overflow at any
    # degree.  Used only beyond HORNER_DEGREE_LIMIT; O(n) exps per point.
    n = p.degree
    j = np.arange(n + 1)
    fh = np.empty(zs.shape[0], np.complex128)
    dfh = np.empty(zs.shape[0], np.complex128)
    for k, z in enumerate(zs):
        az = abs(z)
        if az == 0.0:
            fh[k] = p.raw_coeffs[0]
            dfh[k] = p.raw_coeffs[1] if n >= 1 else 0.0
            continue
        L = np.log1p(az * az)
        ang = np.angle(z)
        q = p.log_binom + j * np.log(az) - 0.5 * n * L
        fh[k] = np.sum(p.raw_coeffs * np.exp(q + 1j * j * ang))
        qd = (
            p.log_binom[1:]
            + np.log(j[1:])
            + (j[1:] - 1) * np.log(az)
            - 0.5 * np.log(n)
            - (0.5 * n - 1) * L
        )
        dfh[k] = np.sum(p.raw_coeffs[1:] * np.exp(qd + 1j * (j[1:] - 1) * ang))
    return fh, dfh


def eval_pair(p: EllipticPolynomial, z):
    """(fhat(z), Dfhat(z)) for scalar or array z."""
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    if p.degree <= HORNER_DEGREE_LIMIT:
        fh, dfh = eval_normalized_many(p.weighted_coeffs, p._reversed_weighted, zs)
    else:
        fh, dfh = _eval_pair_big_degree(p, zs)
    if np.isscalar(z) or np.ndim(z) == 0:
        return complex(fh[0]), complex(dfh[0])
    return fh, dfh


def eval_normalized(p: EllipticPolynomial, z):
    """fhat(z) = f_n(z)/(1+|z|^2)^{n/2}; unit variance at every point."""
    out = eval_pair(p, z)[0]
    _check_finite(out)
    return out


def eval_dnormalized(p: EllipticPolynomial, z):
    """Dfhat(z) = f_n'(z)/(sqrt(n) (1+|z|^2)^{n/2-1})."""
    out = eval_pair(p, z)[1]
    _check_finite(out)
    return out


def _check_finite(values):
    arr = np.atleast_1d(np.asarray(values))
    if not np.all(np.isfinite(arr)):
        raise FloatingPointError(
            "non-finite value in normalized polynomial evaluation "
            "(intermediate overflow would be an implementation fault)"
        )


def eval_raw(p: EllipticPolynomial, z):
    """Unnormalized (f_n(z), f_n'(z)); may overflow at large degree by design."""
    zs = np.atleast_1d(np.asarray(z, dtype=np.complex128))
    n = p.degree
    fh, dfh = eval_pair(p, zs)
    L = np.log1p(np.abs(zs) ** 2)
    f = fh * np.exp(0.5 * n * L)
    df = dfh * np.sqrt(max(n, 1)) * np.exp((0.5 * n - 1) * L)
    if np.isscalar(z) or np.ndim(z) == 0:
        return complex(f[0]), complex(df[0])
    return f, df


def covariance_kernel(z: complex, w: complex, n: int) -> complex:
    """K(z, w) = (1 + z conj(w))^n, assembled in log space.

    The integer exponent makes the phase branch-independent; the modulus is
    exp(n Re log(1 + z conj(w))), exact to ~n*eps relative.
    """
    q = 1.0 + complex(z) * np.conj(complex(w))
    if q == 0.0:
        return 0.0j if n > 0 else 1.0 + 0.0j
    logq = np.log(q)
    re = n * logq.real
    im = n * logq.imag
    if re > 709.0:
        return complex(np.inf, np.inf)
    return complex(np.exp(re) * np.exp(1j * im))


@dataclass(frozen=True)
class GefTruncation:
    """Truncated planar Gaussian Taylor series sum_{j<=M} a_j z^j/sqrt(j!).

    Valid as a reference process on the disk |z| <= radius: the truncation
    tail variance sum_{j>M} radius^{2j}/j! is below `tail_tol` there.
    """

    order: int
    coeffs: np.ndarray
    radius: float
    tail_tol: float
    tail_bound: float = field(default=0.0)

    def __post_init__(self):
        self.coeffs.setflags(write=False)

    def __call__(self, z):
        zs = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(zs)
        for c in self.coeffs[::-1]:
            out = out * zs + c
        return out

    def derivative(self, z):
        zs = np.asarray(z, dtype=np.complex128)
        out = np.zeros_like(zs)
        for j in range(self.order, 0, -1):
            out = out * zs + j * self.coeffs[j]
        return out


def _gef_tail(order: int, r2: float) -> float:
    # sum_{j>order} r2^j / j!, summed directly from the first tail term
    j = order + 1
    log_term = j * np.log(r2) - gammaln(j + 1) if r2 > 0 else -np.inf
    if log_term > 700.0:
        return np.inf
    term = np.exp(log_term)
    total = 0.0
    while term > 0.0 and j < order + 4000:
        total += term
        j += 1
        term *= r2 / j
        if term < total * 1e-18 and term < 1e-320:
            break
    return total


def gef_min_order(radius: float, tail_tol: float) -> int:
    """Smallest M with sum_{j>M} radius^{2j}/j! < tail_tol."""
    r2 = radius * radius
    lo = max(int(np.ceil(r2)), 1)  # tail is huge below ~e r^2
    if _gef_tail(lo, r2) < tail_tol:
        return lo
    hi = lo + 8
    while _gef_tail(hi, r2) >= tail_tol:  # gallop up, then bisect
        lo = hi
        hi = 2 * hi
        if lo > 100_000:
            raise ValueError(
                f"radius={radius}, tail_tol={tail_tol} needs truncation order > 1e5"
            )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _gef_tail(mid, r2) >= tail_tol:
            lo = mid
        else:
            hi = mid
    if hi > 100_000:
        raise ValueError(
            f"radius={radius}, tail_tol={tail_tol} needs truncation order > 1e5"
        )
    return hi


def sample_gef(
    M: int, radius: float, tail_tol: float, stream: ComplexGaussianStream
) -> GefTruncation:
    """Draw a truncated planar Gaussian Taylor series.

    If the requested order M leaves tail variance above tail_tol on the
    disk |z| <= radius, the order is raised to the minimum sufficient one;
    combinations needing M > 1e5 are rejected.
    """
    m_min = gef_min_order(radius, tail_tol)
    m = max(M, m_min)
    if m > 100_000:
        raise ValueError(f"truncation order {m} exceeds the 1e5 guard")
    rng = stream.generator()
    raw = complex_normals(rng, m + 1)
    j = np.arange(m + 1)
    coeffs = raw * np.exp(-0.5 * gammaln(j + 1))
    return GefTruncation(
        order=m,
        coeffs=coeffs,
        radius=radius,
        tail_tol=tail_tol,
        tail_bound=_gef_tail(m, radius * radius),
    )
