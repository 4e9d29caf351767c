"""Divided differences, conditioned Gaussian vectors, zero intensities.

Densities here follow the convention that makes them O(n^k) and constant
for the one-point function: rho_{l,m,p} is taken with respect to the
uniform sphere measure mu in every argument,

    rho_{l,m,p}(w, z) = n^{l+m} Lambda_{l,m,p}(w, z) / det Cov(fhat(z_j)),

with Lambda the conditional moment E[prod log|fhat(w_t)| * prod
|Dfhat(z_j)|^2 log^{p_j}|Dfhat(z_j)| | f(z_j) = 0].  The Lebesgue form is
recovered by multiplying with the mu densities of the arguments.

The two-point function is evaluated through its rotation-reduced closed
form: after moving z to the origin it depends only on the spherical
distance, and the conditional fourth moment collapses by the complex Wick
identity E|X|^2|Y|^2 = E|X|^2 E|Y|^2 + |E[X conj(Y)]|^2.  The pair
correlation gap rho_2 - rho_1^2 is assembled symbolically so that the
exponentially small far-field values come out without cancellation; that
is what makes the clustering-decay fit possible down to gaps ~ 1e-100.

Near-diagonal queries (|z - w| sqrt(n) below a configured threshold) are
refused: there the conditioning block is nearly degenerate and the honest
treatment is through divided differences, which this module provides with
a spectrally accurate Cauchy-contour oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .polymodel import ComplexGaussianStream, complex_normals
from .sphere import apply_isometry, mu_density, random_isometry, spherical_distance

__all__ = [
    "DividedDiffContext",
    "ConditionedGaussian",
    "DensityQuery",
    "NearDegenerateError",
    "divided_difference",
    "divided_difference_contour",
    "newton_table",
    "dd_matrix",
    "dd_covariance_gef",
    "conditioned_covariance",
    "rho_1",
    "rho_2",
    "rho_2_from_query",
    "rho_2_gap",
    "rho_lmp_mc",
    "clustering_gap",
]

# Minimum scaled separation sqrt(n)*|z - w| accepted by rho_2; below this the
# (f(z), f(w)) block is nearly degenerate and divided differences are the
# appropriate tool.
DEGENERACY_THRESHOLD = 1e-3

# Clustering fits only apply at separations >= CLUSTER_D_MIN / sqrt(n).
CLUSTER_D_MIN = 5.0

CONTOUR_NODES_START = 256
CONTOUR_NODES_MAX = 1 << 16
CONTOUR_AGREEMENT = 1e-10


class NearDegenerateError(ValueError):
    pass


# ---------------------------------------------------------------------------
# divided differences


def newton_table(points, values) -> np.ndarray:
    """Triangular divided-difference table for distinct points.

    Row k of the returned (m, m) array holds f[z_1..z_{k+1}] in column k;
    entry [i, j] is f[z_{i-j+1}, ..., z_{i+1}] in the usual recurrence
    layout (column 0 = values).
    """
    z = np.asarray(points, dtype=np.complex128)
    m = len(z)
    table = np.zeros((m, m), dtype=np.complex128)
    table[:, 0] = np.asarray(values, dtype=np.complex128)
    for j in range(1, m):
        for i in range(j, m):
            table[i, j] = (table[i, j - 1] - table[i - 1, j - 1]) / (z[i] - z[i - j])
    return table


def divided_difference(f, points, fvals=None) -> complex:
    """f[z_1, ..., z_m] by the Newton recurrence (contour for repeats).

    `f` is any evaluable analytic function; with repeated points the
    recurrence divides by zero, so those cases are routed to the contour
    integral, which extends the definition by continuity
    (f[z,...,z] = f^{(m-1)}(z)/(m-1)!).
    """
    z = np.asarray(points, dtype=np.complex128)
    if len(z) == 0:
        raise ValueError("need at least one point")
    dmat = np.abs(z[:, None] - z[None, :])
    np.fill_diagonal(dmat, np.inf)
    if dmat.min() == 0.0:
        return divided_difference_contour(f, z)
    vals = f(z) if fvals is None else np.asarray(fvals, dtype=np.complex128)
    return complex(newton_table(z, vals)[-1, -1])


def _contour_geometry(points):
    z = np.asarray(points, dtype=np.complex128)
    center = complex(np.mean(z))
    radius = float(np.max(np.abs(z - center))) + 1.0
    # enlarge while the circle passes within 1e-6 of a point
    while np.min(np.abs(np.abs(z - center) - radius)) < 1e-6:
        radius += 0.5
    return center, radius


def divided_difference_contour(f, points, center=None, radius=None) -> complex:
    """Cauchy-integral form of the divided difference.

    Trapezoidal rule on a circle enclosing the points, spectrally accurate
    for analytic f; node count doubles from 256 until two successive values
    agree to 1e-10.
    """
    z = np.asarray(points, dtype=np.complex128)
    if center is None or radius is None:
        center, radius = _contour_geometry(z)
    else:
        radius = max(radius, float(np.max(np.abs(z - center))) + 1e-3)
        while np.min(np.abs(np.abs(z - center) - radius)) < 1e-6:
            radius += 0.5

    def value(nodes):
        theta = 2.0 * np.pi * np.arange(nodes) / nodes
        ring = center + radius * np.exp(1j * theta)
        den = np.ones(nodes, dtype=np.complex128)
        for zk in z:
            den *= ring - zk
        return complex(np.mean(f(ring) * radius * np.exp(1j * theta) / den))

    nodes = CONTOUR_NODES_START
    prev = value(nodes)
    while nodes < CONTOUR_NODES_MAX:
        nodes *= 2
        cur = value(nodes)
        if abs(cur - prev) <= CONTOUR_AGREEMENT * max(1.0, abs(cur)):
            return cur
        prev = cur
    return prev


@dataclass(frozen=True)
class DividedDiffContext:
    """Points with their Newton table and the contour used as oracle."""

    points: np.ndarray
    newton_table: np.ndarray
    contour_center: complex
    contour_radius: float

    @classmethod
    def build(cls, f, points) -> "DividedDiffContext":
        z = np.asarray(points, dtype=np.complex128)
        center, radius = _contour_geometry(z)
        table = newton_table(z, f(z))
        return cls(z, table, center, radius)

    def top(self) -> complex:
        return complex(self.newton_table[-1, -1])


def dd_matrix(points) -> np.ndarray:
    """Lower-triangular M with (f(z_i))_i = M (f[z_1..z_k])_k.

    Entry (i, k) = prod_{j<k} (z_i - z_j) for k <= i (Newton basis
    evaluated at z_i); det M = prod_{i<j} (z_j - z_i).
    """
    z = np.asarray(points, dtype=np.complex128)
    m = len(z)
    M = np.zeros((m, m), dtype=np.complex128)
    for i in range(m):
        acc = 1.0 + 0.0j
        M[i, 0] = acc
        for k in range(1, i + 1):
            acc *= z[i] - z[k - 1]
            M[i, k] = acc
    return M


def dd_covariance_gef(points) -> np.ndarray:
    """Covariance of (g[z_1], g[z_1, z_2], ..., g[z_1..z_m]) for the planar
    Gaussian Taylor series with kernel e^{z conj(w)} (distinct points)."""
    z = np.asarray(points, dtype=np.complex128)
    K = np.exp(z[:, None] * np.conj(z[None, :]))
    Minv = np.linalg.inv(dd_matrix(z))
    return Minv @ K @ Minv.conj().T


# ---------------------------------------------------------------------------
# normalized covariance kernels


def _khat_elliptic(z, w, n):
    q = 1.0 + z * np.conj(w)
    if q == 0.0:
        return 0.0j
    return np.exp(
        n * np.log(q) - 0.5 * n * (np.log1p(abs(z) ** 2) + np.log1p(abs(w) ** 2))
    )


def _fdhat_elliptic(z, w, n):
    # E[fhat(z) conj(Dfhat(w))] = sqrt(n) z (1+z conj(w))^{n-1} * norms
    q = 1.0 + z * np.conj(w)
    norms = -0.5 * n * np.log1p(abs(z) ** 2) - (0.5 * n - 1.0) * np.log1p(abs(w) ** 2)
    if q == 0.0:  # antipodal pair; (n-1) power of 0 is 1 only for n = 1
        return math.sqrt(n) * z * np.exp(norms) if n == 1 else 0.0j
    return math.sqrt(n) * z * np.exp((n - 1) * np.log(q) + norms)


def _ddhat_elliptic(z, w, n):
    q = 1.0 + z * np.conj(w)
    norms = -(0.5 * n - 1.0) * (np.log1p(abs(z) ** 2) + np.log1p(abs(w) ** 2))
    if q == 0.0:
        # (q + (n-1) z conj(w)) q^{n-2} at q = 0: nonzero for n = 1 (q^{n-1}
        # has exponent 0) and n = 2 ((n-1) z conj(w) survives)
        if n == 1:
            return np.exp(norms) + 0.0j
        if n == 2:
            return (n - 1) * z * np.conj(w) * np.exp(norms)
        return 0.0j
    return (q + (n - 1) * z * np.conj(w)) * np.exp((n - 2) * np.log(q) + norms)


def _khat_gef(z, w):
    return np.exp(z * np.conj(w) - 0.5 * abs(z) ** 2 - 0.5 * abs(w) ** 2)


def _fdhat_gef(z, w):
    return z * _khat_gef(z, w)


def _ddhat_gef(z, w):
    return (1.0 + z * np.conj(w)) * _khat_gef(z, w)


def _kernel_triplet(kernel, n):
    if kernel == "elliptic":
        if n is None or n < 1:
            raise ValueError("elliptic kernel needs degree n >= 1")
        return (
            lambda z, w: _khat_elliptic(z, w, n),
            lambda z, w: _fdhat_elliptic(z, w, n),
            lambda z, w: _ddhat_elliptic(z, w, n),
        )
    if kernel == "gef":
        return _khat_gef, _fdhat_gef, _ddhat_gef
    raise ValueError(f"unknown kernel {kernel!r}")


# ---------------------------------------------------------------------------
# conditioned Gaussian vectors


@dataclass(frozen=True)
class DensityQuery:
    """Arguments of rho_{l,m,p}: l field points w, m zero points z, powers p."""

    ell: int
    m: int
    powers: tuple
    w_points: tuple
    z_points: tuple

    def __post_init__(self):
        if self.ell < 0 or self.m < 0 or self.ell + self.m < 1:
            raise ValueError("need ell + m >= 1")
        if len(self.powers) != self.m:
            raise ValueError("powers must have one entry per z point")
        if len(self.w_points) != self.ell or len(self.z_points) != self.m:
            raise ValueError("point counts disagree with (ell, m)")
        pts = tuple(self.w_points) + tuple(self.z_points)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if pts[i] == pts[j]:
                    raise ValueError(f"points must be pairwise distinct, got {pts}")


@dataclass(frozen=True)
class ConditionedGaussian:
    """Covariance of (fhat(z_j), Dfhat(z_j), fhat(w_t)) and its Schur
    complement on the event {f(z_j) = 0 for all j}."""

    full_cov: np.ndarray
    conditioned_cov: np.ndarray
    log_det_condition: float
    condition_number: float

    def __post_init__(self):
        for arr in (self.full_cov, self.conditioned_cov):
            arr.setflags(write=False)

    def validate(self, tol_scale: float = 1e-10) -> None:
        herm = np.max(np.abs(self.full_cov - self.full_cov.conj().T))
        if herm > 1e-12 * max(1.0, np.max(np.abs(self.full_cov))):
            raise AssertionError(f"full covariance not Hermitian: {herm:.2e}")
        if self.conditioned_cov.size:
            eig = np.linalg.eigvalsh(self.conditioned_cov)
            tr = float(np.trace(self.conditioned_cov).real)
            if eig.min() < -tol_scale * max(tr, 1.0):
                raise AssertionError(
                    f"conditioned covariance not PSD: min eig {eig.min():.2e}"
                )


def conditioned_covariance(
    q: DensityQuery, n: int | None, kernel: str = "elliptic"
) -> ConditionedGaussian:
    """Assemble the joint covariance for a density query and condition it.

    Ordering: [fhat(z_1..z_m), Dfhat(z_1..z_m), fhat(w_1..w_l)].  The Schur
    complement is taken against the fhat(z) block with a Hermitian solve;
    a conditioning block singular to working precision raises
    NearDegenerateError naming the closest z pair (the near-diagonal
    degeneracy regime).
    """
    kf, fd, dd = _kernel_triplet(kernel, n)
    zs = [complex(z) for z in q.z_points]
    ws = [complex(w) for w in q.w_points]
    m, ell = q.m, q.ell
    dim = 2 * m + ell
    cov = np.zeros((dim, dim), dtype=np.complex128)
    for a in range(m):
        for b in range(m):
            cov[a, b] = kf(zs[a], zs[b])
            cov[a, m + b] = fd(zs[a], zs[b])
            cov[m + a, b] = np.conj(fd(zs[b], zs[a]))
            cov[m + a, m + b] = dd(zs[a], zs[b])
    for a in range(m):
        for t in range(ell):
            cov[a, 2 * m + t] = kf(zs[a], ws[t])
            cov[2 * m + t, a] = np.conj(cov[a, 2 * m + t])
            cov[m + a, 2 * m + t] = np.conj(fd(ws[t], zs[a]))
            cov[2 * m + t, m + a] = np.conj(cov[m + a, 2 * m + t])
    for s in range(ell):
        for t in range(ell):
            cov[2 * m + s, 2 * m + t] = kf(ws[s], ws[t])
    cov = 0.5 * (cov + cov.conj().T)

    if m == 0:
        return ConditionedGaussian(cov, cov.copy(), 0.0, 1.0)

    c11 = cov[:m, :m]
    c12 = cov[:m, m:]
    c22 = cov[m:, m:]
    cond = float(np.linalg.cond(c11))
    if not np.isfinite(cond) or cond > 1e14:
        pair = _closest_pair(zs)
        raise NearDegenerateError(
            f"conditioning block nearly degenerate (cond={cond:.2e}); closest "
            f"z pair {pair}; use the divided-difference path at this separation"
        )
    sign, logdet = np.linalg.slogdet(c11)
    schur = c22 - c12.conj().T @ linalg.solve(c11, c12, assume_a="her")
    schur = 0.5 * (schur + schur.conj().T)
    return ConditionedGaussian(cov, schur, float(logdet), cond)


def _closest_pair(zs):
    best = (0, 1, np.inf)
    for i in range(len(zs)):
        for j in range(i + 1, len(zs)):
            d = abs(zs[i] - zs[j])
            if d < best[2]:
                best = (i, j, d)
    return f"({zs[best[0]]}, {zs[best[1]]}), |dz|={best[2]:.3e}"


# ---------------------------------------------------------------------------
# intensities


def rho_1(z, n: int, wrt: str = "mu") -> float:
    """One-point zero intensity: constant n against mu (rotation invariance),
    n * mu_density(z) against planar Lebesgue measure."""
    if wrt == "mu":
        return float(n)
    if wrt == "lebesgue":
        return float(n) * mu_density(z)
    raise ValueError(f"unknown measure {wrt!r}")


def _reduced_r2(d: float) -> float:
    # planar |w|^2 after rotating z to the origin, from chordal distance d
    return d * d / (4.0 - d * d)


def _rho2_pieces(d: float, n: int):
    if d >= 2.0:
        return 0.0, 0.0, 1.0  # r2 unused, eps2 = 0, 1 - eps2 = 1
    r2 = _reduced_r2(d)
    le = n * np.log1p(r2)
    eps2 = np.exp(-le) if le < 745.0 else 0.0
    one_minus = -np.expm1(-le)
    return r2, eps2, one_minus


def rho_2(z, w, n: int, wrt: str = "mu") -> float:
    """Two-point zero intensity via the Kac-Rice conditional fourth moment.

    Rotation invariance reduces the pair to (0, r) at the same spherical
    distance; the conditional moment is closed-form via the complex Wick
    identity, so no sampling is involved.  Symmetric in (z, w) exactly.
    """
    d = spherical_distance(z, w)
    scaled = math.sqrt(n) * d / 2.0  # ~ sqrt(n)|z-w| near the diagonal
    if scaled < DEGENERACY_THRESHOLD:
        raise NearDegenerateError(
            f"sqrt(n)*separation = {scaled:.2e} below {DEGENERACY_THRESHOLD}; "
            "the conditioning is nearly degenerate here; use divided "
            "differences for near-diagonal bounds"
        )
    r2, eps2, one_minus = _rho2_pieces(d, n)
    u = n * r2 * eps2 / one_minus
    s01_sq = eps2 * ((1.0 + r2) - n * r2 / one_minus) ** 2
    lam = (1.0 - u) ** 2 + s01_sq
    val = n * n * lam / one_minus
    if wrt == "mu":
        return float(val)
    if wrt == "lebesgue":
        return float(val) * mu_density(z) * mu_density(w)
    raise ValueError(f"unknown measure {wrt!r}")


def rho_2_gap(d: float, n: int) -> float:
    """rho_2 - rho_1^2 (mu form) at spherical distance d, assembled so the
    exponentially small far-field gap is computed without cancellation."""
    if d >= 2.0:
        return 0.0
    r2, eps2, one_minus = _rho2_pieces(d, n)
    if eps2 == 0.0:
        return 0.0
    q = n * r2 / one_minus
    x = (1.0 + r2) - q
    bracket = 1.0 + x * x - 2.0 * q + q * q * eps2
    return float(n * n * eps2 * bracket / one_minus)


def rho_2_from_query(z, w, n: int, kernel: str = "elliptic") -> float:
    """Matrix-path two-point intensity (mu form): generic conditioned
    covariance plus Wick, used to cross-check the reduced closed form."""
    q = DensityQuery(ell=0, m=2, powers=(0, 0), w_points=(), z_points=(z, w))
    cg = conditioned_covariance(q, n, kernel=kernel)
    s = cg.conditioned_cov
    lam = s[0, 0].real * s[1, 1].real + abs(s[0, 1]) ** 2
    scale = n * n if kernel == "elliptic" else 1.0
    return float(scale * lam / np.exp(cg.log_det_condition))


@dataclass(frozen=True)
class MCDensityResult:
    rho: float
    rho_se: float
    lam: float
    lam_se: float
    samples: int
    flagged: bool = False
    note: str = ""


def rho_lmp_mc(
    q: DensityQuery,
    n: int | None,
    samples: int,
    stream: ComplexGaussianStream,
    kernel: str = "elliptic",
    target_se: float | None = None,
) -> MCDensityResult:
    """Monte Carlo evaluation of rho_{l,m,p} over the conditioned Gaussian.

    Draws the conditional vector (Dfhat(z_j), fhat(w_t)), averages
    prod log|fhat(w_t)| * prod |Dfhat(z_j)|^2 log^{p_j}|Dfhat(z_j)|, then
    divides by det of the conditioning block and scales by n^{l+m}.
    Guarded to l + m <= 3 (desk scale).  If `target_se` is given and not
    reached within the sample budget the result is flagged partial.
    """
    if q.ell + q.m > 3:
        raise ValueError("rho_lmp_mc is guarded to ell + m <= 3")
    cg = conditioned_covariance(q, n, kernel=kernel)
    dim = q.m + q.ell
    eigval, eigvec = np.linalg.eigh(cg.conditioned_cov)
    eigval = np.clip(eigval, 0.0, None)
    factor = eigvec * np.sqrt(eigval)[None, :]

    rng = stream.generator()
    vals = np.empty(samples)
    chunk = 65536
    done = 0
    while done < samples:
        k = min(chunk, samples - done)
        xi = complex_normals(rng, (k, dim))
        v = xi @ factor.T.conj()
        eta = v[:, : q.m]
        etap = v[:, q.m :]
        term = np.ones(k)
        for j in range(q.m):
            aj = np.abs(eta[:, j])
            term *= aj * aj
            if q.powers[j]:
                term *= np.log(aj) ** q.powers[j]
        for t in range(q.ell):
            term *= np.log(np.abs(etap[:, t]))
        vals[done : done + k] = term
        done += k

    lam = float(np.mean(vals))
    lam_se = float(np.std(vals, ddof=1) / np.sqrt(samples))
    npow = float(n) ** (q.ell + q.m) if kernel == "elliptic" else 1.0
    scale = npow / np.exp(cg.log_det_condition)
    flagged = target_se is not None and lam_se * scale > target_se
    return MCDensityResult(
        rho=lam * scale,
        rho_se=lam_se * scale,
        lam=lam,
        lam_se=lam_se,
        samples=samples,
        flagged=bool(flagged),
        note="target SE not reached" if flagged else "",
    )


# ---------------------------------------------------------------------------
# clustering decay


@dataclass(frozen=True)
class ClusteringReport:
    n: int
    distances: np.ndarray
    nd2: np.ndarray
    gaps: np.ndarray
    slope: float
    intercept: float
    max_gap_over_family: float
    family_rel_spread: float
    matrix_check_rel: float


def default_cluster_grid(n: int, points: int = 12) -> np.ndarray:
    """d from 5/sqrt(n) up to where either 50/sqrt(n), the sphere diameter,
    or double-precision underflow of the gap cuts it off."""
    d_lo = CLUSTER_D_MIN / math.sqrt(n)
    r2_cap = math.expm1(600.0 / n)
    d_under = 2.0 * math.sqrt(r2_cap / (1.0 + r2_cap))
    d_hi = min(50.0 / math.sqrt(n), d_under, 1.95)
    if d_hi <= d_lo:
        raise ValueError(f"empty clustering grid at n={n}")
    return np.linspace(d_lo, d_hi, points)


def clustering_gap(
    n: int,
    d_grid=None,
    n_directions: int = 8,
    master_seed: int = 1234,
) -> ClusteringReport:
    """|rho_2 - rho_1 rho_1| decay against n d^2 (mu form).

    For each separation d the gap is evaluated on a rotation family of
    point pairs (images of (0, r(d)) under seeded random isometries); it is
    constant across the family up to metric round-off, and the report
    carries the observed relative spread plus a matrix-path cross-check at
    the softest grid point.  The headline number is the regression slope of
    log(gap/n^2) against n d^2, negative with magnitude >= 1/32 for this
    ensemble.
    """
    if d_grid is None:
        d_grid = default_cluster_grid(n)
    d_grid = np.asarray(d_grid, dtype=float)
    if np.any(d_grid < (CLUSTER_D_MIN - 1e-9) / math.sqrt(n)):
        raise ValueError(f"grid extends below configured D={CLUSTER_D_MIN} / sqrt(n)")

    gaps = np.abs([rho_2_gap(d, n) for d in d_grid])
    max_family = 0.0
    spread = 0.0
    for i, d in enumerate(d_grid):
        r = math.sqrt(_reduced_r2(d))
        family = []
        for k in range(n_directions):
            tau = random_isometry(ComplexGaussianStream(master_seed, 7000 + 97 * i + k))
            z1 = apply_isometry(tau, 0.0)
            z2 = apply_isometry(tau, r)
            family.append(abs(rho_2_gap(spherical_distance(z1, z2), n)))
        family = np.array(family)
        max_family = max(max_family, float(family.max()))
        if family.max() > 0:
            spread = max(spread, float((family.max() - family.min()) / family.max()))

    # matrix-path cross-check where the gap is still resolvable in doubles
    d0 = float(d_grid[0])
    r0 = math.sqrt(_reduced_r2(d0))
    gap_matrix = rho_2_from_query(0.0, r0, n) - float(n) ** 2
    rel = abs(abs(gap_matrix) - gaps[0]) / gaps[0]

    keep = gaps > 0
    nd2 = n * d_grid**2
    slope, intercept = np.polyfit(nd2[keep], np.log(gaps[keep] / n**2), 1)
    return ClusteringReport(
        n=n,
        distances=d_grid,
        nd2=nd2,
        gaps=gaps,
        slope=float(slope),
        intercept=float(intercept),
        max_gap_over_family=max_family,
        family_rel_spread=spread,
        matrix_check_rel=float(rel),
    )
