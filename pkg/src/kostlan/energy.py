"""Logarithmic energy of spherical configurations and its exact split.

For points x_1..x_n on the sphere the energy is E_n = -sum_{i != j}
log ||x_i - x_j||.  For the zero set of an elliptic polynomial this module
also computes the two rotation-invariant pieces

    I_n = n * integral of log|fhat| d(mu)   (evaluated exactly from the
          roots through Jensen's formula, no quadrature),
    S_n = sum over roots of log|Dfhat(root)|,

which satisfy the identity

    E_n = (1/2 - log 2) n^2 - (n log n)/2 + I_n - S_n + (log 2) n.

Because S_n is evaluated from the polynomial's derivative (not from the
root products), the residual of this identity is a genuine end-to-end
consistency gate coupling sampling, root finding and evaluation: it only
vanishes when the computed roots actually belong to the computed
polynomial.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import polymodel
from ._kernels import log_energy_cartesian
from .polymodel import EllipticPolynomial
from .roots import RootSet
from .sphere import SphericalConfiguration, project_many

__all__ = [
    "EnergyBreakdown",
    "CoincidentPointsError",
    "pairwise_energy",
    "pairwise_energy_planar",
    "expected_energy",
    "i_n_from_roots",
    "s_n_from_roots",
    "decomposition_check",
    "reference_curves",
]

HALF_MINUS_LOG2 = 0.5 - np.log(2.0)

COINCIDENCE_DISTANCE = 1e-14

C_MIN_LOWER = -0.0569
C_MIN_UPPER = -0.0556


class CoincidentPointsError(ValueError):
    def __init__(self, i, j, distance):
        super().__init__(
            f"points {i} and {j} coincide (distance {distance:.3e} < "
            f"{COINCIDENCE_DISTANCE})"
        )
        self.indices = (i, j)
        self.distance = distance


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy of one root configuration with its decomposition terms.

    identity_residual = E_n - [(1/2 - log2) n^2 - (n log n)/2 + I_n - S_n
    + (log2) n]; see module docstring.
    """

    n: int
    e_n: float
    i_n: float
    s_n: float
    identity_residual: float


def _energy_from_cartesian(X: np.ndarray) -> float:
    total, mind2, mi, mj = log_energy_cartesian(X)
    if mind2 < COINCIDENCE_DISTANCE**2:
        raise CoincidentPointsError(int(mi), int(mj), float(np.sqrt(mind2)))
    return float(total)


def pairwise_energy(cfg: SphericalConfiguration) -> float:
    """E_n over the i != j double sum (each unordered pair counted twice)."""
    if len(cfg) <= 1:
        return 0.0
    return _energy_from_cartesian(cfg.cartesian)


def pairwise_energy_planar(zs: np.ndarray) -> float:
    """Energy of finite planar points, projected internally (fast MC path)."""
    zs = np.asarray(zs, dtype=np.complex128)
    if zs.shape[0] <= 1:
        return 0.0
    return _energy_from_cartesian(project_many(zs))


def expected_energy(n: int) -> float:
    """Mean energy of the elliptic root ensemble:
    (1/2 - log2) n^2 - (n log n)/2 - (1/2 - log2) n."""
    if n < 1:
        raise ValueError("n >= 1 required")
    return HALF_MINUS_LOG2 * n * n - 0.5 * n * np.log(n) - HALF_MINUS_LOG2 * n


def i_n_from_roots(p: EllipticPolynomial, rs: RootSet) -> float:
    """I_n evaluated exactly via Jensen's formula.

    integral log|f_n| dmu = log|a_n| + sum_j log sqrt(1+|zeta_j|^2) and the
    mu-integral of log(1+|z|^2) is 1, so
    I_n = n (log|a_n| + sum_j 0.5 log(1+|zeta_j|^2) - n/2).
    """
    a_n = abs(p.leading)
    if a_n == 0.0:
        raise ValueError("leading coefficient vanished")
    n = p.degree
    s = float(np.sum(0.5 * np.log1p(np.abs(rs.roots) ** 2)))
    return n * (np.log(a_n) + s - 0.5 * n)


def s_n_from_roots(p: EllipticPolynomial, rs: RootSet) -> float:
    """S_n = sum_j log|Dfhat(zeta_j)|, derivative evaluated in scaled form."""
    dvals = np.abs(polymodel.eval_dnormalized(p, rs.roots))
    if np.any(dvals == 0.0):
        idx = int(np.nonzero(dvals == 0.0)[0][0])
        raise ValueError(f"zero derivative at root index {idx} (multiple root?)")
    return float(np.sum(np.log(dvals)))


def decomposition_check(p: EllipticPolynomial, rs: RootSet) -> EnergyBreakdown:
    """Evaluate E_n, I_n, S_n for one sample and the identity residual."""
    n = p.degree
    e_n = pairwise_energy_planar(rs.roots)
    i_n = i_n_from_roots(p, rs)
    s_n = s_n_from_roots(p, rs)
    predicted = (
        HALF_MINUS_LOG2 * n * n - 0.5 * n * np.log(n) + i_n - s_n + np.log(2.0) * n
    )
    return EnergyBreakdown(
        n=n, e_n=e_n, i_n=i_n, s_n=s_n, identity_residual=float(e_n - predicted)
    )


def reference_curves(n: int) -> dict:
    """Closed-form reference levels at size n.

    min_lower/min_upper bracket the true minimum through the best known
    bounds on the linear coefficient; uniform_mean is the i.i.d.-points
    average; elliptic_mean is the root-ensemble average.
    """
    if n < 2:
        raise ValueError("n >= 2 required")
    base = HALF_MINUS_LOG2 * n * n - 0.5 * n * np.log(n)
    return {
        "min_lower": base + C_MIN_LOWER * n,
        "min_upper": base + C_MIN_UPPER * n,
        "uniform_mean": HALF_MINUS_LOG2 * n * n - HALF_MINUS_LOG2 * n,
        "elliptic_mean": expected_energy(n),
    }
